"""End-to-end detector: normalize, find ridges, link fibers, render a verdict."""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field

import numpy as np

from . import components as comp
from . import morphology as morph
from . import ridge
from .errors import StageError, UvfiberError
from .imagebuf import Rect, to_grayscale, validate_raster


class Verdict(str, enum.Enum):
    AUTHENTIC = "AUTHENTIC"
    FAKE = "FAKE"


@dataclass(frozen=True)
class DetectorConfig:
    """Every tunable of the detection pipeline.

    Structuring element sides are odd pixel counts; ``eps`` guards the
    background division; the ridge thresholds act on the ratio image where
    background sits near 1.  ``photo_region`` masks the owner photograph on
    the normalized image when supplied.
    """

    se_close_side: int = 5
    se_open_side: int = 11
    se_dil_side: int = 11
    eps: float = 1.0 / 255.0
    smooth_sigma: float = 1.0
    probe_delta: float = 1.0
    t_low: float = 0.02
    t_high: float = 0.06
    gap: int = 3
    min_length: int = 15
    min_fiber_count: int = 3
    photo_region: Rect | None = None

    def __post_init__(self):
        for name in ("se_close_side", "se_open_side", "se_dil_side"):
            side = getattr(self, name)
            if side < 1 or side % 2 == 0:
                raise ValueError(f"{name} must be odd and >= 1, got {side}")
        if self.eps <= 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        self.ridge_params()  # validates sigma, delta and thresholds
        if self.gap < 1:
            raise ValueError(f"gap must be >= 1, got {self.gap}")
        if self.min_length < 1:
            raise ValueError(f"min_length must be >= 1, got {self.min_length}")
        if self.min_fiber_count < 1:
            raise ValueError(f"min_fiber_count must be >= 1, got {self.min_fiber_count}")

    def ridge_params(self) -> ridge.RidgeParams:
        return ridge.RidgeParams(
            smooth_sigma=self.smooth_sigma,
            probe_delta=self.probe_delta,
            t_low=self.t_low,
            t_high=self.t_high,
        )


@dataclass
class DetectionReport:
    """Per-page detection outcome plus the intermediates worth echoing."""

    width: int
    height: int
    config: DetectorConfig
    fibers: list[comp.FiberComponent]
    fiber_count: int
    verdict: Verdict
    timings_ms: dict[str, float] = field(default_factory=dict)


@dataclass
class PipelineMaps:
    """Intermediate images of one run, for debugging and map dumps.

    ``ratio`` is the normalized image actually fed to ridge detection (photo
    region already masked when configured); ``strength`` holds the surviving
    ridge strengths after suppression.
    """

    i0: np.ndarray
    ibg: np.ndarray
    idil: np.ndarray
    ratio: np.ndarray
    strength: np.ndarray
    final: np.ndarray


def decide(fiber_count: int, min_fiber_count: int) -> Verdict:
    """AUTHENTIC iff at least the minimum allowed number of fibers was found."""
    return Verdict.AUTHENTIC if fiber_count >= min_fiber_count else Verdict.FAKE


class _StageTimer:
    def __init__(self):
        self.timings_ms: dict[str, float] = {}

    def run(self, stage: str, fn, *args):
        start = time.perf_counter()
        try:
            result = fn(*args)
        except UvfiberError as e:
            raise StageError(stage, e) from e
        self.timings_ms[stage] = (time.perf_counter() - start) * 1000.0
        return result


def run_pipeline(img: np.ndarray, config: DetectorConfig) -> DetectionReport:
    """Run the full detector on one raster image.

    Stage order: grayscale conversion, text suppression, background
    normalization, optional photo masking, ridge detection, component linking,
    length filtering, verdict.  Deterministic apart from the recorded timings.
    """
    report, _ = run_pipeline_with_maps(img, config)
    return report


def run_pipeline_with_maps(img: np.ndarray, config: DetectorConfig) -> tuple[DetectionReport, PipelineMaps]:
    """Like run_pipeline, but also return the intermediate images."""
    validate_raster(img)
    timer = _StageTimer()

    gray = timer.run("grayscale", to_grayscale, img)
    i0 = timer.run("suppress_text", morph.suppress_text, gray, morph.StructuringElement(config.se_close_side))
    trace = timer.run(
        "normalize",
        morph.normalize_background,
        i0,
        morph.StructuringElement(config.se_open_side),
        morph.StructuringElement(config.se_dil_side),
        config.eps,
    )
    ratio = trace.ratio
    if config.photo_region is not None:
        ratio = timer.run("mask_photo", morph.mask_photo_region, ratio, config.photo_region)
    else:
        timer.timings_ms["mask_photo"] = 0.0
    maps = timer.run("detect_ridges", ridge.detect_ridges, ratio, config.ridge_params())
    linked = timer.run("link_components", comp.link_components, maps.final, config.gap)
    fibers = timer.run("filter_components", comp.filter_components, linked, config.min_length)
    verdict = timer.run("decide", decide, len(fibers), config.min_fiber_count)

    h, w = gray.shape
    report = DetectionReport(
        width=w,
        height=h,
        config=config,
        fibers=fibers,
        fiber_count=len(fibers),
        verdict=verdict,
        timings_ms=timer.timings_ms,
    )
    intermediates = PipelineMaps(
        i0=i0,
        ibg=trace.ibg,
        idil=trace.idil,
        ratio=ratio,
        strength=maps.strength,
        final=maps.final,
    )
    return report, intermediates
