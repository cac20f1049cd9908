"""Deterministic synthetic UV-page generator with ground truth, plus metrics.

Pages model what matters to the detector: a dark page background with a smooth
illumination gradient and sensor noise, bright fibers in one of two hues whose
brightness varies along the fiber, dark printed text strokes, an optionally
bright photo patch, and "model" pages that glow brightly but carry no fibers.

Everything is a pure function of (spec, seed).  Randomness comes from the
counter-based generator below, never from global state, so any run with the
same inputs is byte-identical.

RNG contract (fixed; do not change without regenerating stored corpora):
the i-th raw draw for seed s is ``mix64(s + i * 0x9E3779B97F4A7C15)`` over
uint64, i starting at 1, where ``mix64`` is the xorshift-multiply scramble
``z ^= z>>30; z *= 0xBF58476D1CE4E5B9; z ^= z>>27; z *= 0x94D049BB133111EB;
z ^= z>>31`` (the splitmix64 output function).  Uniform doubles in [0, 1) are
``(draw >> 11) * 2**-53``; normal pairs use Box-Muller on (1-u1, u2).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial import cKDTree

from .errors import InvalidSpecError
from .imagebuf import Rect, write_raster

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15

# Derivation offset so corpus-level draws never share stream positions with
# the page renderer running on the same page seed.
_CORPUS_STREAM_OFFSET = 0x6A09E667F3BCC909

FIBER_CROSS_SIGMA = 0.8  # px, Gaussian cross-section of a rendered fiber
TEXT_INK_LEVEL = 0.04  # UV-absorbing ink is nearly black
FIBER_CLEARANCE = 4  # px kept between fibers and text/photo regions
_WALL_MARGIN = 3.0  # polylines bounce off this inset from the borders
_MAX_PLACEMENT_ATTEMPTS = 200

# Two fiber hue templates with unit channel mean, so the grayscale amplitude
# equals the configured one.
_FIBER_HUES = np.array([[1.5, 0.75, 0.75], [0.75, 0.75, 1.5]])

# Along-fiber dimming at full modulation depth bottoms out at 0.75 of the
# amplitude; together with the 0.8 px cross-section this keeps rasterized
# centerline pixels above background + amplitude/2 on the noise-free image.
_MODULATION_SPAN = 0.25


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


class Rng:
    """Counter-based deterministic generator (see module docstring).

    ``uniforms(n)`` consumes exactly n counter slots; ``normals(n)`` consumes
    2 * ceil(n / 2).  Scalar helpers go through the same path, so scalar and
    array call sequences that consume the same counts stay in lockstep.
    """

    def __init__(self, seed: int):
        self._seed = np.uint64(seed & _MASK64)
        self._counter = 0

    def _raw(self, n: int) -> np.ndarray:
        idx = np.arange(self._counter + 1, self._counter + n + 1, dtype=np.uint64)
        self._counter += n
        with np.errstate(over="ignore"):
            return _mix64(self._seed + idx * np.uint64(_GAMMA))

    def uniforms(self, n: int) -> np.ndarray:
        """n doubles uniform in [0, 1)."""
        return (self._raw(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        return lo + (hi - lo) * float(self.uniforms(1)[0])

    def integer(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi], both ends inclusive."""
        if hi < lo:
            raise ValueError(f"empty integer range [{lo}, {hi}]")
        return min(lo + int(self.uniforms(1)[0] * (hi - lo + 1)), hi)

    def normals(self, n: int) -> np.ndarray:
        pairs = (n + 1) // 2
        u1 = self.uniforms(pairs)
        u2 = self.uniforms(pairs)
        r = np.sqrt(-2.0 * np.log1p(-u1))
        angle = 2.0 * np.pi * u2
        out = np.empty(2 * pairs)
        out[0::2] = r * np.cos(angle)
        out[1::2] = r * np.sin(angle)
        return out[:n]

    def normal(self, mu: float = 0.0, sigma: float = 1.0) -> float:
        return mu + sigma * float(self.normals(1)[0])


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of one synthetic page; see generate_page for the rendering rules."""

    width: int = 600
    height: int = 800
    background_base: float = 0.25
    background_gradient: tuple[float, float] = (0.0003, 0.0002)
    noise_sigma: float = 0.01
    fiber_count: int = 12
    fiber_length_range: tuple[float, float] = (40.0, 120.0)
    fiber_amplitude_range: tuple[float, float] = (0.25, 0.55)
    along_fiber_modulation: float = 0.6
    text_blocks: int = 4
    photo_patch: tuple[Rect, float] | None = None
    model_page: bool = False

    def validate(self) -> None:
        if self.width < 1 or self.height < 1:
            raise InvalidSpecError(f"page size must be positive, got {self.width}x{self.height}")
        if not 0.0 <= self.background_base <= 1.0:
            raise InvalidSpecError(f"background_base out of [0,1]: {self.background_base}")
        if self.noise_sigma < 0:
            raise InvalidSpecError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if not 0.0 <= self.along_fiber_modulation <= 1.0:
            raise InvalidSpecError(f"along_fiber_modulation out of [0,1]: {self.along_fiber_modulation}")
        if self.fiber_count < 0 or self.text_blocks < 0:
            raise InvalidSpecError("fiber_count and text_blocks must be >= 0")
        if self.model_page and self.fiber_count != 0:
            raise InvalidSpecError("model pages carry no fibers")
        lmin, lmax = self.fiber_length_range
        amin, amax = self.fiber_amplitude_range
        if self.fiber_count > 0:
            if not 0 < lmin <= lmax:
                raise InvalidSpecError(f"bad fiber_length_range {self.fiber_length_range}")
            if not 0 < amin <= amax <= 1:
                raise InvalidSpecError(f"bad fiber_amplitude_range {self.fiber_amplitude_range}")
            box = min(self.width, self.height) - 2.0 * _WALL_MARGIN
            if self.width < 32 or self.height < 32 or lmax > 1.5 * box:
                raise InvalidSpecError(
                    f"page {self.width}x{self.height} too small for fibers up to {lmax} px"
                )
        if self.photo_patch is not None:
            _, level = self.photo_patch
            if not 0.0 <= level <= 1.0:
                raise InvalidSpecError(f"photo patch intensity out of [0,1]: {level}")


@dataclass
class FiberTruth:
    """One rendered fiber: polyline points (n, 2) in (x, y) and its amplitude."""

    points: np.ndarray
    amplitude: float


@dataclass
class GroundTruth:
    """Per-page truth: rendered fibers, the page seed, and the model-page flag."""

    fibers: list[FiberTruth]
    seed: int
    model_page: bool


@dataclass
class Metrics:
    """Corpus metrics; tp counts recalled fibers, fp spurious components."""

    fiber_precision: float
    fiber_recall: float
    doc_accuracy: float
    tp: int
    fp: int
    fn: int


# --- page rendering ---------------------------------------------------------


def _inflate(rect: Rect, margin: int) -> Rect:
    return Rect(rect.x - margin, rect.y - margin, rect.w + 2 * margin, rect.h + 2 * margin)


def _point_in_rects(x: float, y: float, rects: list[Rect]) -> bool:
    return any(r.x <= x < r.x + r.w and r.y <= y < r.y + r.h for r in rects)


def _draw_text_blocks(canvas: np.ndarray, spec: SyntheticSpec, rng: Rng) -> list[Rect]:
    """Stamp clusters of short dark strokes arranged like text lines."""
    h, w = canvas.shape
    rects = []
    for _ in range(spec.text_blocks):
        x0 = rng.integer(2, max(2, w - 46))
        y0 = rng.integer(2, max(2, h - 32))
        n_rows = rng.integer(2, 4)
        max_x = x0
        y = y0
        for _ in range(n_rows):
            n_glyphs = rng.integer(4, 8)
            x = x0
            for _ in range(n_glyphs):
                gw = rng.integer(1, 3)
                ggap = rng.integer(1, 2)
                gx1 = min(x + gw, w)
                gy1 = min(y + 5, h)
                if x < w and y < h:
                    canvas[y:gy1, x:gx1] = np.minimum(canvas[y:gy1, x:gx1], TEXT_INK_LEVEL)
                max_x = max(max_x, gx1)
                x += gw + ggap
            y += 7
        rects.append(Rect(x0, y0, max_x - x0, min(y, h) - y0))
    return rects


def _propose_polyline(spec: SyntheticSpec, rng: Rng) -> np.ndarray:
    """Random walk with bounded turning; bounces keep every point in bounds."""
    w, h = spec.width, spec.height
    length = rng.uniform(*spec.fiber_length_range)
    n_seg = rng.integer(3, 7)
    seg_len = length / n_seg
    start_margin = min(8.0, w / 4.0, h / 4.0)
    x = rng.uniform(start_margin, w - 1 - start_margin)
    y = rng.uniform(start_margin, h - 1 - start_margin)
    heading = rng.uniform(0.0, 2.0 * np.pi)
    pts = [(x, y)]
    for i in range(n_seg):
        if i > 0:
            heading += rng.uniform(-0.5, 0.5)
        for _ in range(4):
            nx = x + seg_len * np.cos(heading)
            ny = y + seg_len * np.sin(heading)
            out_x = not (_WALL_MARGIN <= nx <= w - 1 - _WALL_MARGIN)
            out_y = not (_WALL_MARGIN <= ny <= h - 1 - _WALL_MARGIN)
            if not out_x and not out_y:
                break
            if out_x:
                heading = np.pi - heading
            if out_y:
                heading = -heading
        x, y = nx, ny
        pts.append((x, y))
    return np.asarray(pts, np.float64)


def _polyline_clear_of(points: np.ndarray, rects: list[Rect]) -> bool:
    if not rects:
        return True
    for sx, sy in zip(*_rasterize_polyline(points, step=1.0)):
        if _point_in_rects(sx, sy, rects):
            return False
    return True


def _rasterize_polyline(points: np.ndarray, step: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    """Integer pixels hit by walking the polyline at the given step (deduped)."""
    xs, ys = [], []
    for p, q in zip(points[:-1], points[1:]):
        seg = np.hypot(q[0] - p[0], q[1] - p[1])
        n = max(2, int(np.ceil(seg / step)) + 1)
        t = np.linspace(0.0, 1.0, n)
        xs.append(p[0] + t * (q[0] - p[0]))
        ys.append(p[1] + t * (q[1] - p[1]))
    x = np.rint(np.concatenate(xs)).astype(np.intp)
    y = np.rint(np.concatenate(ys)).astype(np.intp)
    keys = np.unique(x.astype(np.int64) << 32 | y.astype(np.int64))
    return (keys >> 32).astype(np.intp), (keys & 0xFFFFFFFF).astype(np.intp)


def _render_fiber(rgb: np.ndarray, points: np.ndarray, amplitude: float, hue: np.ndarray,
                  phase: float, cycles: float, depth: float) -> None:
    """Add one fiber: Gaussian cross-section, sinusoidal along-fiber dimming."""
    h, w = rgb.shape[:2]
    reach = int(np.ceil(3.0 * FIBER_CROSS_SIGMA)) + 1
    x0 = max(int(np.floor(points[:, 0].min())) - reach, 0)
    x1 = min(int(np.ceil(points[:, 0].max())) + reach + 1, w)
    y0 = max(int(np.floor(points[:, 1].min())) - reach, 0)
    y1 = min(int(np.ceil(points[:, 1].max())) + reach + 1, h)
    if x0 >= x1 or y0 >= y1:
        return
    gx, gy = np.meshgrid(np.arange(x0, x1, dtype=np.float64), np.arange(y0, y1, dtype=np.float64))

    seg_vec = np.diff(points, axis=0)
    seg_len = np.hypot(seg_vec[:, 0], seg_vec[:, 1])
    arc_start = np.concatenate([[0.0], np.cumsum(seg_len)])
    total = arc_start[-1]

    best_d2 = np.full(gx.shape, np.inf)
    best_t = np.zeros(gx.shape)
    for j in range(len(seg_len)):
        if seg_len[j] == 0:
            continue
        px, py = points[j]
        ux, uy = seg_vec[j] / seg_len[j]
        proj = np.clip((gx - px) * ux + (gy - py) * uy, 0.0, seg_len[j])
        d2 = (gx - px - proj * ux) ** 2 + (gy - py - proj * uy) ** 2
        closer = d2 < best_d2
        best_d2 = np.where(closer, d2, best_d2)
        best_t = np.where(closer, arc_start[j] + proj, best_t)

    envelope = np.exp(-best_d2 / (2.0 * FIBER_CROSS_SIGMA**2))
    envelope[best_d2 > (3.0 * FIBER_CROSS_SIGMA + 1.0) ** 2] = 0.0
    dim = (1.0 + np.sin(phase + 2.0 * np.pi * cycles * best_t / total)) / 2.0
    profile = amplitude * (1.0 - _MODULATION_SPAN * depth * dim) * envelope
    rgb[y0:y1, x0:x1] += profile[:, :, None] * hue[None, None, :]


def render_layers(spec: SyntheticSpec, seed: int) -> tuple[np.ndarray, np.ndarray, GroundTruth]:
    """Compose one page, keeping the pre-fiber canvas separate from fiber glow.

    Returns (canvas, fiber_rgb, truth): ``canvas`` is the gray background plus
    photo patch and text ink, ``fiber_rgb`` the additive fiber contribution per
    channel, both before noise and clamping.  generate_page composes these;
    tests use the split to check the rendered contrast directly.
    """
    spec.validate()
    rng = Rng(seed)
    w, h = spec.width, spec.height
    gx, gy = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    dx, dy = spec.background_gradient
    canvas = spec.background_base + dx * gx + dy * gy

    keepout: list[Rect] = []
    if spec.photo_patch is not None:
        rect, level = spec.photo_patch
        clip = rect.clipped(w, h)
        if clip is not None:
            cx0, cy0, cx1, cy1 = clip
            canvas[cy0:cy1, cx0:cx1] = level
        keepout.append(_inflate(rect, FIBER_CLEARANCE))

    keepout.extend(_inflate(r, FIBER_CLEARANCE) for r in _draw_text_blocks(canvas, spec, rng))

    fiber_rgb = np.zeros((h, w, 3))
    fibers: list[FiberTruth] = []
    for _ in range(spec.fiber_count):
        for _ in range(_MAX_PLACEMENT_ATTEMPTS):
            points = _propose_polyline(spec, rng)
            if _polyline_clear_of(points, keepout):
                break
        else:
            raise InvalidSpecError("could not place a fiber clear of text/photo regions")
        amplitude = rng.uniform(*spec.fiber_amplitude_range)
        hue = _FIBER_HUES[rng.integer(0, 1)]
        phase = rng.uniform(0.0, 2.0 * np.pi)
        cycles = rng.uniform(1.0, 3.0)
        _render_fiber(fiber_rgb, points, amplitude, hue, phase, cycles, spec.along_fiber_modulation)
        fibers.append(FiberTruth(points=points, amplitude=amplitude))

    truth = GroundTruth(fibers=fibers, seed=seed, model_page=spec.model_page)
    return canvas, fiber_rgb, truth


def generate_page(spec: SyntheticSpec, seed: int) -> tuple[np.ndarray, GroundTruth]:
    """Render one page to an RGB raster image plus its ground truth.

    Layer order: background with illumination gradient, photo patch, text ink,
    fibers, gray sensor noise; then clamp to [0, 1] and quantize to 8 bits.
    The noise field draws from a seed-derived side stream so its draws stay
    independent of how many the layout consumed.
    """
    canvas, fiber_rgb, truth = render_layers(spec, seed)
    composed = canvas[:, :, None] + fiber_rgb
    if spec.noise_sigma > 0:
        noise_rng = Rng(_derive_noise_seed(seed))
        noise = noise_rng.normals(spec.width * spec.height).reshape(spec.height, spec.width)
        composed = composed + spec.noise_sigma * noise[:, :, None]
    clamped = np.clip(composed, 0.0, 1.0)
    return np.floor(clamped * 255.0 + 0.5).astype(np.uint8), truth


def _derive_noise_seed(seed: int) -> int:
    """Separate stream for the noise field, independent of layout draws."""
    state = np.full(1, (seed + _CORPUS_STREAM_OFFSET) & _MASK64, dtype=np.uint64)
    return int(_mix64(state)[0])


# --- corpus I/O ---------------------------------------------------------------


def _truth_to_jsonable(truth: GroundTruth) -> dict:
    return {
        "seed": truth.seed,
        "model_page": truth.model_page,
        "fibers": [
            {"points": [[float(x), float(y)] for x, y in f.points], "amplitude": float(f.amplitude)}
            for f in truth.fibers
        ],
    }


def write_ground_truth(path: str | os.PathLike, truth: GroundTruth) -> None:
    with open(path, "w") as f:
        json.dump(_truth_to_jsonable(truth), f, indent=1, sort_keys=True)
        f.write("\n")


def read_ground_truth(path: str | os.PathLike) -> GroundTruth:
    with open(path) as f:
        raw = json.load(f)
    fibers = [
        FiberTruth(points=np.asarray(item["points"], np.float64), amplitude=float(item["amplitude"]))
        for item in raw["fibers"]
    ]
    return GroundTruth(fibers=fibers, seed=int(raw["seed"]), model_page=bool(raw["model_page"]))


def corpus_page_specs(
    n_authentic: int, n_model: int, base_spec: SyntheticSpec, seed: int
) -> list[tuple[str, SyntheticSpec, int]]:
    """Per-page (stem, spec, page_seed) triples for a corpus, authentic first.

    Page i uses seed + i.  Authentic pages draw their fiber count uniformly
    from [8, 25]; model pages drop all fibers and draw a bright background
    base from [0.6, 0.9].  These corpus-level draws come from an offset seed
    stream so they never collide with the page renderer's own draws.
    """
    if n_authentic < 0 or n_model < 0:
        raise ValueError("page counts must be >= 0")
    pages = []
    for i in range(n_authentic + n_model):
        page_seed = seed + i
        aux = Rng((page_seed + _CORPUS_STREAM_OFFSET) & _MASK64)
        if i < n_authentic:
            spec = replace(base_spec, model_page=False, fiber_count=aux.integer(8, 25))
        else:
            spec = replace(
                base_spec,
                model_page=True,
                fiber_count=0,
                background_base=aux.uniform(0.6, 0.9),
            )
        pages.append((f"page_{i:04d}", spec, page_seed))
    return pages


def generate_corpus(
    n_authentic: int, n_model: int, base_spec: SyntheticSpec, seed: int, out_dir: str | os.PathLike
) -> list[str]:
    """Write a corpus of PPM pages and JSON truth files; returns the stems."""
    os.makedirs(out_dir, exist_ok=True)
    stems = []
    for stem, spec, page_seed in corpus_page_specs(n_authentic, n_model, base_spec, seed):
        img, truth = generate_page(spec, page_seed)
        write_raster(os.path.join(out_dir, stem + ".ppm"), img)
        write_ground_truth(os.path.join(out_dir, stem + ".json"), truth)
        stems.append(stem)
    return stems


# --- metrics ------------------------------------------------------------------


def _segments_of(truth: GroundTruth) -> tuple[np.ndarray, np.ndarray] | None:
    starts, ends = [], []
    for f in truth.fibers:
        starts.append(f.points[:-1])
        ends.append(f.points[1:])
    if not starts:
        return None
    return np.concatenate(starts), np.concatenate(ends)


def _dist_to_segments(px: np.ndarray, py: np.ndarray, segs) -> np.ndarray:
    """Euclidean distance from each point to the nearest polyline segment."""
    p, q = segs
    d = q - p
    len2 = (d**2).sum(axis=1)
    len2 = np.where(len2 == 0, 1.0, len2)
    best = np.full(px.shape, np.inf)
    # Loop over segments: point counts dwarf segment counts here.
    for j in range(p.shape[0]):
        t = np.clip(((px - p[j, 0]) * d[j, 0] + (py - p[j, 1]) * d[j, 1]) / len2[j], 0.0, 1.0)
        dist2 = (px - p[j, 0] - t * d[j, 0]) ** 2 + (py - p[j, 1] - t * d[j, 1]) ** 2
        best = np.minimum(best, dist2)
    return np.sqrt(best)


def evaluate(reports: list, truths: list[GroundTruth], match_dist: float = 3.0) -> Metrics:
    """Score detection reports against ground truth.

    A detected component counts as matched when at least 60% of its pixels lie
    within match_dist of a true fiber polyline; a true fiber counts as recalled
    when at least 50% of its rasterized centerline pixels lie within match_dist
    of a detected pixel.  tp counts recalled fibers, fp unmatched components,
    fn missed fibers; 0/0 ratios read as 1.  Document accuracy compares each
    verdict with the page's model flag.
    """
    if len(reports) != len(truths):
        raise ValueError(f"got {len(reports)} reports for {len(truths)} truth records")
    tp = fp = fn = 0
    correct = 0
    for report, truth in zip(reports, truths):
        segs = _segments_of(truth)
        for comp in report.fibers:
            if segs is None:
                fp += 1
                continue
            dists = _dist_to_segments(
                comp.pixels[:, 0].astype(np.float64), comp.pixels[:, 1].astype(np.float64), segs
            )
            if (dists <= match_dist).mean() < 0.6:
                fp += 1
        detected = (
            np.concatenate([c.pixels for c in report.fibers]) if report.fibers else np.empty((0, 2))
        )
        tree = cKDTree(detected) if detected.size else None
        for fiber in truth.fibers:
            cx, cy = _rasterize_polyline(fiber.points)
            if tree is None:
                fn += 1
                continue
            dists, _ = tree.query(np.column_stack([cx, cy]), distance_upper_bound=match_dist + 1e-9)
            if np.isfinite(dists).mean() >= 0.5:
                tp += 1
            else:
                fn += 1
        expected = "FAKE" if truth.model_page else "AUTHENTIC"
        if report.verdict == expected:
            correct += 1

    precision = 1.0 if tp + fp == 0 else tp / (tp + fp)
    recall = 1.0 if tp + fn == 0 else tp / (tp + fn)
    accuracy = 1.0 if not reports else correct / len(reports)
    return Metrics(
        fiber_precision=precision, fiber_recall=recall, doc_accuracy=accuracy, tp=tp, fp=fp, fn=fn
    )
