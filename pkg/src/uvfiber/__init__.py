"""Detection of fluorescent security fibers in UV-lit document pages.

The pipeline flattens page illumination by morphological background division,
finds curvilinear ridges through Hessian eigen-analysis of the normalized
image, links ridge pixels into fiber candidates, and renders an authenticity
verdict from the surviving fiber count.  A deterministic synthetic page
generator plus an evaluation harness make the whole chain testable end to end.
"""

from .components import ComponentParams, FiberComponent, filter_components, link_components
from .errors import (
    ConfigError,
    ImageIOError,
    ImageTooSmallError,
    InvalidSpecError,
    MalformedImageError,
    StageError,
    UnreadableFileError,
    UnsupportedFormatError,
    UvfiberError,
)
from .imagebuf import (
    Rect,
    read_image,
    to_grayscale,
    write_gray,
    write_overlay,
    write_raster,
)
from .morphology import (
    StructuringElement,
    closing,
    dilate,
    erode,
    mask_photo_region,
    normalize_background,
    opening,
    suppress_text,
)
from .pipeline import (
    DetectionReport,
    DetectorConfig,
    PipelineMaps,
    Verdict,
    decide,
    run_pipeline,
    run_pipeline_with_maps,
)
from .ridge import (
    RidgeMaps,
    RidgeParams,
    detect_ridges,
    eig_sym2,
    gaussian_smooth,
    hessian_field,
    hysteresis,
    nms,
    ridge_candidates,
    scharr_gradient,
)
from .synthgen import (
    FiberTruth,
    GroundTruth,
    Metrics,
    Rng,
    SyntheticSpec,
    evaluate,
    generate_corpus,
    generate_page,
    read_ground_truth,
    write_ground_truth,
)

__version__ = "0.1.0"

__all__ = [
    "ComponentParams",
    "ConfigError",
    "DetectionReport",
    "DetectorConfig",
    "FiberComponent",
    "FiberTruth",
    "GroundTruth",
    "ImageIOError",
    "ImageTooSmallError",
    "InvalidSpecError",
    "MalformedImageError",
    "Metrics",
    "PipelineMaps",
    "Rect",
    "RidgeMaps",
    "RidgeParams",
    "Rng",
    "StageError",
    "StructuringElement",
    "SyntheticSpec",
    "UnreadableFileError",
    "UnsupportedFormatError",
    "UvfiberError",
    "Verdict",
    "closing",
    "decide",
    "detect_ridges",
    "dilate",
    "eig_sym2",
    "erode",
    "evaluate",
    "filter_components",
    "gaussian_smooth",
    "generate_corpus",
    "generate_page",
    "hessian_field",
    "hysteresis",
    "link_components",
    "mask_photo_region",
    "nms",
    "normalize_background",
    "opening",
    "read_ground_truth",
    "read_image",
    "ridge_candidates",
    "run_pipeline",
    "run_pipeline_with_maps",
    "scharr_gradient",
    "suppress_text",
    "to_grayscale",
    "write_gray",
    "write_ground_truth",
    "write_overlay",
    "write_raster",
]
