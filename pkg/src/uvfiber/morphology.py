"""Grayscale morphology with flat square windows, plus background normalization.

Text suppression and background flattening both reduce to windowed min/max
filters.  A square window separates into a horizontal and a vertical 1-D run,
and each run uses the van Herk/Gil-Werman block trick, so cost per pixel is
independent of the window side.  Borders replicate everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imagebuf import Rect


@dataclass(frozen=True)
class StructuringElement:
    """Flat square window; the side must be odd so the window is centered."""

    side: int

    def __post_init__(self):
        if self.side < 1 or self.side % 2 == 0:
            raise ValueError(f"structuring element side must be odd and >= 1, got {self.side}")


@dataclass
class NormalizationTrace:
    """Intermediate images of background normalization.

    ``i0`` is the text-suppressed input, ``ibg`` its morphological background,
    ``idil`` the dilated background, and ``ratio`` the pixel-by-pixel division
    of ``i0`` by ``idil`` (plus the guard epsilon).
    """

    i0: np.ndarray
    ibg: np.ndarray
    idil: np.ndarray
    ratio: np.ndarray


def _run_extreme(arr: np.ndarray, k: int, op) -> np.ndarray:
    """Centered 1-D running max/min of width k along the last axis.

    van Herk/Gil-Werman: split into blocks of k, take in-block prefix and
    suffix extremes, combine one of each per window.  Replicate borders.
    The in-block scans step over block offsets (k-1 short vectorized passes)
    rather than ufunc.accumulate, which pays per-block overhead at small k.
    """
    if k == 1:
        return arr.copy()
    r = k // 2
    n = arr.shape[-1]
    nblocks = -(-(n + 2 * r) // k)
    prefix = np.empty(arr.shape[:-1] + (nblocks * k,))
    prefix[..., :r] = arr[..., :1]
    prefix[..., r : r + n] = arr
    # Replicating the last sample through the final block's slack keeps the
    # scans correct: extra copies of an edge value cannot change an extreme.
    prefix[..., r + n :] = arr[..., -1:]
    suffix = prefix.copy()
    pblocks = prefix.reshape(prefix.shape[:-1] + (nblocks, k))
    sblocks = suffix.reshape(pblocks.shape)
    for j in range(1, k):
        op(pblocks[..., j], pblocks[..., j - 1], out=pblocks[..., j])
        op(sblocks[..., k - 1 - j], sblocks[..., k - j], out=sblocks[..., k - 1 - j])
    # Window starting at i spans [i, i+k-1]; outputs align with the original axis.
    return op(suffix[..., :n], prefix[..., k - 1 : k - 1 + n])


def _run_extreme_rows(arr: np.ndarray, k: int, op) -> np.ndarray:
    """Same running extreme along axis 0 of a 2-D array.

    Works on whole-row slices so the vertical pass never transposes; padding
    replicates the first and last row, which also covers the slack in the
    final block (extra copies of an edge row cannot change a min or max).
    """
    if k == 1:
        return arr.copy()
    r = k // 2
    n, w = arr.shape
    nblocks = -(-(n + 2 * r) // k)
    prefix = np.empty((nblocks * k, w))
    prefix[:r] = arr[:1]
    prefix[r : r + n] = arr
    prefix[r + n :] = arr[-1:]
    suffix = prefix.copy()
    pblocks = prefix.reshape(nblocks, k, w)
    sblocks = suffix.reshape(nblocks, k, w)
    for j in range(1, k):
        op(pblocks[:, j], pblocks[:, j - 1], out=pblocks[:, j])
        op(sblocks[:, k - 1 - j], sblocks[:, k - j], out=sblocks[:, k - 1 - j])
    return op(suffix[:n], prefix[k - 1 : k - 1 + n])


def _window_extreme_2d(img: np.ndarray, side: int, op) -> np.ndarray:
    rows = _run_extreme(img, side, op)
    return _run_extreme_rows(rows, side, op)


def dilate(img: np.ndarray, se: StructuringElement) -> np.ndarray:
    """Windowed maximum over the se.side x se.side square, replicate borders."""
    return _window_extreme_2d(np.asarray(img, np.float64), se.side, np.maximum)


def erode(img: np.ndarray, se: StructuringElement) -> np.ndarray:
    """Windowed minimum over the se.side x se.side square, replicate borders."""
    return _window_extreme_2d(np.asarray(img, np.float64), se.side, np.minimum)


def opening(img: np.ndarray, se: StructuringElement) -> np.ndarray:
    """Erode then dilate: removes bright detail smaller than the window."""
    return dilate(erode(img, se), se)


def closing(img: np.ndarray, se: StructuringElement) -> np.ndarray:
    """Dilate then erode: removes dark detail smaller than the window."""
    return erode(dilate(img, se), se)


def suppress_text(img: np.ndarray, se_close: StructuringElement) -> np.ndarray:
    """Fill dark structures narrower than the window, keeping thin bright ones.

    Printed text is dark under UV light, so a closing wide enough to span
    stroke gaps erases it while leaving bright fiber lines untouched.
    """
    return closing(img, se_close)


def normalize_background(
    i0: np.ndarray,
    se_open: StructuringElement,
    se_dil: StructuringElement,
    eps: float,
) -> NormalizationTrace:
    """Divide the text-suppressed image by its dilated morphological background.

    The opening removes structures thinner than ``se_open`` (the fibers), which
    leaves the slowly varying background; dilating that background before the
    division keeps the quotient at or below ~1 for background pixels while
    fibers stand out as values well above 1.  ``eps > 0`` guards the division
    on black backgrounds.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    ibg = opening(i0, se_open)
    idil = dilate(ibg, se_dil)
    ratio = i0 / (idil + eps)
    return NormalizationTrace(i0=np.asarray(i0, np.float64), ibg=ibg, idil=idil, ratio=ratio)


def mask_photo_region(img: np.ndarray, region: Rect) -> np.ndarray:
    """Set samples inside the region to 1.0, the ratio-neutral background value.

    The region is clipped to the image; an empty intersection returns the
    image unchanged (a fresh copy either way).
    """
    out = np.array(img, np.float64, copy=True)
    clip = region.clipped(img.shape[1], img.shape[0])
    if clip is not None:
        x0, y0, x1, y1 = clip
        out[y0:y1, x0:x1] = 1.0
    return out
