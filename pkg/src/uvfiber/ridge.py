"""Ridge-point localization on a normalized document image.

A fiber pixel is modeled as a local brightness maximum across the fiber: the
smaller Hessian eigenvalue is negative there, and the pixel outshines both
probe points a short step away along that eigenvalue's eigenvector.  Surviving
points are thinned with non-maximum suppression and filtered with two-threshold
hysteresis, as in the Canny detector.

Derivatives use the 3x3 Scharr kernels (weights 3, 10, 3, scaled so a unit
ramp has gradient exactly 1), which keep the estimated ridge direction stable
under rotation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage

from .errors import ImageTooSmallError
from .imagebuf import sample_bilinear_many


@dataclass
class GradientField:
    """First derivatives, intensity per pixel distance."""

    gx: np.ndarray
    gy: np.ndarray


@dataclass
class HessianField:
    """Second derivatives; ixy serves both off-diagonal entries."""

    ixx: np.ndarray
    ixy: np.ndarray
    iyy: np.ndarray


@dataclass(frozen=True)
class EigenPair:
    """Eigenvalues of a symmetric 2x2 matrix and the unit eigenvector of the smaller one."""

    lambda_min: float
    lambda_max: float
    v_min: tuple[float, float]


@dataclass(frozen=True)
class RidgeParams:
    """Tunables of the ridge stage.

    ``smooth_sigma`` stabilizes the second derivatives, ``probe_delta`` is the
    brightness-comparison step in pixels, and ``t_low``/``t_high`` are the
    hysteresis thresholds on ridge strength (strengths are measured on the
    ratio image, where background sits near 1).
    """

    smooth_sigma: float = 1.0
    probe_delta: float = 1.0
    t_low: float = 0.02
    t_high: float = 0.06

    def __post_init__(self):
        if self.smooth_sigma <= 0 or self.probe_delta <= 0 or self.t_low <= 0 or self.t_high <= 0:
            raise ValueError("ridge parameters must all be positive")
        if self.t_low > self.t_high:
            raise ValueError(f"t_low={self.t_low} must not exceed t_high={self.t_high}")


@dataclass
class RidgeMaps:
    """Per-pixel outputs of the ridge stages.

    ``strength`` is -lambda_min where ``candidates`` is set and 0 elsewhere;
    ``direction`` holds the cross-ridge unit vector per pixel (last axis x, y);
    ``final`` is None until hysteresis runs.
    """

    strength: np.ndarray
    direction: np.ndarray
    candidates: np.ndarray
    final: np.ndarray | None = None


# Border pixels whose second derivatives lean on replicated data are never
# candidates; two chained 3x3 kernels reach 2 pixels out.
BORDER_EXCLUSION = 2

_INV_SQRT2 = float(1.0 / np.sqrt(2.0))

# Neighbor offsets in tie-break order: E, NE, N, NW, W, SW, S, SE (y axis down).
NEIGHBOR_OFFSETS = np.array(
    [(1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1)], dtype=np.intp
)
_UNIT_OFFSETS = NEIGHBOR_OFFSETS / np.hypot(NEIGHBOR_OFFSETS[:, 0], NEIGHBOR_OFFSETS[:, 1])[:, None]


def _gauss_taps(sigma: float) -> np.ndarray:
    radius = int(np.ceil(3.0 * sigma))
    taps = np.exp(-np.arange(-radius, radius + 1, dtype=np.float64) ** 2 / (2.0 * sigma * sigma))
    taps /= taps.sum()
    return taps


def gaussian_smooth(img: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with kernel radius ceil(3*sigma), replicate borders.

    The kernel is normalized to sum 1; sigma = 0 returns the input unchanged.
    The two separable pass orders are averaged, which makes the result exactly
    symmetric under 90-degree rotations: scipy's 1-D correlation adds opposite
    taps pairwise for symmetric kernels, so a single pass already commutes
    bitwise with axis flips and transposes, and averaging removes the one
    remaining asymmetry (which order rounds first).  Later stages rely on this:
    their strict comparisons would otherwise flip on rounding-level artifacts.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    img = np.asarray(img, np.float64)
    if sigma == 0:
        return img.copy()
    radius = int(np.ceil(3.0 * sigma))
    kw = dict(mode="nearest", radius=radius)
    out = ndimage.gaussian_filter1d(ndimage.gaussian_filter1d(img, sigma, axis=1, **kw), sigma, axis=0, **kw)
    out += ndimage.gaussian_filter1d(ndimage.gaussian_filter1d(img, sigma, axis=0, **kw), sigma, axis=1, **kw)
    out *= 0.5
    return out


def _require_size(img: np.ndarray, minimum: int, what: str) -> None:
    h, w = img.shape
    if h < minimum or w < minimum:
        raise ImageTooSmallError(f"{what} needs at least {minimum}x{minimum} pixels, got {w}x{h}")


def _scharr_x_padded(p: np.ndarray) -> np.ndarray:
    # Smooth across y with (3,10,3)/16, central difference across x.
    sy = p[:-2, :] + p[2:, :]
    sy *= 3.0
    sy += 10.0 * p[1:-1, :]
    out = sy[:, 2:] - sy[:, :-2]
    out *= 1.0 / 32.0
    return out


def _scharr_y_padded(p: np.ndarray) -> np.ndarray:
    sx = p[:, :-2] + p[:, 2:]
    sx *= 3.0
    sx += 10.0 * p[:, 1:-1]
    out = sx[2:, :] - sx[:-2, :]
    out *= 1.0 / 32.0
    return out


def _scharr_x(img: np.ndarray) -> np.ndarray:
    return _scharr_x_padded(np.pad(img, 1, mode="edge"))


def _scharr_y(img: np.ndarray) -> np.ndarray:
    return _scharr_y_padded(np.pad(img, 1, mode="edge"))


def scharr_gradient(img: np.ndarray) -> GradientField:
    """First derivatives via the rotation-optimized 3x3 Scharr kernels."""
    img = np.asarray(img, np.float64)
    _require_size(img, 3, "scharr gradient")
    return GradientField(gx=_scharr_x(img), gy=_scharr_y(img))


def hessian_field(img: np.ndarray) -> HessianField:
    """Second derivatives from two chained Scharr passes."""
    img = np.asarray(img, np.float64)
    _require_size(img, 5, "hessian field")
    p = np.pad(img, 1, mode="edge")
    pgx = np.pad(_scharr_x_padded(p), 1, mode="edge")
    return HessianField(
        ixx=_scharr_x_padded(pgx),
        ixy=_scharr_y_padded(pgx),
        iyy=_scharr_y(_scharr_y_padded(p)),
    )


def _eig_min_fields(a, b, c):
    """lambda_min of [[a, b], [b, c]] and its unit eigenvector, elementwise.

    The eigenvector is sign-fixed to the x > 0 half plane (y >= 0 on the
    boundary); the degenerate isotropic case returns (1, 0).
    """
    a = np.asarray(a, np.float64)
    b = np.asarray(b, np.float64)
    c = np.asarray(c, np.float64)
    b2 = b * b
    diff = a - c
    disc = diff * diff
    disc += 4.0 * b2
    np.sqrt(disc, out=disc)
    lmin = a + c
    lmin -= disc
    lmin *= 0.5
    # Two algebraically equivalent eigenvector formulas; pick the better
    # conditioned one per element.  Both candidate magnitudes share the b^2
    # term, and lmin sits below both diagonal entries, so the larger of
    # |lmin - a| and |lmin - c| follows the sign of a - c directly (rounding
    # lmin - a and lmin - c is monotone, so float ties only merge the two).
    use1 = diff >= 0.0
    e1 = lmin - a
    e2 = lmin - c
    vx = np.where(use1, b, e2)
    vy = np.where(use1, e1, b)
    # Normalizing by a positive scale keeps the sign pattern, so the
    # half-plane flip folds into the scale as a factor of -1.
    norm2 = vx * vx
    norm2 += vy * vy
    degenerate = norm2 == 0.0
    flip = vx < 0
    flip |= (vx == 0) & (vy < 0)
    np.copyto(norm2, 1.0, where=degenerate)
    np.sqrt(norm2, out=norm2)
    scale = np.where(flip, -1.0, 1.0)
    scale /= norm2
    vx *= scale
    vy *= scale
    np.copyto(vx, 1.0, where=degenerate)
    np.copyto(vy, 0.0, where=degenerate)
    # An exact diagonal tie (a == c, b != 0) has the exactly diagonal
    # eigenvector (1, -sign(b))/sqrt(2).  Writing the closed form instead of
    # the rounded quotient keeps the field bit-identical under 90-degree
    # rotations, where the same tie reappears with b negated.
    tie = diff == 0.0
    tie &= ~degenerate
    if tie.any():
        np.copyto(vx, _INV_SQRT2, where=tie)
        np.copyto(vy, -_INV_SQRT2, where=tie & (b > 0))
        np.copyto(vy, _INV_SQRT2, where=tie & (b < 0))
    return lmin, vx, vy


def _eig_sym2_fields(a, b, c):
    """Eigen-decomposition of [[a, b], [b, c]], elementwise over arrays.

    Returns (lambda_min, lambda_max, vx, vy) with v the unit eigenvector of
    lambda_min, sign-fixed to the x > 0 half plane (y >= 0 on the boundary).
    """
    a = np.asarray(a, np.float64)
    b = np.asarray(b, np.float64)
    c = np.asarray(c, np.float64)
    lmin, vx, vy = _eig_min_fields(a, b, c)
    diff = a - c
    lmax = 0.5 * (a + c + np.sqrt(diff * diff + 4.0 * b * b))
    return lmin, lmax, vx, vy


def eig_sym2(a: float, b: float, c: float) -> EigenPair:
    """Eigen-analysis of the symmetric 2x2 matrix [[a, b], [b, c]]."""
    # The field routines use in-place ufuncs, which need ndim >= 1.
    lmin, lmax, vx, vy = _eig_sym2_fields(
        np.array([a], np.float64), np.array([b], np.float64), np.array([c], np.float64)
    )
    vx = float(vx[0]) + 0.0  # normalize -0.0
    vy = float(vy[0]) + 0.0
    return EigenPair(lambda_min=float(lmin[0]), lambda_max=float(lmax[0]), v_min=(vx, vy))


def _probe_values(flat: np.ndarray, width: int, idx: np.ndarray,
                  ox: np.ndarray, oy: np.ndarray) -> np.ndarray:
    """Bilinear samples at per-pixel offsets (ox, oy) from the pixels ``idx``.

    Interpolation weights come from the offsets alone, never from absolute
    positions (whose rounding differs between image sides), and the corner
    terms are summed diagonal pairs first.  Both choices are load-bearing:
    together they make every value, and every strict comparison on it, bit
    identical under 90-degree rotations.  Callers guarantee the cells stay
    inside the image.
    """
    fx = np.floor(ox)
    fy = np.floor(oy)
    base = idx + fy.astype(np.intp) * width + fx.astype(np.intp)
    hx = ox - fx
    hy = oy - fy
    lx = (fx + 1.0) - ox
    ly = (fy + 1.0) - oy
    v00 = flat[base]
    v01 = flat[base + 1]
    v10 = flat[base + width]
    v11 = flat[base + width + 1]
    t00 = (lx * ly) * v00
    t11 = (hx * hy) * v11
    t01 = (hx * ly) * v01
    t10 = (lx * hy) * v10
    return (t00 + t11) + (t01 + t10)


def ridge_candidates(ratio: np.ndarray, params: RidgeParams) -> RidgeMaps:
    """Gate pixels through the ridge model on the smoothed ratio image.

    A pixel is a candidate iff its smaller Hessian eigenvalue is negative and
    it is strictly brighter than both probe points ``probe_delta`` away along
    the corresponding eigenvector.  Candidate strength is -lambda_min.
    """
    ratio = np.asarray(ratio, np.float64)
    smoothed = gaussian_smooth(ratio, params.smooth_sigma)
    hess = hessian_field(smoothed)
    lmin, vx, vy = _eig_min_fields(hess.ixx, hess.ixy, hess.iyy)

    h, w = ratio.shape
    m = BORDER_EXCLUSION
    probe_ok = lmin < 0
    probe_ok[:m] = False
    probe_ok[h - m :] = False
    probe_ok[:, :m] = False
    probe_ok[:, w - m :] = False

    ys, xs = np.nonzero(probe_ok)
    if xs.size:
        idx = ys * w + xs
        dvx = params.probe_delta * vx.ravel()[idx]
        dvy = params.probe_delta * vy.ravel()[idx]
        center = smoothed.ravel()[idx]
        keep = center > sample_bilinear_many(smoothed, xs + dvx, ys + dvy)
        # The second probe matters only where the first passed; sampling a
        # subset cannot change the conjunction.
        ki = np.nonzero(keep)[0]
        if ki.size:
            far = sample_bilinear_many(smoothed, xs[ki] - dvx[ki], ys[ki] - dvy[ki])
            keep[ki] = center[ki] > far
        ys, xs = ys[keep], xs[keep]

    candidates = np.zeros((h, w), dtype=bool)
    candidates[ys, xs] = True
    strength = np.zeros((h, w))
    strength[ys, xs] = -lmin[ys, xs]
    direction = np.stack([vx, vy], axis=-1)
    return RidgeMaps(strength=strength, direction=direction, candidates=candidates)


def round_direction(vx: np.ndarray, vy: np.ndarray) -> np.ndarray:
    """Nearest of the 8 neighbor offsets by dot product, ties by fixed order.

    Returns integer offsets of shape (n, 2).
    """
    dots = np.outer(vx, _UNIT_OFFSETS[:, 0]) + np.outer(vy, _UNIT_OFFSETS[:, 1])
    return NEIGHBOR_OFFSETS[np.argmax(dots, axis=1)]


# Rows of NEIGHBOR_OFFSETS reachable from the closed right half plane:
# E, NE, N, S, SE.  A sign-fixed unit direction lies within 22.5 degrees of
# one of these (dot >= cos 22.5), while W, NW, and SW are at least 45 degrees
# away (dot <= cos 45), so they can never win or tie the argmax.
_RIGHT_ROWS = np.array([0, 1, 2, 6, 7], dtype=np.intp)


def _round_direction_halfplane(vx: np.ndarray, vy: np.ndarray) -> np.ndarray:
    # Same result as round_direction for sign-fixed directions; the subset
    # keeps the original relative order, so ties break identically.
    dots = np.outer(vx, _UNIT_OFFSETS[_RIGHT_ROWS, 0]) + np.outer(vy, _UNIT_OFFSETS[_RIGHT_ROWS, 1])
    return NEIGHBOR_OFFSETS[_RIGHT_ROWS[np.argmax(dots, axis=1)]]


def nms(maps: RidgeMaps) -> RidgeMaps:
    """Thin candidates across the ridge direction.

    A candidate survives iff its strength is >= the strength one rounded
    offset ahead and strictly > one offset behind; the asymmetry breaks
    two-pixel plateaus deterministically.  Pixels outside the image count
    as strength 0.
    """
    strength = maps.strength
    h, w = strength.shape
    ys, xs = np.nonzero(maps.candidates)
    survivors = np.zeros((h, w), dtype=bool)
    if xs.size:
        idx = ys * w + xs
        dirs = maps.direction.reshape(-1, 2)[idx]
        # Direction maps hold sign-fixed eigenvectors, so the restricted
        # rounding is exact here.
        offs = _round_direction_halfplane(dirs[:, 0], dirs[:, 1])
        padded = np.pad(strength, 1, mode="constant").ravel()
        doff = offs[:, 1] * (w + 2) + offs[:, 0]
        at = (ys + 1) * (w + 2) + (xs + 1)
        center = strength.ravel()[idx]
        ahead = padded[at + doff]
        behind = padded[at - doff]
        keep = (center >= ahead) & (center > behind)
        survivors[ys[keep], xs[keep]] = True
    return replace(
        maps,
        candidates=survivors,
        strength=np.where(survivors, strength, 0.0),
        final=None,
    )


def hysteresis(maps: RidgeMaps, t_low: float, t_high: float) -> np.ndarray:
    """Two-threshold linking: keep weak pixels only when 8-connected to strong ones.

    Operates on the thinned candidate set; connectivity runs through pixels of
    strength >= t_low only.
    """
    if t_low > t_high:
        raise ValueError(f"t_low={t_low} must not exceed t_high={t_high}")
    weak = maps.candidates & (maps.strength >= t_low)
    strong = weak & (maps.strength >= t_high)
    if not strong.any():
        return np.zeros_like(weak)
    labels, _ = ndimage.label(weak, structure=np.ones((3, 3), dtype=bool))
    kept = np.unique(labels[strong])
    return weak & np.isin(labels, kept)


def detect_ridges(ratio: np.ndarray, params: RidgeParams) -> RidgeMaps:
    """Full ridge stage: smooth, gate, thin, and hysteresis-link.

    Returns all intermediate maps for debugging plus the final binary mask.
    """
    maps = ridge_candidates(ratio, params)
    maps = nms(maps)
    final = hysteresis(maps, params.t_low, params.t_high)
    return replace(maps, final=final)
