"""Reference implementations the test suite trusts.

Everything here favors obviousness over speed: direct window scans, explicit
breadth-first searches, iterative flood fill.  None of it shares code with the
library, so agreement between the two is evidence, not tautology.
"""

from __future__ import annotations

from collections import deque

import numpy as np


def window_extreme_scan(img: np.ndarray, side: int, kind: str) -> np.ndarray:
    """Windowed min/max by scanning every window, replicate borders.

    kind is "max" (dilation) or "min" (erosion).  O(n * side^2).
    """
    assert side % 2 == 1
    h, w = img.shape
    r = side // 2
    out = np.empty((h, w), dtype=np.float64)
    pick = max if kind == "max" else min
    for y in range(h):
        for x in range(w):
            best = None
            for dy in range(-r, r + 1):
                for dx in range(-r, r + 1):
                    yy = min(max(y + dy, 0), h - 1)
                    xx = min(max(x + dx, 0), w - 1)
                    v = float(img[yy, xx])
                    best = v if best is None else pick(best, v)
            out[y, x] = best
    return out


def bfs_components(mask: np.ndarray, gap: int) -> list[frozenset[tuple[int, int]]]:
    """Partition of mask pixels under Chebyshev-distance-<=-gap adjacency.

    Breadth-first search from each unvisited pixel; pixels are (x, y) tuples.
    """
    h, w = mask.shape
    seen = np.zeros((h, w), dtype=bool)
    parts = []
    for sy in range(h):
        for sx in range(w):
            if not mask[sy, sx] or seen[sy, sx]:
                continue
            queue = deque([(sx, sy)])
            seen[sy, sx] = True
            part = []
            while queue:
                x, y = queue.popleft()
                part.append((x, y))
                for dy in range(-gap, gap + 1):
                    for dx in range(-gap, gap + 1):
                        yy, xx = y + dy, x + dx
                        if 0 <= yy < h and 0 <= xx < w and mask[yy, xx] and not seen[yy, xx]:
                            seen[yy, xx] = True
                            queue.append((xx, yy))
            parts.append(frozenset(part))
    return parts


def floodfill_hysteresis(
    survivors: np.ndarray, strength: np.ndarray, t_low: float, t_high: float
) -> np.ndarray:
    """Two-threshold linking by explicit flood fill from strong pixels.

    A pixel enters the result iff it survives thinning, has strength >= t_low,
    and an 8-connected path of such pixels reaches one with strength >= t_high.
    """
    h, w = survivors.shape
    weak = survivors & (strength >= t_low)
    out = np.zeros((h, w), dtype=bool)
    stack = [
        (x, y) for y in range(h) for x in range(w) if weak[y, x] and strength[y, x] >= t_high
    ]
    for x, y in stack:
        out[y, x] = True
    while stack:
        x, y = stack.pop()
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                yy, xx = y + dy, x + dx
                if 0 <= yy < h and 0 <= xx < w and weak[yy, xx] and not out[yy, xx]:
                    out[yy, xx] = True
                    stack.append((xx, yy))
    return out


def nms_scan(strength: np.ndarray, direction: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    """Per-pixel non-maximum suppression by the written rule, one pixel at a time.

    The rounded offset maximizes the dot product with the pixel's direction
    over the 8 neighbor offsets, ties to the earlier offset in the fixed
    E, NE, N, NW, W, SW, S, SE order.  Out-of-bounds strength counts as 0.
    """
    offsets = [(1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1)]
    units = [(ox / np.hypot(ox, oy), oy / np.hypot(ox, oy)) for ox, oy in offsets]
    h, w = strength.shape
    out = np.zeros((h, w), dtype=bool)
    for y in range(h):
        for x in range(w):
            if not candidates[y, x]:
                continue
            vx, vy = direction[y, x]
            best, rx, ry = None, 0, 0
            for (ox, oy), (ux, uy) in zip(offsets, units):
                dot = vx * ux + vy * uy
                if best is None or dot > best:
                    best, rx, ry = dot, ox, oy
            s = strength[y, x]
            ax, ay = x + rx, y + ry
            bx, by = x - rx, y - ry
            ahead = strength[ay, ax] if 0 <= ay < h and 0 <= ax < w else 0.0
            behind = strength[by, bx] if 0 <= by < h and 0 <= bx < w else 0.0
            if s >= ahead and s > behind:
                out[y, x] = True
    return out


def gaussian_blur_scan(img: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur by direct summation, replicate borders.

    Kernel radius ceil(3*sigma), normalized to sum 1; the tabulation mirrors
    the documented contract rather than any library routine.
    """
    if sigma == 0:
        return img.copy()
    radius = int(np.ceil(3.0 * sigma))
    taps = np.exp(-np.arange(-radius, radius + 1) ** 2 / (2.0 * sigma * sigma))
    taps /= taps.sum()
    h, w = img.shape
    tmp = np.zeros((h, w), dtype=np.float64)
    for j, t in enumerate(taps):
        shift = j - radius
        cols = np.clip(np.arange(w) + shift, 0, w - 1)
        tmp += t * img[:, cols]
    out = np.zeros((h, w), dtype=np.float64)
    for j, t in enumerate(taps):
        shift = j - radius
        rows = np.clip(np.arange(h) + shift, 0, h - 1)
        out += t * tmp[rows, :]
    return out


def splitmix_reference(seed: int, index: int) -> int:
    """Scalar counter-mode mix: the index-th raw 64-bit draw for a seed.

    Mirrors the documented generator contract with plain Python integers.
    """
    mask = (1 << 64) - 1
    z = (seed + index * 0x9E3779B97F4A7C15) & mask
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & mask
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & mask
    return z ^ (z >> 31)
