"""Raster image handling: grayscale conversion, sub-pixel sampling, netpbm I/O.

Conventions used across the package:

* A *raster image* is a ``uint8`` ndarray, either ``(H, W)`` (single channel)
  or ``(H, W, 3)`` (RGB, channel-interleaved).
* A *gray image* is a 2-D ``float64`` ndarray.  Loaded images live in
  ``[0, 1]``; ratio images produced by background normalization may exceed 1.
  All values are finite and non-negative.
* Pixel coordinates are ``(x, y)`` with ``x`` along columns and ``y`` along
  rows; array indexing is ``img[y, x]``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import MalformedImageError, UnreadableFileError, UnsupportedFormatError


@dataclass(frozen=True)
class Rect:
    """Axis-aligned pixel rectangle: top-left corner plus extent."""

    x: int
    y: int
    w: int
    h: int

    def clipped(self, width: int, height: int) -> tuple[int, int, int, int] | None:
        """Intersection with an image of the given size as (x0, y0, x1, y1).

        ``x1``/``y1`` are exclusive.  Returns None when the intersection is
        empty; callers treat that as a no-op region.
        """
        x0 = max(self.x, 0)
        y0 = max(self.y, 0)
        x1 = min(self.x + self.w, width)
        y1 = min(self.y + self.h, height)
        if x0 >= x1 or y0 >= y1:
            return None
        return x0, y0, x1, y1


def validate_raster(img: np.ndarray) -> np.ndarray:
    """Check raster image invariants and return the array unchanged."""
    if img.dtype != np.uint8:
        raise ValueError(f"raster image must be uint8, got {img.dtype}")
    if img.ndim == 2:
        pass
    elif img.ndim == 3 and img.shape[2] == 3:
        pass
    else:
        raise ValueError(f"raster image must be (H, W) or (H, W, 3), got {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError("raster image must be at least 1x1")
    return img


def to_grayscale(img: np.ndarray) -> np.ndarray:
    """Convert a raster image to a gray image by averaging channels.

    Three-channel input maps each pixel to (r+g+b)/(3*255); single-channel
    input maps to sample/255.  Output values lie in [0, 1].
    """
    validate_raster(img)
    if img.ndim == 2:
        return img.astype(np.float64) / 255.0
    # Channel sums are integers <= 765, exact in float64, so accumulating
    # channel planes one at a time equals summing the converted cube.
    acc = img[:, :, 0].astype(np.float64)
    acc += img[:, :, 1]
    acc += img[:, :, 2]
    acc /= 3.0 * 255.0
    return acc


def sample_bilinear(img: np.ndarray, x: float, y: float) -> float:
    """Bilinear interpolation at a real-valued coordinate, replicate borders.

    Coordinates outside the image are clamped to the border pixel, so the
    function is total for finite (x, y).
    """
    out = sample_bilinear_many(img, np.asarray([x], np.float64), np.asarray([y], np.float64))
    return float(out[0])


def sample_bilinear_many(img: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Vectorized bilinear sampling; same clamp-to-border rule as the scalar form."""
    h, w = img.shape
    x = np.clip(xs, 0.0, w - 1.0)
    y = np.clip(ys, 0.0, h - 1.0)
    if h < 2 or w < 2:
        # Degenerate axes need the explicit x1/y1 clamp; too small to optimize.
        x0 = np.floor(x).astype(np.intp)
        y0 = np.floor(y).astype(np.intp)
        x1 = np.minimum(x0 + 1, w - 1)
        y1 = np.minimum(y0 + 1, h - 1)
        fx = x - x0
        fy = y - y0
        top = img[y0, x0] * (1.0 - fx) + img[y0, x1] * fx
        bot = img[y1, x0] * (1.0 - fx) + img[y1, x1] * fx
        return top * (1.0 - fy) + bot * fy
    # Anchor cells at most at (h-2, w-2) so the four corners are one flat
    # gather each.  A coordinate sitting exactly on the far border lands in
    # the last cell with fractional part 1.0, which interpolates to the same
    # border value the clamped form produces.
    flat = np.ascontiguousarray(img).ravel()
    x0 = np.minimum(x.astype(np.intp), w - 2)
    y0 = np.minimum(y.astype(np.intp), h - 2)
    fx = x - x0
    fy = y - y0
    base = y0 * w + x0
    v00 = flat[base]
    v01 = flat[base + 1]
    v10 = flat[base + w]
    v11 = flat[base + w + 1]
    gx = 1.0 - fx
    top = gx * v00 + fx * v01
    bot = gx * v10 + fx * v11
    return top * (1.0 - fy) + bot * fy


# --- netpbm I/O -------------------------------------------------------------
#
# Mandatory formats: binary PGM (P5) and PPM (P6) with 8-bit samples, plus
# reading the plain-text variants (P2/P3).  Nothing else is supported.

_BINARY_MAGICS = {b"P5": 1, b"P6": 3}
_ASCII_MAGICS = {b"P2": 1, b"P3": 3}


def _read_header_token(data: bytes, pos: int) -> tuple[bytes, int]:
    """Next whitespace-delimited header token, skipping '#' comments."""
    n = len(data)
    while pos < n:
        c = data[pos : pos + 1]
        if c in b" \t\r\n\x0b\x0c":
            pos += 1
        elif c == b"#":
            while pos < n and data[pos : pos + 1] not in b"\r\n":
                pos += 1
        else:
            break
    start = pos
    while pos < n and data[pos : pos + 1] not in b" \t\r\n\x0b\x0c#":
        pos += 1
    if start == pos:
        raise MalformedImageError("truncated netpbm header")
    return data[start:pos], pos


def _parse_header_int(token: bytes, what: str) -> int:
    try:
        value = int(token)
    except ValueError:
        raise MalformedImageError(f"bad {what} in netpbm header: {token!r}") from None
    return value


def read_image(path: str | os.PathLike) -> np.ndarray:
    """Read a PGM/PPM file into a raster image.

    Accepts binary P5/P6 and plain-text P2/P3, with 8-bit samples (maxval
    up to 255; other maxvals are rescaled to the 0..255 range).

    Raises:
        UnreadableFileError: the file cannot be opened or read.
        UnsupportedFormatError: not a P2/P3/P5/P6 file, or deeper than 8 bits.
        MalformedImageError: header or payload is truncated or inconsistent.
    """
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as e:
        raise UnreadableFileError(f"cannot read {path}: {e}") from e
    if len(data) < 2:
        raise MalformedImageError(f"{path}: not a netpbm file (too short)")

    magic = data[:2]
    if magic not in _BINARY_MAGICS and magic not in _ASCII_MAGICS:
        raise UnsupportedFormatError(f"{path}: unsupported magic {magic!r} (want P2/P3/P5/P6)")
    channels = (_BINARY_MAGICS | _ASCII_MAGICS)[magic]

    pos = 2
    w_tok, pos = _read_header_token(data, pos)
    h_tok, pos = _read_header_token(data, pos)
    max_tok, pos = _read_header_token(data, pos)
    width = _parse_header_int(w_tok, "width")
    height = _parse_header_int(h_tok, "height")
    maxval = _parse_header_int(max_tok, "maxval")
    if width < 1 or height < 1:
        raise MalformedImageError(f"{path}: bad dimensions {width}x{height}")
    if maxval > 255:
        raise UnsupportedFormatError(f"{path}: maxval {maxval} exceeds 8-bit range")
    if maxval < 1:
        raise MalformedImageError(f"{path}: bad maxval {maxval}")

    count = width * height * channels
    if magic in _BINARY_MAGICS:
        # Exactly one whitespace byte separates the header from the raster.
        if pos >= len(data) or data[pos : pos + 1] not in b" \t\r\n\x0b\x0c":
            raise MalformedImageError(f"{path}: missing raster separator")
        pos += 1
        raster = data[pos : pos + count]
        if len(raster) < count:
            raise MalformedImageError(f"{path}: truncated raster ({len(raster)} of {count} bytes)")
        samples = np.frombuffer(raster, dtype=np.uint8, count=count).astype(np.int64)
    else:
        values = []
        for _ in range(count):
            try:
                tok, pos = _read_header_token(data, pos)
            except MalformedImageError:
                raise MalformedImageError(f"{path}: truncated raster ({len(values)} of {count} samples)") from None
            values.append(_parse_header_int(tok, "sample"))
        samples = np.asarray(values, dtype=np.int64)

    if samples.min() < 0 or samples.max() > maxval:
        raise MalformedImageError(f"{path}: sample out of 0..{maxval} range")
    if maxval != 255:
        samples = (samples * 255 + maxval // 2) // maxval
    out = samples.astype(np.uint8)
    if channels == 1:
        return out.reshape(height, width)
    return out.reshape(height, width, 3)


def quantize_unit(img: np.ndarray) -> np.ndarray:
    """Map a gray image to uint8: clamp to [0,1], scale by 255, round half up."""
    clamped = np.clip(img, 0.0, 1.0)
    return np.floor(clamped * 255.0 + 0.5).astype(np.uint8)


def write_gray(path: str | os.PathLike, img: np.ndarray) -> None:
    """Write a gray image as binary PGM (P5), quantizing with round-half-up."""
    data = quantize_unit(img)
    h, w = data.shape
    try:
        with open(path, "wb") as f:
            f.write(b"P5\n%d %d\n255\n" % (w, h))
            f.write(data.tobytes())
    except OSError as e:
        raise UnreadableFileError(f"cannot write {path}: {e}") from e


def write_raster(path: str | os.PathLike, img: np.ndarray) -> None:
    """Write a raster image as binary PGM (single channel) or PPM (RGB)."""
    validate_raster(img)
    magic = b"P5" if img.ndim == 2 else b"P6"
    h, w = img.shape[:2]
    try:
        with open(path, "wb") as f:
            f.write(magic + b"\n%d %d\n255\n" % (w, h))
            f.write(img.tobytes())
    except OSError as e:
        raise UnreadableFileError(f"cannot write {path}: {e}") from e


def write_overlay(path: str | os.PathLike, img: np.ndarray, boxes: list[Rect]) -> None:
    """Write a PPM copy of the image with 1-px red rectangle outlines.

    Single-channel input is replicated to RGB first, so sample values are
    preserved.  Boxes are clipped to the image; empty intersections draw
    nothing.
    """
    validate_raster(img)
    if img.ndim == 2:
        rgb = np.stack([img, img, img], axis=2).copy()
    else:
        rgb = img.copy()
    h, w = rgb.shape[:2]
    red = np.array([255, 0, 0], dtype=np.uint8)
    for box in boxes:
        clip = box.clipped(w, h)
        if clip is None:
            continue
        x0, y0, x1, y1 = clip
        rgb[y0, x0:x1] = red
        rgb[y1 - 1, x0:x1] = red
        rgb[y0:y1, x0] = red
        rgb[y0:y1, x1 - 1] = red
    write_raster(path, rgb)
