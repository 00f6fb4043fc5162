"""Bit-exact codecs for the two raster interchange formats.

Predictions travel as single-channel portable float maps (PFM) because
affine-invariant codes can be negative; ground truth travels as 16-bit PNG
with a fixed divisor (stored value 0 means "no return").
"""

from __future__ import annotations

import io

import numpy as np
from PIL import Image, UnidentifiedImageError

from .core import DepthRaster
from .errors import BadMagic, DecodeError, NotPng16, TruncatedPayload, ZeroScale

_FLOAT_SIZE = 4
_WHITESPACE = b" \t\n\r\f\v"


def _next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    """Return the next whitespace-delimited token and the offset just past it."""
    n = len(data)
    while pos < n and data[pos:pos + 1] in _WHITESPACE:
        pos += 1
    start = pos
    while pos < n and data[pos:pos + 1] not in _WHITESPACE:
        pos += 1
    return data[start:pos], pos


def read_pfm(data: bytes) -> DepthRaster:
    """Decode a single-channel PFM buffer into a raster.

    Header is ``Pf\\n{width} {height}\\n{scale}\\n``; a negative scale marks
    little-endian floats, positive marks big-endian.  Rows are stored
    bottom-to-top and flipped into the top-to-bottom raster convention.
    Non-finite samples come back as invalid pixels.
    """
    if data[:2] != b"Pf":
        raise BadMagic("not a single-channel PFM (expected magic 'Pf')")
    try:
        tok_w, pos = _next_token(data, 2)
        tok_h, pos = _next_token(data, pos)
        tok_scale, pos = _next_token(data, pos)
        width = int(tok_w)
        height = int(tok_h)
        scale = float(tok_scale)
    except ValueError as exc:
        raise BadMagic(f"malformed PFM header: {exc}") from None
    if width < 1 or height < 1:
        raise BadMagic(f"bad PFM dimensions {width}x{height}")
    if scale == 0.0:
        raise ZeroScale("PFM scale must be non-zero")
    # Exactly one whitespace byte separates the header from the payload.
    payload = data[pos + 1:]
    need = width * height * _FLOAT_SIZE
    if len(payload) < need:
        raise TruncatedPayload(f"PFM payload has {len(payload)} bytes, needs {need}")
    dtype = "<f4" if scale < 0 else ">f4"
    grid = np.frombuffer(payload[:need], dtype=dtype).reshape(height, width)
    grid = np.flipud(grid).astype(np.float32)  # native byte order, top-to-bottom
    return DepthRaster(grid, np.isfinite(grid))


def write_pfm(raster: DepthRaster) -> bytes:
    """Inverse of :func:`read_pfm`; always little-endian, invalid pixels as NaN."""
    grid = raster.values.astype(np.float32, copy=True)
    grid[~raster.valid] = np.nan
    header = f"Pf\n{raster.width} {raster.height}\n-1.0\n".encode("ascii")
    return header + np.flipud(grid).astype("<f4").tobytes()


def read_depth_png16(data: bytes, divisor: float = 256.0) -> DepthRaster:
    """Decode a 16-bit single-channel PNG as depth in meters (stored / divisor).

    Stored value 0 is the missing-data sentinel and maps to an invalid pixel.
    """
    if divisor <= 0:
        raise ValueError("divisor must be positive")
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except UnidentifiedImageError:
        raise NotPng16("buffer is not a PNG image") from None
    except Exception as exc:
        raise DecodeError(f"PNG decode failed: {exc}") from None
    if img.format != "PNG":
        raise NotPng16(f"expected PNG, got {img.format}")
    if img.mode not in ("I;16", "I;16B"):
        raise NotPng16(f"expected 16-bit single-channel PNG, got mode {img.mode}")
    stored = np.asarray(img, dtype=np.uint16)
    depth = stored.astype(np.float64) / float(divisor)
    return DepthRaster(depth, stored != 0)


def write_depth_png16(raster: DepthRaster, divisor: float = 256.0) -> bytes:
    """Encode depth as 16-bit PNG; invalid pixels become the 0 sentinel.

    Values are rounded to the nearest representable step (1/divisor meters)
    and clipped to the uint16 range; valid pixels that would round to 0 are
    stored as 1 to keep them distinguishable from missing data.
    """
    if divisor <= 0:
        raise ValueError("divisor must be positive")
    vals = np.where(raster.valid, raster.values, 0.0)
    stored = np.clip(np.rint(vals * float(divisor)), 0, 65535).astype(np.uint16)
    stored[raster.valid & (stored == 0)] = 1
    stored[~raster.valid] = 0
    img = Image.fromarray(stored)  # mode I;16
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def write_mask_png(mask) -> bytes:
    """Encode a boolean mask as a 1-bit PNG (debug dumps of edge maps)."""
    mask = np.asarray(getattr(mask, "edges", mask), dtype=bool)
    img = Image.fromarray(mask).convert("1")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()
