"""8-bit raster images and the bilinear resampler shared by the pipeline.

Resampling convention (used everywhere an image changes size): output pixel
centers are mapped into source coordinates with the half-pixel rule
``src = (dst + 0.5) * (n_src / n_dst) - 0.5`` and source samples are clamped
at the borders. Downsampling is plain bilinear interpolation at those sample
points, no antialias prefilter.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import DataIOError, ParameterError
from .fsio import atomic_write_bytes

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class RasterImage:
    """Row-major 8-bit image, 1 (gray) or 3 (RGB) channels."""

    array: np.ndarray  # (height, width, channels) uint8

    def __post_init__(self):
        a = self.array
        if a.ndim != 3 or a.dtype != np.uint8:
            raise ParameterError("image array must be (h, w, c) uint8")
        if a.shape[2] not in (1, 3):
            raise ParameterError(f"channels must be 1 or 3, got {a.shape[2]}")
        if a.shape[0] < 1 or a.shape[1] < 1:
            raise ParameterError("image must be at least 1x1")

    @property
    def height(self) -> int:
        return self.array.shape[0]

    @property
    def width(self) -> int:
        return self.array.shape[1]

    @property
    def channels(self) -> int:
        return self.array.shape[2]

    @staticmethod
    def from_array(a: np.ndarray) -> "RasterImage":
        if a.ndim == 2:
            a = a[:, :, None]
        return RasterImage(np.ascontiguousarray(a, dtype=np.uint8))

    def __eq__(self, other) -> bool:
        return isinstance(other, RasterImage) and np.array_equal(self.array, other.array)


def luma(img: RasterImage) -> np.ndarray:
    """Luma plane as float64 (0.299 R + 0.587 G + 0.114 B)."""
    a = img.array.astype(np.float64)
    if img.channels == 1:
        return a[:, :, 0]
    wr, wg, wb = LUMA_WEIGHTS
    return wr * a[:, :, 0] + wg * a[:, :, 1] + wb * a[:, :, 2]


def _axis_taps(n_src: int, n_dst: int):
    pos = (np.arange(n_dst, dtype=np.float64) + 0.5) * (n_src / n_dst) - 0.5
    lo = np.floor(pos).astype(np.int64)
    frac = pos - lo
    i0 = np.clip(lo, 0, n_src - 1)
    i1 = np.clip(lo + 1, 0, n_src - 1)
    return i0, i1, frac


def resize_bilinear(arr: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize of a float (h, w) or (h, w, c) array."""
    if out_h < 1 or out_w < 1:
        raise ParameterError("output size must be at least 1x1")
    a = np.asarray(arr, dtype=np.float64)
    squeeze = a.ndim == 2
    if squeeze:
        a = a[:, :, None]
    y0, y1, fy = _axis_taps(a.shape[0], out_h)
    x0, x1, fx = _axis_taps(a.shape[1], out_w)
    fy = fy[:, None, None]
    fx = fx[None, :, None]
    top = a[y0][:, x0] * (1.0 - fx) + a[y0][:, x1] * fx
    bot = a[y1][:, x0] * (1.0 - fx) + a[y1][:, x1] * fx
    out = top * (1.0 - fy) + bot * fy
    return out[:, :, 0] if squeeze else out


def quantize_u8(arr: np.ndarray) -> np.ndarray:
    """Round half-even, clamp to [0, 255], cast to uint8."""
    return np.clip(np.rint(arr), 0.0, 255.0).astype(np.uint8)


def load_image(path: str | os.PathLike) -> RasterImage:
    try:
        with Image.open(path) as im:
            mode = "L" if im.mode in ("L", "1", "I;16") else "RGB"
            a = np.asarray(im.convert(mode))
    except FileNotFoundError as e:
        raise DataIOError(f"image file not found: {path}") from e
    except OSError as e:
        raise DataIOError(f"cannot read image {path}: {e}") from e
    return RasterImage.from_array(a)


def save_png(img: RasterImage, path: str | os.PathLike) -> None:
    a = img.array[:, :, 0] if img.channels == 1 else img.array
    buf = io.BytesIO()
    try:
        Image.fromarray(a).save(buf, format="PNG")
    except OSError as e:
        raise DataIOError(f"cannot encode image {path}: {e}") from e
    atomic_write_bytes(path, buf.getvalue())


def encode_jpeg(img: RasterImage, quality: int, chroma_420: bool) -> bytes:
    """Baseline JPEG bytes at the given integer quality (1..100)."""
    a = img.array[:, :, 0] if img.channels == 1 else img.array
    buf = io.BytesIO()
    Image.fromarray(a).save(
        buf, format="JPEG", quality=quality, subsampling=2 if chroma_420 else 0
    )
    return buf.getvalue()


def decode_jpeg(data: bytes, channels: int) -> RasterImage:
    with Image.open(io.BytesIO(data)) as im:
        a = np.asarray(im.convert("L" if channels == 1 else "RGB"))
    return RasterImage.from_array(a)
