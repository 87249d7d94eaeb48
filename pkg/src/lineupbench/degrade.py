"""Probe preprocessing and the five degradation families.

All operators map uint8 images to uint8 images of the same size (after the
initial crop to 160x160), are pure, and are deterministic given their full
argument tuple. Parameter semantics:

  blur   - odd kernel width k, sigma = (k - 1) / 6, truncated at radius
           (k - 1) / 2, unit-sum, edge replication; k = 1 is the identity.
  scale  - bilinear downsample to max(1, round(s * side)) per side, then
           bilinear upsample back; computed in float, quantized once.
  noise  - additive white Gaussian noise at a target SNR in dB relative to
           the standard deviation of the input's luma; clamped to [0, 255].
  jpeg   - encode/decode round trip at integer quality round(100 * q),
           4:2:0 chroma below q = 0.9, 4:4:4 at or above.
  gamma  - per channel, out = round(255 * (in / 255) ** g).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .raster import (
    RasterImage,
    decode_jpeg,
    encode_jpeg,
    luma,
    quantize_u8,
    resize_bilinear,
)
from .rng import normals

FAMILIES = ("blur", "scale", "noise", "jpeg", "gamma")

CROP_SIZE = 160


@dataclass(frozen=True)
class DegradationSpec:
    family: str
    level: float
    seed: int = 0  # consumed by the noise family only

    def __post_init__(self):
        validate_level(self.family, self.level)


@dataclass(frozen=True)
class DegradationGrid:
    """Ordered degradation levels for one family, mildest first."""

    family: str
    levels: tuple[float, ...]

    def __post_init__(self):
        if len(self.levels) < 2:
            raise ParameterError("a degradation grid needs at least 2 levels")
        if len(set(self.levels)) != len(self.levels):
            raise ParameterError("degradation grid levels must be distinct")
        for lv in self.levels:
            validate_level(self.family, lv)


# severity-ordered reference grids; gamma runs dark-crush to blown-out and is
# split into its two monotone branches at calibration time
DEFAULT_GRIDS = {
    "blur": (1.0, 5.0, 9.0, 13.0, 17.0),
    "scale": (0.8625, 0.6625, 0.4625, 0.2625, 0.0625),
    "noise": (16.0, 8.0, 0.0, -8.0, -16.0),
    "jpeg": (0.9, 0.7, 0.5, 0.3, 0.1),
    "gamma": (0.05, 0.3, 1.3, 3.3, 5.3),
}


def validate_level(family: str, level: float) -> None:
    if family not in FAMILIES:
        raise ParameterError(f"unknown degradation family {family!r}")
    if family == "blur":
        k = level
        if k != int(k) or int(k) < 1 or int(k) % 2 == 0:
            raise ParameterError(f"blur level must be an odd integer >= 1, got {level}")
    elif family in ("scale", "jpeg"):
        if not 0.0 < level <= 1.0:
            raise ParameterError(f"{family} level must be in (0, 1], got {level}")
    elif family == "gamma":
        if not level > 0.0:
            raise ParameterError(f"gamma level must be > 0, got {level}")
    elif family == "noise":
        if not math.isfinite(level):
            raise ParameterError(f"noise level must be a finite SNR in dB, got {level}")


def crop_resize(img: RasterImage,
                bbox: tuple[int, int, int, int] | None = None) -> RasterImage:
    """Crop to bbox (or the centered square) and resize to 160x160 bilinear."""
    h, w = img.height, img.width
    if bbox is None:
        side = min(h, w)
        x, y = (w - side) // 2, (h - side) // 2
        bw = bh = side
    else:
        x, y, bw, bh = bbox
        if bw < 1 or bh < 1:
            raise ParameterError(f"bbox {bbox} has degenerate size")
        if x < 0 or y < 0 or x + bw > w or y + bh > h:
            raise ParameterError(f"bbox {bbox} outside image bounds {w}x{h}")
    crop = img.array[y:y + bh, x:x + bw].astype(np.float64)
    out = resize_bilinear(crop, CROP_SIZE, CROP_SIZE)
    return RasterImage(quantize_u8(out))


def gaussian_kernel(k: int) -> np.ndarray:
    """1-D unit-sum Gaussian, width k, sigma = (k - 1) / 6; k = 1 gives [1]."""
    if k < 1 or k % 2 == 0:
        raise ParameterError(f"kernel width must be odd and >= 1, got {k}")
    if k == 1:
        return np.ones(1, dtype=np.float64)
    sigma = (k - 1) / 6.0
    x = np.arange(k, dtype=np.float64) - (k - 1) / 2.0
    g = np.exp(-0.5 * (x / sigma) ** 2)
    return g / g.sum()


def _convolve_axis(a: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    radius = (len(kernel) - 1) // 2
    if radius == 0:
        return a
    pad = [(0, 0)] * a.ndim
    pad[axis] = (radius, radius)
    padded = np.pad(a, pad, mode="edge")
    out = np.zeros_like(a, dtype=np.float64)
    for tap, weight in enumerate(kernel):
        sl = [slice(None)] * a.ndim
        sl[axis] = slice(tap, tap + a.shape[axis])
        out += weight * padded[tuple(sl)]
    return out


def apply_blur(img: RasterImage, k: int) -> RasterImage:
    if not isinstance(k, (int, np.integer)) or k < 1 or k % 2 == 0:
        raise ParameterError(f"blur kernel width must be an odd integer >= 1, got {k}")
    if k == 1:
        return RasterImage(img.array.copy())
    kern = gaussian_kernel(int(k))
    a = img.array.astype(np.float64)
    a = _convolve_axis(a, kern, axis=0)
    a = _convolve_axis(a, kern, axis=1)
    return RasterImage(quantize_u8(a))


def apply_scale(img: RasterImage, s: float) -> RasterImage:
    if not 0.0 < s <= 1.0:
        raise ParameterError(f"scale factor must be in (0, 1], got {s}")
    if s == 1.0:
        return RasterImage(img.array.copy())
    h, w = img.height, img.width
    # round half-even, matching the documented contract
    dh = max(1, round(s * h))
    dw = max(1, round(s * w))
    a = img.array.astype(np.float64)
    small = resize_bilinear(a, dh, dw)
    back = resize_bilinear(small, h, w)
    return RasterImage(quantize_u8(back))


def apply_noise(img: RasterImage, snr_db: float, seed: int) -> RasterImage:
    if not math.isfinite(snr_db):
        raise ParameterError(f"snr_db must be finite, got {snr_db}")
    sigma_image = float(np.std(luma(img)))
    if sigma_image == 0.0:
        return RasterImage(img.array.copy())
    sigma_noise = sigma_image * 10.0 ** (-snr_db / 20.0)
    n = img.height * img.width * img.channels
    z = normals(seed, n).reshape(img.array.shape)
    noisy = img.array.astype(np.float64) + sigma_noise * z
    return RasterImage(quantize_u8(noisy))


def apply_jpeg(img: RasterImage, q: float) -> RasterImage:
    if not 0.0 < q <= 1.0:
        raise ParameterError(f"jpeg quality must be in (0, 1], got {q}")
    quality = int(round(100.0 * q))
    data = encode_jpeg(img, quality=quality, chroma_420=q < 0.9)
    out = decode_jpeg(data, channels=img.channels)
    assert out.array.shape == img.array.shape
    return out


def apply_gamma(img: RasterImage, g: float) -> RasterImage:
    if not g > 0.0:
        raise ParameterError(f"gamma must be > 0, got {g}")
    # 256-entry LUT: exact per the contract and cheap
    lut = quantize_u8(255.0 * (np.arange(256, dtype=np.float64) / 255.0) ** g)
    return RasterImage(lut[img.array])


def apply_spec(img: RasterImage, spec: DegradationSpec) -> RasterImage:
    if spec.family == "blur":
        return apply_blur(img, int(spec.level))
    if spec.family == "scale":
        return apply_scale(img, spec.level)
    if spec.family == "noise":
        return apply_noise(img, spec.level, spec.seed)
    if spec.family == "jpeg":
        return apply_jpeg(img, spec.level)
    if spec.family == "gamma":
        return apply_gamma(img, spec.level)
    raise ParameterError(f"unknown degradation family {spec.family!r}")
