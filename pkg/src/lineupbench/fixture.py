"""Procedural test corpus generator.

Writes a small dataset of 512x512 synthetic pattern images (not faces) plus
a matching manifest, fully determined by one seed. Each identity gets a
reproducible signature field: band-limited "detail" gratings that broad
blur or heavy downscaling wipe out, a little low-frequency structure that
survives them, and smoothed per-identity noise. All images share a common
low-frequency background so degraded probes collapse toward one another
the way over-degraded photographs do. Variants of an identity differ by a
brightness shift, a translation of a couple of pixels, and fresh mild
noise; the first variant is the designated mugshot.

Attribute labels (pose, glasses, mask, headwear, lighting, race, gender)
are drawn from a dedicated deterministic stream. They are labels for
subset evaluation only and do not alter pixels.
"""

from __future__ import annotations

import math
import os

import numpy as np

from .degrade import _convolve_axis, gaussian_kernel
from .errors import DataIOError, ParameterError
from .manifest import DatasetManifest, ImageRecord, save_manifest
from .raster import RasterImage, save_png
from .rng import SplitMix64, derive_seed, normals

SIZE = 512

# Field amplitudes in gray levels, tuned so the undegraded baseline
# embedder separates identities cleanly while broad blur or heavy
# downscaling pushes accuracy toward chance. Nearly all identity energy
# sits in a short-wavelength detail band; the low-frequency identity
# structure is kept faint on purpose, because anything that survives a
# 17-tap blur keeps lineups solvable no matter how degraded the probe is.
_BG_AMP = 26.0      # shared background, low frequency
_DETAIL_AMP = 20.0  # identity signature, short wavelengths
_COARSE_AMP = 2.0   # identity low-frequency structure
_TEXTURE_AMP = 3.0  # smoothed per-identity noise
_VARIANT_NOISE = 2.0
_DETAIL_WAVES = 10
# Wavelengths in px at full resolution. Lower bound stays above 16 px:
# the embedder decimates its 160 px crop by exact stride 5, so a 16 px
# wave (5 px after cropping) aliases to DC and drops out of the code.
_DETAIL_BAND = (17.5, 24.0)
_COARSE_WAVES = 3
_COARSE_BAND = (90.0, 160.0)
_BG_WAVES = 6
_BG_BAND = (64.0, 200.0)
_SMOOTH_WIDTH = 31  # kernel width for texture smoothing (sigma 5)


def _unit_std(field: np.ndarray) -> np.ndarray:
    sd = float(field.std())
    if sd < 1e-12:
        return np.zeros_like(field)
    return field / sd


def _gratings(seed: int, count: int, band: tuple[float, float]) -> np.ndarray:
    """Sum of `count` random plane waves with wavelengths inside `band`."""
    rng = SplitMix64(seed)
    yy, xx = np.mgrid[0:SIZE, 0:SIZE].astype(np.float64)
    field = np.zeros((SIZE, SIZE), dtype=np.float64)
    lo, hi = band
    for _ in range(count):
        theta = rng.next_float() * math.pi
        lam = lo + rng.next_float() * (hi - lo)
        phase = rng.next_float() * 2.0 * math.pi
        axis = xx * math.cos(theta) + yy * math.sin(theta)
        field += np.cos(2.0 * math.pi * axis / lam + phase)
    return _unit_std(field)


def _smooth_noise(seed: int) -> np.ndarray:
    field = normals(seed, SIZE * SIZE).reshape(SIZE, SIZE)
    kernel = gaussian_kernel(_SMOOTH_WIDTH)
    field = _convolve_axis(field, kernel, axis=0)
    field = _convolve_axis(field, kernel, axis=1)
    return _unit_std(field)


def _weighted_choice(u: float, options: list[tuple[str, float]]) -> str:
    acc = 0.0
    for value, weight in options:
        acc += weight
        if u < acc:
            return value
    return options[-1][0]


_RACES = [("white", 0.35), ("black", 0.20), ("asian", 0.20),
          ("hispanic", 0.15), ("other", 0.10)]
_GLASSES = [("none", 0.55), ("clear", 0.20), ("opaque", 0.25)]


def gen_fixture(n_identities: int, images_per_identity: int, seed: int,
                out_dir: str | os.PathLike) -> DatasetManifest:
    """Generate the corpus under out_dir and return its manifest.

    Writes images/<image_id>.png for every record plus manifest.jsonl at
    the top of out_dir. Equal arguments produce byte-identical outputs.
    """
    if n_identities < 6:
        raise ParameterError(f"need at least 6 identities, got {n_identities}")
    if images_per_identity < 1:
        raise ParameterError(
            f"images_per_identity must be positive, got {images_per_identity}")

    out_dir = os.path.abspath(os.fspath(out_dir))
    image_dir = os.path.join(out_dir, "images")
    try:
        os.makedirs(image_dir, exist_ok=True)
    except OSError as e:
        raise DataIOError(f"cannot create fixture directory {out_dir}: {e}") from e

    background = _BG_AMP * _gratings(derive_seed(seed, "shared/gratings"),
                                     _BG_WAVES, _BG_BAND)
    attrs = SplitMix64(derive_seed(seed, "attributes"))

    records = []
    for i in range(n_identities):
        identity_id = f"id{i:04d}"
        base_gray = 130.0 + 30.0 * SplitMix64(
            derive_seed(seed, f"{identity_id}/gray")).next_float()
        signature = (
            base_gray
            + background
            + _DETAIL_AMP * _gratings(
                derive_seed(seed, f"{identity_id}/detail"),
                _DETAIL_WAVES, _DETAIL_BAND)
            + _COARSE_AMP * _gratings(
                derive_seed(seed, f"{identity_id}/coarse"),
                _COARSE_WAVES, _COARSE_BAND)
            + _TEXTURE_AMP * _smooth_noise(derive_seed(seed, f"{identity_id}/texture"))
        )
        race = _weighted_choice(attrs.next_float(), _RACES)
        gender = "female" if attrs.next_float() < 0.5 else "male"

        for v in range(images_per_identity):
            image_id = f"{identity_id}_v{v:02d}"
            mugshot = v == 0

            # pixel perturbations for this variant
            perturb = SplitMix64(derive_seed(seed, f"{image_id}/perturb"))
            brightness = (perturb.next_float() - 0.5) * 10.0
            dx = perturb.next_int(5) - 2
            dy = perturb.next_int(5) - 2
            pixels = signature + brightness
            pixels = pixels + _VARIANT_NOISE * normals(
                derive_seed(seed, f"{image_id}/noise"), SIZE * SIZE
            ).reshape(SIZE, SIZE)
            pixels = np.roll(pixels, (dy, dx), axis=(0, 1))
            arr = np.clip(np.rint(pixels), 0, 255).astype(np.uint8)
            abs_path = os.path.join(image_dir, f"{image_id}.png")
            save_png(RasterImage.from_array(arr[:, :, None]), abs_path)

            # attribute draws: fixed count and order per record
            u_pose = (attrs.next_float(), attrs.next_float(), attrs.next_float())
            u_glasses = attrs.next_float()
            u_mask = attrs.next_float()
            u_headwear = attrs.next_float()
            u_lighting = attrs.next_float()
            if mugshot:
                yaw = u_pose[0] * 10.0 - 5.0
                pitch = u_pose[1] * 8.0 - 4.0
                roll = u_pose[2] * 6.0 - 3.0
                glasses, mask, lighting = "none", False, "normal"
            else:
                yaw = u_pose[0] * 120.0 - 60.0
                pitch = u_pose[1] * 44.0 - 22.0
                roll = u_pose[2] * 24.0 - 12.0
                glasses = _weighted_choice(u_glasses, _GLASSES)
                mask = u_mask < 0.25
                lighting = "low" if u_lighting < 0.3 else "normal"
            records.append(ImageRecord(
                image_id=image_id, identity_id=identity_id, path=abs_path,
                role="mugshot" if mugshot else "unconstrained",
                yaw=round(yaw, 2), pitch=round(pitch, 2), roll=round(roll, 2),
                glasses=glasses, mask=mask, headwear=u_headwear < 0.2,
                lighting=lighting, race=race, gender=gender,
                source="synthetic", bbox=None,
            ))

    manifest = DatasetManifest(
        dataset_id=f"fixture-{n_identities}x{images_per_identity}-seed{seed}",
        records=tuple(records),
        notes=(f"procedural corpus: {n_identities} identities x "
               f"{images_per_identity} images, seed {seed}"),
    )
    save_manifest(manifest, os.path.join(out_dir, "manifest.jsonl"),
                  relative_to=out_dir)
    return manifest
