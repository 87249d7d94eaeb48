"""Degradation operators against direct scalar oracles.

Blur is cross-checked by convolving a single white pixel with an
explicitly computed 2-D kernel (outer product of the 1-D Gaussian);
noise is checked against its target standard deviation; gamma against
hand-evaluated LUT entries.
"""

import math

import numpy as np
import pytest

from lineupbench.degrade import (
    CROP_SIZE,
    DEFAULT_GRIDS,
    DegradationGrid,
    DegradationSpec,
    apply_blur,
    apply_gamma,
    apply_jpeg,
    apply_noise,
    apply_scale,
    apply_spec,
    crop_resize,
    gaussian_kernel,
    validate_level,
)
from lineupbench.errors import ParameterError
from lineupbench.raster import RasterImage, luma


def _rand_img(seed, h=48, w=48, c=1):
    rng = np.random.default_rng(seed)
    return RasterImage(rng.integers(0, 256, size=(h, w, c), dtype=np.uint8))


# ------------------------------------------------------------------ blur


def test_gaussian_kernel_values():
    k = gaussian_kernel(5)
    sigma = 4.0 / 6.0
    raw = [math.exp(-0.5 * (x / sigma) ** 2) for x in (-2, -1, 0, 1, 2)]
    want = [v / sum(raw) for v in raw]
    np.testing.assert_allclose(k, want, rtol=1e-12)
    assert k.sum() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_array_equal(gaussian_kernel(1), [1.0])
    with pytest.raises(ParameterError):
        gaussian_kernel(4)
    with pytest.raises(ParameterError):
        gaussian_kernel(0)


def test_blur_single_pixel_matches_2d_kernel():
    # away from borders, blurring a delta reproduces the separable kernel
    arr = np.zeros((21, 21, 1), dtype=np.uint8)
    arr[10, 10, 0] = 255
    out = apply_blur(RasterImage(arr), 5).array[:, :, 0].astype(np.float64)
    k1 = gaussian_kernel(5)
    want = np.clip(np.rint(255.0 * np.outer(k1, k1)), 0, 255)
    np.testing.assert_array_equal(out[8:13, 8:13], want)
    assert out[:8].sum() == 0 and out[13:].sum() == 0


def test_blur_edge_replication():
    # a constant image is a fixed point only because edges replicate
    img = RasterImage(np.full((9, 9, 1), 200, dtype=np.uint8))
    np.testing.assert_array_equal(apply_blur(img, 7).array, img.array)


def test_blur_identity_at_k1():
    img = _rand_img(0)
    out = apply_blur(img, 1)
    assert out == img
    assert out.array is not img.array  # a copy, not an alias


def test_blur_rejects_even_or_float_width():
    img = _rand_img(1)
    with pytest.raises(ParameterError):
        apply_blur(img, 4)
    with pytest.raises(ParameterError):
        apply_blur(img, 5.0)


# ----------------------------------------------------------------- scale


def test_scale_identity_at_one():
    img = _rand_img(2)
    assert apply_scale(img, 1.0) == img


def test_scale_down_up_sizes():
    img = _rand_img(3, h=40, w=40)
    out = apply_scale(img, 0.25)
    assert out.array.shape == img.array.shape
    # tiny factors clamp the intermediate to 1x1 = a constant image
    flat = apply_scale(img, 1e-6).array
    assert len(np.unique(flat)) == 1


def test_scale_loses_detail():
    arr = np.zeros((32, 32, 1), dtype=np.uint8)
    arr[::2] = 255  # alternating stripes vanish at half resolution
    out = apply_scale(RasterImage(arr), 0.5).array.astype(np.int64)
    assert int(np.ptp(out)) < 255


def test_scale_rejects_out_of_range():
    img = _rand_img(4)
    for s in (0.0, -0.5, 1.5):
        with pytest.raises(ParameterError):
            apply_scale(img, s)


# ----------------------------------------------------------------- noise


def test_noise_hits_target_sigma():
    rng = np.random.default_rng(5)
    # mid-gray base keeps clamping rare so the measured sigma is clean
    base = RasterImage(rng.integers(96, 160, size=(200, 200, 1), dtype=np.uint8))
    sigma_luma = float(np.std(luma(base)))
    for snr in (20.0, 6.0, 0.0):
        out = apply_noise(base, snr, seed=7).array.astype(np.float64)
        diff = out - base.array.astype(np.float64)
        want = sigma_luma * 10.0 ** (-snr / 20.0)
        # 5% tolerance: quantization plus rare clamping trim a little variance
        assert float(diff.std()) == pytest.approx(want, rel=0.05)


def test_noise_on_constant_image_is_identity():
    img = RasterImage(np.full((17, 13, 3), 99, dtype=np.uint8))
    assert apply_noise(img, -20.0, seed=1) == img


def test_noise_seed_changes_field():
    img = _rand_img(6)
    a = apply_noise(img, 10.0, seed=1)
    b = apply_noise(img, 10.0, seed=2)
    assert a != b
    assert apply_noise(img, 10.0, seed=1) == a


def test_noise_rejects_non_finite():
    with pytest.raises(ParameterError):
        apply_noise(_rand_img(7), float("nan"), seed=0)


# ------------------------------------------------------------------ jpeg


def test_jpeg_high_quality_is_near_lossless():
    img = _rand_img(8, h=32, w=32, c=3)
    out = apply_jpeg(img, 1.0)
    err = out.array.astype(np.float64) - img.array.astype(np.float64)
    mse = float((err ** 2).mean())
    psnr = 10.0 * math.log10(255.0 ** 2 / mse) if mse else float("inf")
    assert psnr >= 40.0


def test_jpeg_error_grows_as_quality_falls():
    img = _rand_img(9, h=64, w=64, c=3)

    def mse(q):
        err = apply_jpeg(img, q).array.astype(np.float64) \
            - img.array.astype(np.float64)
        return float((err ** 2).mean())

    assert mse(0.1) > mse(0.5) > mse(0.9)


def test_jpeg_constant_image_stays_flat():
    img = RasterImage(np.full((24, 24, 1), 150, dtype=np.uint8))
    # a flat field stays flat at any quality; DC quantization may shift
    # the level by a couple of grays at harsh settings
    for q in (1.0, 0.7, 0.3, 0.1):
        out = apply_jpeg(img, q).array.astype(np.int64)
        assert np.unique(out).size == 1
        assert int(np.abs(out - 150).max()) <= 2


def test_jpeg_subsampling_switch_at_09():
    img = _rand_img(10, h=32, w=32, c=3)
    # same integer quality, different chroma layout => different pixels
    a = apply_jpeg(img, 0.9)
    b = apply_jpeg(img, 0.89999999)
    assert int(round(100 * 0.9)) == int(round(100 * 0.89999999))
    assert a != b


def test_jpeg_rejects_out_of_range():
    with pytest.raises(ParameterError):
        apply_jpeg(_rand_img(11), 0.0)


# ----------------------------------------------------------------- gamma


def test_gamma_identity_at_one():
    img = _rand_img(12)
    assert apply_gamma(img, 1.0) == img


def test_gamma_hand_computed_entries():
    img = RasterImage(np.array([[[0], [128], [255]]], dtype=np.uint8))
    out = apply_gamma(img, 2.0).array[0, :, 0]
    assert out[0] == 0
    assert out[1] == round(255 * (128 / 255) ** 2)  # 64
    assert out[2] == 255
    half = apply_gamma(img, 0.5).array[0, 1, 0]
    assert half == round(255 * (128 / 255) ** 0.5)  # 181


def test_gamma_round_trip_mid_range():
    # g then 1/g is identity up to one gray level for mid-range input
    vals = np.arange(96, 161, dtype=np.uint8).reshape(1, -1, 1)
    img = RasterImage(vals)
    back = apply_gamma(apply_gamma(img, 2.2), 1.0 / 2.2).array
    assert int(np.abs(back.astype(int) - vals.astype(int)).max()) <= 1


def test_gamma_rejects_non_positive():
    with pytest.raises(ParameterError):
        apply_gamma(_rand_img(13), 0.0)


# ---------------------------------------------------------- crop_resize


def test_crop_resize_centers_and_sizes():
    img = _rand_img(14, h=100, w=60)
    out = crop_resize(img)
    assert (out.height, out.width) == (CROP_SIZE, CROP_SIZE)
    # centered square of a wide image == explicit bbox
    wide = _rand_img(15, h=40, w=100)
    explicit = crop_resize(wide, bbox=(30, 0, 40, 40))
    assert crop_resize(wide) == explicit


def test_crop_resize_bbox_validation():
    img = _rand_img(16, h=40, w=40)
    with pytest.raises(ParameterError):
        crop_resize(img, bbox=(0, 0, 0, 10))
    with pytest.raises(ParameterError):
        crop_resize(img, bbox=(35, 0, 10, 10))
    with pytest.raises(ParameterError):
        crop_resize(img, bbox=(-1, 0, 10, 10))


# ------------------------------------------------- specs, grids, levels


def test_validate_level_per_family():
    validate_level("blur", 9.0)
    for bad in (2.0, 0.0, 7.5):
        with pytest.raises(ParameterError):
            validate_level("blur", bad)
    validate_level("scale", 0.5)
    with pytest.raises(ParameterError):
        validate_level("scale", 0.0)
    validate_level("jpeg", 1.0)
    with pytest.raises(ParameterError):
        validate_level("jpeg", 1.1)
    validate_level("gamma", 0.05)
    with pytest.raises(ParameterError):
        validate_level("gamma", -1.0)
    validate_level("noise", -16.0)
    with pytest.raises(ParameterError):
        validate_level("noise", float("inf"))
    with pytest.raises(ParameterError):
        validate_level("sepia", 1.0)


def test_default_grids_reference_values():
    assert DEFAULT_GRIDS["blur"] == (1.0, 5.0, 9.0, 13.0, 17.0)
    assert DEFAULT_GRIDS["scale"] == (0.8625, 0.6625, 0.4625, 0.2625, 0.0625)
    assert DEFAULT_GRIDS["noise"] == (16.0, 8.0, 0.0, -8.0, -16.0)
    assert DEFAULT_GRIDS["jpeg"] == (0.9, 0.7, 0.5, 0.3, 0.1)
    assert DEFAULT_GRIDS["gamma"] == (0.05, 0.3, 1.3, 3.3, 5.3)
    for family, levels in DEFAULT_GRIDS.items():
        DegradationGrid(family=family, levels=levels)  # all validate


def test_grid_needs_two_distinct_levels():
    with pytest.raises(ParameterError):
        DegradationGrid(family="blur", levels=(5.0,))
    with pytest.raises(ParameterError):
        DegradationGrid(family="blur", levels=(5.0, 5.0))


def test_apply_spec_dispatch_and_determinism():
    img = _rand_img(17, c=3)
    for family, levels in DEFAULT_GRIDS.items():
        spec = DegradationSpec(family=family, level=levels[2], seed=4)
        assert apply_spec(img, spec) == apply_spec(img, spec)
    with pytest.raises(ParameterError):
        DegradationSpec(family="blur", level=2.0)
