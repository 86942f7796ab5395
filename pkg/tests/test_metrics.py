"""Tests for image quality metrics."""

import numpy as np
import pytest

from ultracs.metrics import psnr, ssim


def test_psnr_identical_is_infinite():
    img = np.random.default_rng(0).uniform(size=(16, 16))
    assert psnr(img, img) == np.inf


def test_psnr_known_noise_level():
    rng = np.random.default_rng(1)
    ref = rng.uniform(0.2, 0.8, size=(32, 32))
    noise = rng.normal(size=ref.shape)
    # scale the noise so the MSE is exactly 1e-4, i.e. 40 dB
    noise *= np.sqrt(1e-4 * ref.size) / np.linalg.norm(noise)
    assert psnr(ref + noise, ref) == pytest.approx(40.0, abs=1e-9)


def test_psnr_shape_mismatch():
    with pytest.raises(ValueError):
        psnr(np.zeros((4, 4)), np.zeros((4, 5)))


def test_ssim_identical_is_one():
    img = np.random.default_rng(2).uniform(size=(24, 24))
    assert ssim(img, img) == pytest.approx(1.0, abs=1e-12)


def test_ssim_inverted_image_low():
    img = np.random.default_rng(3).uniform(size=(32, 32))
    assert ssim(1.0 - img, img) < 0.5


def test_ssim_degrades_with_noise():
    rng = np.random.default_rng(4)
    ref = rng.uniform(size=(32, 32))
    light = np.clip(ref + 0.02 * rng.normal(size=ref.shape), 0, 1)
    heavy = np.clip(ref + 0.3 * rng.normal(size=ref.shape), 0, 1)
    assert ssim(heavy, ref) < ssim(light, ref) <= 1.0


def test_ssim_requires_2d():
    with pytest.raises(ValueError):
        ssim(np.zeros(16), np.zeros(16))
    with pytest.raises(ValueError):
        ssim(np.zeros((4, 4)), np.zeros((4, 5)))
