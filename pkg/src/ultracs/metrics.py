"""Image quality metrics on [0, 1]-ranged arrays."""

from __future__ import annotations

import numpy as np
from skimage.metrics import structural_similarity

SSIM_MIN_SIDE = 11  # Gaussian window span: 2 ceil(3 sigma) + 1 at sigma 1.5


def psnr(reference: np.ndarray, estimate: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB for unit-range images.

    10 log10(1 / MSE); identical inputs return inf.
    """
    ref = np.asarray(reference, dtype=np.float64)
    est = np.asarray(estimate, dtype=np.float64)
    if ref.shape != est.shape:
        raise ValueError(f"shape mismatch {ref.shape} vs {est.shape}")
    mse = float(np.mean((ref - est) ** 2))
    if mse == 0.0:
        return float("inf")
    return float(10.0 * np.log10(1.0 / mse))


def ssim(reference: np.ndarray, estimate: np.ndarray) -> float:
    """Structural similarity with the standard perceptual constants.

    Gaussian 11-tap window (sigma 1.5), population covariance, unit data
    range.  Inputs must be 2-D.
    """
    ref = np.asarray(reference, dtype=np.float64)
    est = np.asarray(estimate, dtype=np.float64)
    if ref.ndim != 2 or est.ndim != 2:
        raise ValueError("ssim is defined here for 2-D images only")
    if ref.shape != est.shape:
        raise ValueError(f"shape mismatch {ref.shape} vs {est.shape}")
    return float(
        structural_similarity(
            ref,
            est,
            data_range=1.0,
            gaussian_weights=True,
            sigma=1.5,
            use_sample_covariance=False,
        )
    )
