"""Fidelity metrics on [0, 1] luminance planes."""

from __future__ import annotations

import math

import numpy as np
from scipy.ndimage import correlate1d

from .errors import ArgumentError

PSNR_CAP = 100.0
SSIM_WIN = 11
SSIM_SIGMA = 1.5
SSIM_K1, SSIM_K2 = 0.01, 0.03


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.ndim != 2 or x.shape != y.shape:
        raise ArgumentError(f"metric needs two equal 2D planes, got {x.shape} and {y.shape}")
    return x, y


def psnr(a, b) -> float:
    """Peak signal-to-noise ratio in dB for peak 1.0, capped at 100 dB."""
    x, y = _pair(a, b)
    mse = float(np.mean((x - y) ** 2))
    if mse <= 10.0 ** (-PSNR_CAP / 10.0):
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * math.log10(1.0 / mse))


def _gauss_window() -> np.ndarray:
    r = np.arange(SSIM_WIN) - SSIM_WIN // 2
    w = np.exp(-(r ** 2) / (2 * SSIM_SIGMA ** 2))
    return w / w.sum()


def _filter_valid(img: np.ndarray, w: np.ndarray) -> np.ndarray:
    out = correlate1d(correlate1d(img, w, axis=0, mode="constant"), w, axis=1, mode="constant")
    h = SSIM_WIN // 2
    return out[h:img.shape[0] - h, h:img.shape[1] - h]


def ssim(a, b) -> float:
    """Single-scale SSIM: 11x11 Gaussian window (sigma 1.5), range 1, valid positions only."""
    x, y = _pair(a, b)
    if min(x.shape) < SSIM_WIN:
        raise ArgumentError(f"SSIM needs both sides >= {SSIM_WIN}, got {x.shape}")
    w = _gauss_window()
    mx, my = _filter_valid(x, w), _filter_valid(y, w)
    sxx = _filter_valid(x * x, w) - mx * mx
    syy = _filter_valid(y * y, w) - my * my
    sxy = _filter_valid(x * y, w) - mx * my
    c1, c2 = SSIM_K1 ** 2, SSIM_K2 ** 2
    num = (2 * mx * my + c1) * (2 * sxy + c2)
    den = (mx * mx + my * my + c1) * (sxx + syy + c2)
    return float(np.mean(num / den))
