"""Anisotropic Gaussian degradation kernels and the degradation generator.

Kernel parameters are standard deviations in pixels: ``r1`` along the
kernel's own horizontal axis, ``r2`` along its vertical axis, and ``theta``
rotates that frame (radians, counter-clockwise in (x, y) with y pointing
down the rows).  Reports quote variances as ``r**2``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError
from .imaging import check_plane, convolve2d, make_rng, resample_bicubic

R_MAX = 3.0
R_MIN_KERNEL = 1e-3
TWO_PI = 2.0 * math.pi
KERNEL_KINDS = ("ISO.1", "ISO.3", "ISO.range", "ANI", "ANI.fixed")


def wrap_angle(theta: float) -> float:
    t = math.fmod(float(theta), TWO_PI)
    if t < 0:
        t += TWO_PI
    return 0.0 if t >= TWO_PI else t


@dataclass(frozen=True)
class KernelParams:
    r1: float
    r2: float
    theta: float = 0.0

    def __post_init__(self):
        for name in ("r1", "r2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and 0.0 < v <= R_MAX + 1e-12):
                raise ArgumentError(f"{name}={v} outside (0, {R_MAX}]")
        if not math.isfinite(self.theta):
            raise ArgumentError("theta must be finite")
        object.__setattr__(self, "r1", float(self.r1))
        object.__setattr__(self, "r2", float(self.r2))
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    @property
    def sigma2(self) -> float:
        """Mean variance ``(r1^2 + r2^2) / 2``; invariant under axis swap."""
        return 0.5 * (self.r1 ** 2 + self.r2 ** 2)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.r1, self.r2, self.theta)

    def swapped(self) -> "KernelParams":
        """The same Gaussian written with its axes exchanged."""
        return KernelParams(self.r2, self.r1, self.theta + math.pi / 2)


def delta_params() -> KernelParams:
    """Smallest allowed blur; numerically a delta kernel."""
    return KernelParams(0.1, 0.1, 0.0)


def covariance(params: KernelParams) -> np.ndarray:
    c, s = math.cos(params.theta), math.sin(params.theta)
    rot = np.array([[c, -s], [s, c]])
    return rot @ np.diag([params.r1 ** 2, params.r2 ** 2]) @ rot.T


def gaussian_kernel(params: KernelParams, side: int = 13) -> np.ndarray:
    """Normalized kernel sampled at integer offsets; rows index y, columns x."""
    if side < 3 or side % 2 == 0:
        raise ArgumentError(f"kernel side must be odd and >= 3, got {side}")
    if min(params.r1, params.r2) < R_MIN_KERNEL:
        raise ArgumentError("kernel covariance is near-singular")
    inv = np.linalg.inv(covariance(params))
    half = side // 2
    y, x = np.mgrid[-half:half + 1, -half:half + 1].astype(np.float64)
    q = inv[0, 0] * x * x + 2.0 * inv[0, 1] * x * y + inv[1, 1] * y * y
    k = np.exp(-0.5 * q)
    return k / k.sum()


@dataclass(frozen=True)
class DegradationConfig:
    scale: int = 4
    kernel_side: int = 13
    params: KernelParams = KernelParams(1.0, 1.0, 0.0)

    def __post_init__(self):
        if int(self.scale) != self.scale or self.scale < 1:
            raise ArgumentError(f"scale must be a positive integer, got {self.scale}")
        if self.kernel_side < 3 or self.kernel_side % 2 == 0:
            raise ArgumentError(f"kernel_side must be odd and >= 3, got {self.kernel_side}")


def crop_to_multiple(img: np.ndarray, scale: int) -> tuple[np.ndarray, tuple[int, int]]:
    """Center-crop so both dims divide by ``scale``; returns the rows/cols removed."""
    h, w = img.shape
    dh, dw = h % scale, w % scale
    if dh == 0 and dw == 0:
        return img, (0, 0)
    y, x = dh // 2, dw // 2
    return img[y:y + h - dh, x:x + w - dw], (dh, dw)


def downsample(img, scale: int) -> np.ndarray:
    arr, _ = crop_to_multiple(check_plane(img), int(scale))
    return resample_bicubic(arr, 1.0 / scale) if scale != 1 else arr.copy()


def blur(img, kernel: np.ndarray) -> np.ndarray:
    arr = check_plane(img)
    if kernel.shape[0] > min(arr.shape):
        raise ArgumentError(
            f"image {arr.shape[1]}x{arr.shape[0]} is smaller than the {kernel.shape[0]}px kernel")
    return convolve2d(arr, kernel)


def degrade(hr, cfg: DegradationConfig) -> np.ndarray:
    """Downsample by ``cfg.scale`` and then blur: ``(x down s) conv k``."""
    low = downsample(hr, cfg.scale)
    return blur(low, gaussian_kernel(cfg.params, cfg.kernel_side))


def synthesize_test_kernel(kind: str, seed: int = 0) -> KernelParams:
    """Truth kernels of the synthetic families; variances are drawn, not radii.

    ``ANI.fixed`` is the deterministic anisotropic probe: variances 3 and 1
    rotated by pi/4.
    """
    if kind == "ISO.1":
        return KernelParams(1.0, 1.0, 0.0)
    if kind == "ISO.3":
        return KernelParams(math.sqrt(3.0), math.sqrt(3.0), 0.0)
    if kind == "ANI.fixed":
        return KernelParams(math.sqrt(3.0), 1.0, math.pi / 4)
    rng = make_rng(seed)
    if kind == "ISO.range":
        r = math.sqrt(rng.uniform(1.0, 3.0))
        return KernelParams(r, r, 0.0)
    if kind == "ANI":
        u1, u2 = rng.uniform(1.0, 3.0, size=2)
        theta = rng.uniform(0.0, TWO_PI)
        return KernelParams(math.sqrt(u1), math.sqrt(u2), theta)
    raise ArgumentError(f"unknown kernel kind {kind!r}; expected one of {KERNEL_KINDS}")


def kernel_error(estimated: KernelParams, truth: KernelParams, side: int = 19) -> float:
    """L2 distance between discretized kernels, minimized over the axis-swap alias."""
    t = gaussian_kernel(truth, side)
    d1 = np.linalg.norm(gaussian_kernel(estimated, side) - t)
    d2 = np.linalg.norm(gaussian_kernel(estimated.swapped(), side) - t)
    return float(min(d1, d2))


def format_kernel_manifest(params: KernelParams, side: int) -> str:
    return (f'{{"r1": {params.r1:.9g}, "r2": {params.r2:.9g}, '
            f'"theta": {params.theta:.9g}, "side": {side}}}\n')


def parse_kernel_manifest(text: str) -> tuple[KernelParams, int]:
    obj = json.loads(text)
    return KernelParams(obj["r1"], obj["r2"], obj["theta"]), int(obj["side"])
