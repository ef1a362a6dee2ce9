"""Pixel-domain substrate: image I/O, luminance, bicubic resampling,
convolution and patch sampling.

Images are plain ``float64`` numpy arrays of shape ``(height, width)`` with
values in ``[0, 1]``.  Every pixel-producing function clamps its output.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import ArgumentError, FormatError

REC601 = (0.299, 0.587, 0.114)
RAW_MAGIC = b"FQA1"
RNG_NAME = "pcg64"


def make_rng(seed: int) -> np.random.Generator:
    """Seeded PCG64 stream; the one generator used throughout the package."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def check_plane(img) -> np.ndarray:
    """Validate and return ``img`` as a 2D float64 array."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ArgumentError(f"expected a non-empty 2D image, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ArgumentError("image contains non-finite values")
    return arr


# --------------------------------------------------------------------- I/O


def _luminance(rgb: np.ndarray, policy: str) -> np.ndarray:
    if policy == "luminance":
        w = np.asarray(REC601)
        return rgb[..., :3] @ w
    if policy == "per-channel-average":
        return rgb[..., :3].mean(axis=-1)
    raise ArgumentError(f"unknown channel policy {policy!r}")


def load_image(path, channel_policy: str = "luminance") -> np.ndarray:
    """Load a PNG (8/16-bit) or FQA1 raw file as a luminance plane in [0, 1]."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            head = fh.read(4)
    except OSError as exc:
        raise OSError(f"cannot read image {path}: {exc}") from exc
    if head == RAW_MAGIC:
        return np.clip(read_raw(path), 0.0, 1.0)

    try:
        im = Image.open(path)
        im.load()
    except Exception as exc:
        raise OSError(f"cannot decode image {path}: {exc}") from exc

    if im.mode in ("P", "1"):
        im = im.convert("RGBA" if im.mode == "P" else "L")
    mode = im.mode
    if mode in ("L", "LA", "RGB", "RGBA"):
        arr = np.asarray(im, dtype=np.float64) / 255.0
    elif mode in ("I;16", "I;16B", "I;16L", "I"):
        raw = np.asarray(im)
        if mode == "I" and raw.max(initial=0) > 65535:
            raise FormatError(f"{path}: unsupported bit depth (mode {mode})")
        arr = raw.astype(np.float64) / 65535.0
    else:
        raise FormatError(f"{path}: unsupported image mode {mode}")

    if arr.ndim == 3:
        if arr.shape[2] == 2:  # LA
            arr = arr[..., 0]
        else:
            arr = _luminance(arr, channel_policy)
    return np.clip(arr, 0.0, 1.0)


def save_image(img, path) -> None:
    """Write an 8-bit grayscale PNG, or FQA1 raw when the suffix is ``.fqa``."""
    arr = check_plane(img)
    path = Path(path)
    if path.suffix.lower() in (".fqa", ".raw"):
        write_raw(arr, path)
        return
    data = np.round(np.clip(arr, 0.0, 1.0) * 255.0).astype(np.uint8)
    try:
        Image.fromarray(data).save(path, format="PNG")
    except OSError as exc:
        raise OSError(f"cannot write image {path}: {exc}") from exc


def save_rgb(channels: list[np.ndarray], path) -> None:
    """Write three equally sized planes as an 8-bit RGB PNG."""
    stack = np.stack([np.clip(c, 0.0, 1.0) for c in channels], axis=-1)
    Image.fromarray(np.round(stack * 255.0).astype(np.uint8)).save(path, format="PNG")


def load_rgb(path) -> list[np.ndarray]:
    """Load a PNG as three [0, 1] planes (grayscale files are replicated)."""
    im = Image.open(path)
    if im.mode in ("I;16", "I;16B", "I;16L", "I"):
        plane = load_image(path)
        return [plane, plane.copy(), plane.copy()]
    arr = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
    return [arr[..., c].copy() for c in range(3)]


def encode_raw(arr: np.ndarray) -> bytes:
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    h, w = arr.shape
    return RAW_MAGIC + struct.pack("<II", w, h) + arr.astype("<f4").tobytes()


def decode_raw(blob: bytes, where: str = "<bytes>") -> np.ndarray:
    if len(blob) < 12 or blob[:4] != RAW_MAGIC:
        raise FormatError(f"{where}: missing FQA1 magic")
    w, h = struct.unpack("<II", blob[4:12])
    need = 12 + 4 * w * h
    if len(blob) < need:
        raise FormatError(f"{where}: truncated FQA1 payload ({len(blob)} < {need} bytes)")
    data = np.frombuffer(blob[12:need], dtype="<f4").astype(np.float64)
    return data.reshape(h, w)


def write_raw(arr, path) -> None:
    """Little-endian ``FQA1`` | u32 width | u32 height | float32 row-major data."""
    Path(path).write_bytes(encode_raw(arr))


def read_raw(path) -> np.ndarray:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise OSError(f"cannot read raw file {path}: {exc}") from exc
    return decode_raw(blob, str(path))


# -------------------------------------------------------------- resampling


def _cubic(x: np.ndarray, a: float = -0.5) -> np.ndarray:
    x = np.abs(x)
    x2, x3 = x * x, x * x * x
    out = np.where(x <= 1.0, (a + 2) * x3 - (a + 3) * x2 + 1.0, 0.0)
    out = np.where((x > 1.0) & (x < 2.0), a * x3 - 5 * a * x2 + 8 * a * x - 4 * a, out)
    return out


def reflect_index(idx: np.ndarray, n: int) -> np.ndarray:
    """Mirror indices into [0, n) without repeating the edge sample."""
    if n == 1:
        return np.zeros_like(idx)
    period = 2 * (n - 1)
    idx = np.mod(idx, period)
    return np.where(idx >= n, period - idx, idx)


def _resample_matrix(n_in: int, n_out: int, scale: float) -> np.ndarray:
    # Pixel-center alignment; downscaling widens the kernel (antialiasing).
    stretch = min(scale, 1.0)
    support = 2.0 / stretch
    centers = (np.arange(n_out) + 0.5) / scale - 0.5
    left = np.floor(centers - support).astype(np.int64) + 1
    taps = int(math.ceil(2 * support)) + 1
    idx = left[:, None] + np.arange(taps)[None, :]
    w = _cubic((centers[:, None] - idx) * stretch)
    w /= w.sum(axis=1, keepdims=True)
    mat = np.zeros((n_out, n_in))
    np.add.at(mat, (np.repeat(np.arange(n_out), taps), reflect_index(idx, n_in).ravel()), w.ravel())
    return mat


def output_size(n: int, scale: float) -> int:
    return int(math.floor(n * scale + 1e-9))


def resample_bicubic(img, scale: float) -> np.ndarray:
    """Catmull-Rom (a = -0.5) resampling with mirror boundaries.

    Downscaling stretches the cubic kernel by ``1/scale`` so the result is
    antialiased, as in the usual "bicubic downscaling" of SR datasets.
    """
    arr = check_plane(img)
    if not scale > 0:
        raise ArgumentError(f"scale must be positive, got {scale}")
    if scale == 1.0:
        return arr.copy()
    h, w = arr.shape
    oh, ow = output_size(h, scale), output_size(w, scale)
    if oh < 1 or ow < 1:
        raise ArgumentError(f"scale {scale} maps {w}x{h} to an empty image")
    rows = _resample_matrix(h, oh, scale)
    cols = _resample_matrix(w, ow, scale)
    return np.clip(rows @ arr @ cols.T, 0.0, 1.0)


# ------------------------------------------------------------- convolution


def convolve2d(img, kernel, clamp: bool = True) -> np.ndarray:
    """Same-size convolution with mirror boundaries."""
    arr = check_plane(img)
    k = np.asarray(kernel, dtype=np.float64)
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise ArgumentError(f"kernel must be square, got shape {k.shape}")
    if k.shape[0] % 2 == 0:
        raise ArgumentError(f"kernel side must be odd, got {k.shape[0]}")
    if k.shape[0] > min(arr.shape):
        raise ArgumentError(f"kernel side {k.shape[0]} exceeds image size {arr.shape[1]}x{arr.shape[0]}")
    out = ndimage.convolve(arr, k, mode="mirror")
    if clamp:
        out = np.clip(out, 0.0, 1.0)
    return out


# ----------------------------------------------------------------- patches


@dataclass(frozen=True)
class PatchSpec:
    size: int
    count: int = 1
    stride: int = 1
    seed: int = 0

    def validate(self, shape: tuple[int, int]) -> None:
        if self.size < 1 or self.count < 1 or self.stride < 1:
            raise ArgumentError(f"invalid patch spec {self}")
        if self.size > min(shape):
            raise ArgumentError(f"patch size {self.size} exceeds image {shape[1]}x{shape[0]}")


def patch_offsets(shape: tuple[int, int], spec: PatchSpec) -> list[tuple[int, int]]:
    """Top-left ``(row, col)`` offsets drawn on the stride grid.

    Rows are drawn first, then columns, each as ``spec.count`` integers from
    one PCG64 stream seeded with ``spec.seed``.
    """
    spec.validate(shape)
    h, w = shape
    rng = make_rng(spec.seed)
    ny = (h - spec.size) // spec.stride + 1
    nx = (w - spec.size) // spec.stride + 1
    ys = rng.integers(0, ny, size=spec.count) * spec.stride
    xs = rng.integers(0, nx, size=spec.count) * spec.stride
    return [(int(y), int(x)) for y, x in zip(ys, xs)]


def sample_patches(img, spec: PatchSpec) -> list[np.ndarray]:
    arr = check_plane(img)
    s = spec.size
    return [arr[y:y + s, x:x + s].copy() for y, x in patch_offsets(arr.shape, spec)]


def center_crop(img: np.ndarray, size: int) -> np.ndarray:
    h, w = img.shape
    if size > h or size > w:
        raise ArgumentError(f"cannot crop {size}x{size} from {w}x{h}")
    y, x = (h - size) // 2, (w - size) // 2
    return img[y:y + size, x:x + size]
