"""Frequency-density profiles and the distance between them.

The magnitude spectrum uses the unnormalized DFT (``numpy.fft.fft2``, no
``1/N^2`` factor) of the mean-subtracted patch, so Parseval reads
``sum |F|^2 == N^2 * sum (x - mean)^2``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ArgumentError, DegenerateInputError, FormatError

KINDS = ("axis", "radial", "oriented")
ORIENTATIONS = (0.0, np.pi / 4, np.pi / 2, 3 * np.pi / 4)
FLAT_TOL = 1e-12
NORM_MODES = ("none", "unit-sum", "log1p")


@dataclass(frozen=True)
class FrequencyProfile:
    bins: np.ndarray
    kind: str
    source_size: int

    def __post_init__(self):
        b = np.asarray(self.bins, dtype=np.float64)
        if b.ndim != 1 or not np.all(np.isfinite(b)) or np.any(b < 0):
            raise ArgumentError("profile bins must be a finite non-negative vector")
        if self.kind not in KINDS:
            raise ArgumentError(f"unknown profile kind {self.kind!r}")
        object.__setattr__(self, "bins", b)

    @property
    def n(self) -> int:
        return self.bins.size

    @property
    def energy(self) -> float:
        return float(self.bins.sum())


@dataclass(frozen=True)
class DomainProfile:
    """A profile averaged over ``image_count`` patches."""

    profile: FrequencyProfile
    image_count: int = 1

    def __post_init__(self):
        if self.image_count < 1:
            raise ArgumentError("image_count must be >= 1")

    @property
    def bins(self) -> np.ndarray:
        return self.profile.bins

    @property
    def kind(self) -> str:
        return self.profile.kind

    @property
    def source_size(self) -> int:
        return self.profile.source_size


def n_bins(size: int, kind: str = "axis") -> int:
    """Bin count of a ``kind`` profile of a ``size`` patch."""
    half = size // 2 + 1
    return len(ORIENTATIONS) * half if kind == "oriented" else half


def fft2_magnitude(patch) -> np.ndarray:
    p = np.asarray(patch, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise ArgumentError(f"spectrum needs a square patch, got shape {p.shape}")
    if np.ptp(p) <= FLAT_TOL:
        return np.zeros(p.shape)  # flat up to rounding: no spectrum, not FFT noise
    return np.abs(np.fft.fft2(p - p.mean()))


def _fold(v: np.ndarray) -> np.ndarray:
    # v is indexed by signed frequency in fft order; average the +l and -l entries.
    n = v.size
    half = n_bins(n)
    out = v[:half].copy()
    neg = v[(n - np.arange(1, half)) % n]
    out[1:] = 0.5 * (out[1:] + neg)
    return out


def _radial_index(n: int) -> np.ndarray:
    f = np.fft.fftfreq(n) * n
    return np.rint(np.hypot(f[:, None], f[None, :])).astype(np.int64)


def _binned_mean(mag: np.ndarray, idx: np.ndarray, half: int) -> np.ndarray:
    r = idx.ravel()
    keep = r < half
    sums = np.bincount(r[keep], weights=mag.ravel()[keep], minlength=half)
    counts = np.bincount(r[keep], minlength=half)
    return sums / np.maximum(counts, 1)


def _direction_index(n: int, phi: float) -> np.ndarray:
    f = np.fft.fftfreq(n) * n
    proj = np.cos(phi) * f[None, :] + np.sin(phi) * f[:, None]
    return np.rint(np.abs(proj)).astype(np.int64)


def patch_profile(patch, kind: str = "axis") -> np.ndarray:
    """Profile of a single square patch (no averaging across patches)."""
    mag = fft2_magnitude(patch)
    n = mag.shape[0]
    if kind == "axis":
        # Horizontal-frequency profile (mean over rows) and its vertical twin.
        return 0.5 * (_fold(mag.mean(axis=0)) + _fold(mag.mean(axis=1)))
    if kind == "radial":
        return _binned_mean(mag, _radial_index(n), n_bins(n))
    if kind == "oriented":
        # directional marginals at 0, 45, 90 and 135 degrees, concatenated
        return np.concatenate([_binned_mean(mag, _direction_index(n, phi), n_bins(n))
                               for phi in ORIENTATIONS])
    raise ArgumentError(f"unknown profile kind {kind!r}")


def patch_profiles(patches, kind: str = "axis") -> np.ndarray:
    """Stack of per-patch profiles, shape ``(count, n_bins)``."""
    patches = list(patches)
    if not patches:
        raise ArgumentError("empty patch list")
    size = np.shape(patches[0])
    for p in patches:
        if np.shape(p) != size:
            raise ArgumentError(f"mixed patch sizes {size} and {np.shape(p)}")
    return np.stack([patch_profile(p, kind) for p in patches])


def frequency_profile(patches, kind: str = "axis") -> DomainProfile:
    """Average the per-patch profiles of equally sized square patches."""
    rows = patch_profiles(patches, kind)
    size = int(np.shape(patches[0])[0])
    # Fixed summation order keeps the result bitwise reproducible.
    mean = np.add.reduce(rows, axis=0) / rows.shape[0]
    return DomainProfile(FrequencyProfile(mean, kind, size), rows.shape[0])


def _bins_of(p) -> tuple[np.ndarray, str]:
    if isinstance(p, DomainProfile):
        return p.bins, p.kind
    if isinstance(p, FrequencyProfile):
        return p.bins, p.kind
    return np.asarray(p, dtype=np.float64), ""


def freq_distance(a, b) -> float:
    """Mean absolute bin difference between two profiles."""
    ab, ak = _bins_of(a)
    bb, bk = _bins_of(b)
    if ab.shape != bb.shape:
        raise ArgumentError(f"bin count mismatch: {ab.size} vs {bb.size}")
    if ak and bk and ak != bk:
        raise ArgumentError(f"profile kind mismatch: {ak} vs {bk}")
    return float(np.mean(np.abs(ab - bb)))


def normalize_bins(bins: np.ndarray, mode: str) -> np.ndarray:
    if mode == "none":
        return bins
    if mode == "unit-sum":
        total = bins.sum(axis=-1, keepdims=True)
        if np.any(total <= 0):
            raise DegenerateInputError("unit-sum normalization of an all-zero profile")
        return bins / total
    if mode == "log1p":
        return np.log1p(bins)
    raise ArgumentError(f"unknown normalization mode {mode!r}")


def normalize_profile(p: DomainProfile, mode: str) -> DomainProfile:
    bins = normalize_bins(p.bins, mode)
    return replace(p, profile=replace(p.profile, bins=bins))


# ------------------------------------------------------------------- text I/O


def format_profile(p: DomainProfile) -> str:
    lines = [f"# bins={p.profile.n} kind={p.kind} size={p.source_size} count={p.image_count}"]
    lines += [f"{v:.9g}" for v in p.bins]
    return "\n".join(lines) + "\n"


def parse_profile(text: str) -> DomainProfile:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise FormatError("profile text lacks the '# bins=...' header")
    try:
        meta = dict(tok.split("=", 1) for tok in lines[0][1:].split())
        n, size, count = int(meta["bins"]), int(meta["size"]), int(meta["count"])
        kind = meta["kind"]
        bins = np.array([float(v) for v in lines[1:]])
    except (KeyError, ValueError) as exc:
        raise FormatError(f"malformed profile text: {exc}") from exc
    if bins.size != n:
        raise FormatError(f"header promises {n} bins, found {bins.size}")
    return DomainProfile(FrequencyProfile(bins, kind, size), count)


def write_profile(p: DomainProfile, path) -> None:
    Path(path).write_text(format_profile(p))


def read_profile(path) -> DomainProfile:
    return parse_profile(Path(path).read_text())


def tile_profile(img, size: int, kind: str = "axis") -> np.ndarray:
    """Mean profile over the non-overlapping ``size`` tiles of the centred grid."""
    arr = np.asarray(img, dtype=np.float64)
    h, w = arr.shape
    ny, nx = h // size, w // size
    if ny < 1 or nx < 1:
        raise ArgumentError(f"image {w}x{h} holds no {size}px tile")
    y0, x0 = (h - ny * size) // 2, (w - nx * size) // 2
    tiles = [arr[y0 + i * size:y0 + (i + 1) * size, x0 + j * size:x0 + (j + 1) * size]
             for i in range(ny) for j in range(nx)]
    return np.add.reduce(patch_profiles(tiles, kind), axis=0) / len(tiles)
