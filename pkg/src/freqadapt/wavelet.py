"""Single-level orthonormal Haar transform and the high-band discriminator.

The discriminator never sees the LL band.  Its input is a fixed-length
feature vector built from LH, HL and HH: per-band mean absolute value and
variance, followed by the log1p axis profile of each band.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ArgumentError, FormatError, TrainingError
from .fdc import decode_model, encode_model
from .imaging import make_rng
from .nn import MLP, Adam, grads_finite
from .spectral import n_bins, patch_profile

HIDDEN = (32, 32, 16)


@dataclass(frozen=True)
class WaveletBands:
    ll: np.ndarray
    lh: np.ndarray
    hl: np.ndarray
    hh: np.ndarray
    cropped: tuple[int, int] = (0, 0)

    def high(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.lh, self.hl, self.hh


def haar_dwt(img) -> WaveletBands:
    x = np.asarray(img, dtype=np.float64)
    if x.ndim != 2 or min(x.shape) < 2:
        raise ArgumentError(f"Haar analysis needs at least 2x2 input, got {x.shape}")
    h, w = x.shape
    x = x[: h - h % 2, : w - w % 2]
    a, b = x[0::2, 0::2], x[0::2, 1::2]
    c, d = x[1::2, 0::2], x[1::2, 1::2]
    return WaveletBands(
        ll=(a + b + c + d) / 2.0,
        lh=(a - b + c - d) / 2.0,  # horizontal differences
        hl=(a + b - c - d) / 2.0,  # vertical differences
        hh=(a - b - c + d) / 2.0,
        cropped=(h % 2, w % 2),
    )


def haar_idwt(bands: WaveletBands) -> np.ndarray:
    ll, lh, hl, hh = (np.asarray(v, dtype=np.float64) for v in (bands.ll, bands.lh, bands.hl, bands.hh))
    if not (ll.shape == lh.shape == hl.shape == hh.shape) or ll.ndim != 2:
        raise ArgumentError("wavelet bands must share one 2D shape")
    h, w = ll.shape
    out = np.empty((2 * h, 2 * w))
    out[0::2, 0::2] = (ll + lh + hl + hh) / 2.0
    out[0::2, 1::2] = (ll - lh + hl - hh) / 2.0
    out[1::2, 0::2] = (ll + lh - hl - hh) / 2.0
    out[1::2, 1::2] = (ll - lh - hl + hh) / 2.0
    return out


def feature_size(patch_size: int) -> int:
    return 6 + 3 * n_bins(patch_size // 2)


def band_features(patch) -> np.ndarray:
    bands = haar_dwt(patch).high()
    stats = [f(b) for b in bands for f in (lambda b: np.abs(b).mean(), np.var)]
    profiles = [np.log1p(patch_profile(b, "axis")) for b in bands]
    return np.concatenate([np.asarray(stats), *profiles])


def features(patches) -> np.ndarray:
    return np.stack([band_features(p) for p in patches])


class DiscriminatorModel:
    """Four linear layers with leaky-ReLU between them and a scalar output."""

    def __init__(self, n_features: int, hidden=HIDDEN, seed=0, zero=False):
        self.net = MLP([n_features, *hidden, 1], rng=None if zero else make_rng(seed), zero=zero)

    def __call__(self, feats) -> np.ndarray:
        out = self.net(np.atleast_2d(feats))
        if not np.all(np.isfinite(out)):
            raise TrainingError("discriminator produced non-finite scores")
        return out


def wd_loss_discriminator(model: DiscriminatorModel, real_hf, fake_hf) -> float:
    """Least-squares critic objective: mean D(fake)^2 + mean (D(real) - 1)^2."""
    return float(np.mean(model(fake_hf) ** 2) + np.mean((model(real_hf) - 1.0) ** 2))


def wd_loss_generator(model: DiscriminatorModel, fake_hf) -> float:
    """Least-squares generator objective: mean (D(fake) - 1)^2."""
    return float(np.mean((model(fake_hf) - 1.0) ** 2))


def wd_grads(model: DiscriminatorModel, real_hf, fake_hf):
    real = np.atleast_2d(real_hf)
    fake = np.atleast_2d(fake_hf)
    out, cache = model.net.forward(np.concatenate([real, fake]))
    nr = real.shape[0]
    dr, df = out[:nr] - 1.0, out[nr:]
    dout = np.concatenate([2.0 * dr / nr, 2.0 * df / fake.shape[0]])
    return model.net.backward(cache, dout), out


@dataclass
class WDState:
    model: DiscriminatorModel
    optimizer: Adam
    iteration: int = 0

    @classmethod
    def fresh(cls, model: DiscriminatorModel, **adam) -> "WDState":
        return cls(model, Adam.for_model(model.net, **adam))


def wd_step(state: WDState, real_batch, fake_batch, lr: float) -> WDState:
    if len(real_batch) == 0 or len(fake_batch) == 0:
        raise ArgumentError("wd_step needs non-empty real and fake batches")
    grads, out = wd_grads(state.model, real_batch, fake_batch)
    if not grads_finite(grads):
        bad = next((i for i, v in enumerate(out) if not np.isfinite(v)), None)
        raise TrainingError("non-finite discriminator gradient", batch_index=bad)
    state.optimizer.step(state.model.net.params(), grads, lr)
    state.iteration += 1
    return state


def save_discriminator(model: DiscriminatorModel, path) -> None:
    Path(path).write_bytes(encode_model("wd", model.net))


def load_discriminator(path) -> DiscriminatorModel:
    meta, mlp = decode_model(Path(path).read_bytes(), str(path))
    if meta.get("kind") != "wd":
        raise FormatError(f"{path}: checkpoint kind {meta.get('kind')!r} is not 'wd'")
    model = DiscriminatorModel(mlp.sizes[0], zero=True)
    model.net = mlp
    return model
