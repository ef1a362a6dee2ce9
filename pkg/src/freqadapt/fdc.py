"""Frequency density comparator.

A shared encoder ``E`` maps a normalized frequency profile to a scalar and
the comparator is ``C(a, b) = E(a) - E(b)``.  It is trained so that a
downsampled patch scores +1 against its source, another patch of the same
image scores 0 and an upsampled patch scores -1, with the resampling factor
shrinking towards 1 over a curriculum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import ArgumentError, FormatError, TrainingError
from .imaging import PatchSpec, center_crop, decode_raw, encode_raw, make_rng, patch_offsets, resample_bicubic
from .nn import LEAKY_SLOPE, MLP, Adam, grads_finite
from .spectral import NORM_MODES, normalize_bins, patch_profile

MODEL_FORMAT = 1
DEGENERATE_ENERGY = 1e-6
# resampled patches are cut with this margin so mirrored borders stay out of the crop
RESAMPLE_MARGIN = 4


@dataclass(frozen=True)
class CurriculumSchedule:
    start_scale: float = 3.5
    end_scale: float = 1.2
    steps: int = 2000
    decay: str = "linear"

    def __post_init__(self):
        if not self.start_scale > self.end_scale > 1.0:
            raise ArgumentError("curriculum needs start_scale > end_scale > 1.0")
        if self.steps < 1:
            raise ArgumentError("curriculum steps must be >= 1")
        if self.decay not in ("linear", "geometric"):
            raise ArgumentError(f"unknown curriculum decay {self.decay!r}")

    def scale_at(self, iteration: int) -> float:
        frac = min(max(iteration, 0) / self.steps, 1.0)
        if self.decay == "linear":
            return self.start_scale + (self.end_scale - self.start_scale) * frac
        return self.start_scale * (self.end_scale / self.start_scale) ** frac


class ComparatorModel:
    """Shared encoder over normalized profiles; ``compare(a, b) = E(a) - E(b)``."""

    def __init__(self, n_bins_in=33, hidden=(64, 32), norm="unit-sum", seed=0, zero=False):
        if norm not in NORM_MODES:
            raise ArgumentError(f"unknown normalization {norm!r}")
        self.norm = norm
        rng = None if zero else make_rng(seed)
        self.encoder = MLP([n_bins_in, *hidden, 1], rng=rng, zero=zero)

    @property
    def n_in(self) -> int:
        return self.encoder.sizes[0]

    def prepare(self, bins) -> np.ndarray:
        b = np.atleast_2d(np.asarray(bins, dtype=np.float64))
        if b.shape[1] != self.n_in:
            raise ArgumentError(f"profile has {b.shape[1]} bins, model expects {self.n_in}")
        x = normalize_bins(b, self.norm)
        if self.norm == "unit-sum":
            x = x * self.n_in  # unit mean keeps encoder inputs O(1)
        return x

    def embed(self, bins) -> np.ndarray:
        return self.encoder(self.prepare(bins))

    def compare(self, a, b) -> np.ndarray:
        return self.embed(a) - self.embed(b)


def _bins(p) -> np.ndarray:
    return np.asarray(getattr(p, "bins", p), dtype=np.float64)


def comparator_forward(model: ComparatorModel, a, b) -> float:
    ab, bb = _bins(a), _bins(b)
    if ab.shape != bb.shape:
        raise ArgumentError(f"bin count mismatch: {ab.size} vs {bb.size}")
    return float(model.compare(ab, bb)[0])


class Triplet(NamedTuple):
    """Raw (unnormalized) profile bins of one training example."""

    down: np.ndarray
    same: np.ndarray
    up: np.ndarray
    anchor: np.ndarray

    @property
    def degenerate(self) -> bool:
        return min(float(np.sum(p)) for p in self) < DEGENERATE_ENERGY


def triplet_span(size: int, scale: float) -> int:
    """Side of the source region a triplet at ``scale`` consumes."""
    return int(math.ceil((size + RESAMPLE_MARGIN) * scale)) + 1


def make_triplet(x, scale: float, spec: PatchSpec, kind: str = "axis") -> Triplet:
    """Profiles of (downsampled, other, upsampled, anchor) patches of one image.

    Two regions of side :func:`triplet_span` are drawn with ``spec.seed``.
    The anchor is the centre ``spec.size`` crop of the first region, the
    downsampled patch the centre crop of the whole region shrunk by
    ``scale``, the upsampled patch the centre crop of a small centre region
    enlarged by ``scale``; the "same" patch is the centre crop of the second
    region.
    """
    if not scale > 1.0:
        raise ArgumentError(f"triplet scale must exceed 1.0, got {scale}")
    img = np.asarray(x, dtype=np.float64)
    size = spec.size
    span = triplet_span(size, scale)
    if span > min(img.shape):
        raise ArgumentError(f"image {img.shape[1]}x{img.shape[0]} too small for "
                            f"{size}px triplets at scale {scale:.3g} (needs {span})")
    (y0, x0), (y1, x1) = patch_offsets(img.shape, PatchSpec(span, 2, 1, spec.seed))
    region = img[y0:y0 + span, x0:x0 + span]
    other = img[y1:y1 + span, x1:x1 + span]

    anchor = center_crop(region, size)
    down = center_crop(resample_bicubic(region, 1.0 / scale), size)
    small = int(math.ceil(size / scale)) + RESAMPLE_MARGIN
    up = center_crop(resample_bicubic(center_crop(region, small), scale), size)
    same = center_crop(other, size)
    return Triplet(*(patch_profile(p, kind) for p in (down, same, up, anchor)))


# ------------------------------------------------------------------- losses


def _stack(triplets) -> np.ndarray:
    # rows ordered [down..., same..., up..., anchor...]
    return np.concatenate([np.stack([t[i] for t in triplets]) for i in range(4)])


def comparator_scores(model: ComparatorModel, triplets) -> np.ndarray:
    """``(batch, 3)`` array of C(down, x), C(same, x), C(up, x)."""
    triplets = list(triplets)
    e = model.embed(_stack(triplets)).reshape(4, len(triplets))
    return (e[:3] - e[3]).T


def fdc_train_loss(model: ComparatorModel, triplet) -> float:
    """|C(xD,x) - 1| + |C(x',x)| + |C(xU,x) + 1|, averaged over a batch."""
    batch = [triplet] if isinstance(triplet, Triplet) else list(triplet)
    s = comparator_scores(model, batch)
    return float(np.mean(np.abs(s[:, 0] - 1.0) + np.abs(s[:, 1]) + np.abs(s[:, 2] + 1.0)))


def fdc_loss_and_grads(model: ComparatorModel, triplets):
    triplets = list(triplets)
    b = len(triplets)
    out, cache = model.encoder.forward(model.prepare(_stack(triplets)))
    e = out.reshape(4, b)
    c = e[:3] - e[3]
    loss = np.abs(c[0] - 1.0) + np.abs(c[1]) + np.abs(c[2] + 1.0)
    dc = np.stack([np.sign(c[0] - 1.0), np.sign(c[1]), np.sign(c[2] + 1.0)]) / b
    de = np.concatenate([dc[0], dc[1], dc[2], -dc.sum(axis=0)])
    return float(loss.mean()), model.encoder.backward(cache, de), loss


def fdc_consistency_loss(model: ComparatorModel, g_profile, anchor, x_down, x_up) -> float:
    """|C(G, xD) + 1| + |C(G, x)| + |C(G, xU) - 1| for one generated profile."""
    g = _bins(g_profile)
    e = model.embed(np.stack([g, _bins(x_down), _bins(anchor), _bins(x_up)]))
    return float(abs(e[0] - e[1] + 1.0) + abs(e[0] - e[2]) + abs(e[0] - e[3] - 1.0))


def consistency_losses(model: ComparatorModel, g_bins, triplets) -> np.ndarray:
    """Vectorized :func:`fdc_consistency_loss` over a batch."""
    triplets = list(triplets)
    b = len(triplets)
    rows = np.concatenate([np.asarray(g_bins, dtype=np.float64),
                           np.stack([t.down for t in triplets]),
                           np.stack([t.anchor for t in triplets]),
                           np.stack([t.up for t in triplets])])
    e = model.embed(rows).reshape(4, b)
    return np.abs(e[0] - e[1] + 1.0) + np.abs(e[0] - e[2]) + np.abs(e[0] - e[3] - 1.0)


def ordering_accuracy(model: ComparatorModel, triplets) -> float:
    """Fraction of triplets with C(xD, x) > 0 and C(xU, x) < 0."""
    s = comparator_scores(model, triplets)
    return float(np.mean((s[:, 0] > 0) & (s[:, 2] < 0)))


# ----------------------------------------------------------------- training


@dataclass
class TrainState:
    model: ComparatorModel
    optimizer: Adam
    schedule: CurriculumSchedule = field(default_factory=CurriculumSchedule)
    iteration: int = 0
    seed: int = 0

    @classmethod
    def fresh(cls, model: ComparatorModel, schedule=None, seed=0, **adam) -> "TrainState":
        return cls(model, Adam.for_model(model.encoder, **adam),
                   schedule or CurriculumSchedule(), 0, seed)

    @property
    def scale(self) -> float:
        return self.schedule.scale_at(self.iteration)


def fdc_step(state: TrainState, batch, lr: float) -> TrainState:
    """One Adam update of the encoder on a batch of triplets (in place)."""
    batch = list(batch)
    if not batch:
        raise ArgumentError("fdc_step needs a non-empty batch")
    _, grads, per_item = fdc_loss_and_grads(state.model, batch)
    if not grads_finite(grads):
        bad = next((i for i, v in enumerate(per_item) if not np.isfinite(v)), None)
        raise TrainingError("non-finite comparator gradient", batch_index=bad)
    state.optimizer.step(state.model.encoder.params(), grads, lr)
    state.iteration += 1
    return state


# -------------------------------------------------------------- checkpoints


def encode_model(kind: str, mlp: MLP, **meta) -> bytes:
    head = [f"freqadapt-model format={MODEL_FORMAT}", f"kind={kind}",
            "layers=" + ",".join(str(s) for s in mlp.sizes),
            "activation=leaky_relu", f"slope={mlp.slope:g}"]
    head += [f"{k}={v}" for k, v in sorted(meta.items())]
    head.append(f"params={mlp.n_params()}")
    return ("\n".join(head) + "\n\n").encode() + encode_raw(mlp.get_flat())


def decode_model(blob: bytes, where="<bytes>") -> tuple[dict, MLP]:
    split = blob.find(b"\n\n")
    if split < 0:
        raise FormatError(f"{where}: checkpoint header not terminated")
    lines = blob[:split].decode().splitlines()
    first = lines[0].split()
    if not first or first[0] != "freqadapt-model":
        raise FormatError(f"{where}: not a freqadapt checkpoint")
    version = int(first[1].split("=", 1)[1])
    if version != MODEL_FORMAT:
        raise FormatError(f"{where}: unsupported checkpoint format {version}")
    meta = dict(ln.split("=", 1) for ln in lines[1:])
    sizes = [int(s) for s in meta["layers"].split(",")]
    mlp = MLP(sizes, slope=float(meta.get("slope", LEAKY_SLOPE)), zero=True)
    flat = decode_raw(blob[split + 2:], where).ravel()
    mlp.set_flat(flat)
    return meta, mlp


def save_comparator(model: ComparatorModel, path) -> None:
    Path(path).write_bytes(encode_model("fdc", model.encoder, normalization=model.norm))


def load_comparator(path) -> ComparatorModel:
    meta, mlp = decode_model(Path(path).read_bytes(), str(path))
    if meta.get("kind") != "fdc":
        raise FormatError(f"{path}: checkpoint kind {meta.get('kind')!r} is not 'fdc'")
    model = ComparatorModel(mlp.sizes[0], tuple(mlp.sizes[1:-1]), meta["normalization"], zero=True)
    model.encoder = mlp
    return model



# ------------------------------------------------------------ convenience


def sample_triplets(images, scale: float, count: int, rng, size: int = 64, kind: str = "axis") -> list:
    """``count`` non-degenerate triplets from randomly chosen images."""
    out, tries = [], 0
    while len(out) < count:
        tries += 1
        if tries > 20 * count:
            raise TrainingError(f"could not draw {count} textured triplets")
        img = images[int(rng.integers(len(images)))]
        t = make_triplet(img, scale, PatchSpec(size, 1, 1, int(rng.integers(2 ** 31))), kind)
        if not t.degenerate:
            out.append(t)
    return out


def train_comparator(images, iterations: int = 2000, batch: int = 8, lr: float = 1e-3,
                     schedule: CurriculumSchedule | None = None, size: int = 64, kind: str = "axis",
                     norm: str = "unit-sum", hidden=(64, 32), seed: int = 0, callback=None) -> TrainState:
    """Standalone curriculum training of a fresh comparator."""
    images = [np.asarray(x, dtype=np.float64) for x in images]
    if not images:
        raise ArgumentError("no training images")
    rng = make_rng(seed)
    model = ComparatorModel(size // 2 + 1, hidden, norm, seed=int(rng.integers(2 ** 31)))
    state = TrainState.fresh(model, schedule or CurriculumSchedule(steps=iterations), seed)
    for it in range(iterations):
        triplets = sample_triplets(images, state.scale, batch, rng, size, kind)
        fdc_step(state, triplets, lr)
        if callback:
            callback(it, state, triplets)
    return state
