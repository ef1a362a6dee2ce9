"""Fully connected networks with hand-derived backpropagation and Adam.

Both the comparator encoder and the wavelet discriminator are instances of
:class:`MLP`: linear layers with leaky-ReLU between them and a linear
scalar head.  Weights are ``float64`` throughout so gradients can be checked
against central finite differences.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ArgumentError

LEAKY_SLOPE = 0.2


def leaky_relu(z, slope=LEAKY_SLOPE):
    return np.where(z > 0, z, slope * z)


def leaky_relu_grad(z, slope=LEAKY_SLOPE):
    return np.where(z > 0, 1.0, slope)


class MLP:
    """``sizes = [n_in, h1, ..., 1]``; ``weights[i]`` has shape ``(out, in)``."""

    def __init__(self, sizes, rng=None, slope=LEAKY_SLOPE, zero=False):
        sizes = [int(s) for s in sizes]
        if len(sizes) < 2 or min(sizes) < 1:
            raise ArgumentError(f"invalid layer sizes {sizes}")
        self.sizes = sizes
        self.slope = slope
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            if zero or rng is None:
                w = np.zeros((fan_out, fan_in))
            else:
                # He initialization for leaky-ReLU
                gain = math.sqrt(2.0 / (1.0 + slope ** 2))
                w = rng.normal(scale=gain / math.sqrt(fan_in), size=(fan_out, fan_in))
            self.weights.append(w)
            self.biases.append(np.zeros(fan_out))

    # ----- parameters as one flat vector (checkpoints, gradient checks)

    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def n_params(self) -> int:
        return sum(p.size for p in self.params())

    def get_flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.params()])

    def set_flat(self, flat) -> None:
        flat = np.asarray(flat, dtype=np.float64)
        if flat.size != self.n_params():
            raise ArgumentError(f"expected {self.n_params()} parameters, got {flat.size}")
        i = 0
        for p in self.params():
            p[...] = flat[i:i + p.size].reshape(p.shape)
            i += p.size

    def copy(self) -> "MLP":
        other = MLP(self.sizes, slope=self.slope, zero=True)
        other.set_flat(self.get_flat())
        return other

    # ----- forward / backward

    def forward(self, x):
        """Return ``(out, cache)``; ``x`` is ``(batch, n_in)``, ``out`` is ``(batch,)``."""
        a = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if a.shape[1] != self.sizes[0]:
            raise ArgumentError(f"input width {a.shape[1]} != model input size {self.sizes[0]}")
        acts, pre = [a], []
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w.T + b
            pre.append(z)
            a = z if i == last else leaky_relu(z, self.slope)
            acts.append(a)
        return a[:, 0], (acts, pre)

    def __call__(self, x):
        return self.forward(x)[0]

    def backward(self, cache, dout) -> list[np.ndarray]:
        """Gradients in :meth:`params` order given ``dL/dout`` of shape ``(batch,)``."""
        acts, pre = cache
        delta = np.asarray(dout, dtype=np.float64).reshape(-1, 1)
        grads = [None] * (2 * len(self.weights))
        for i in range(len(self.weights) - 1, -1, -1):
            if i != len(self.weights) - 1:
                delta = delta * leaky_relu_grad(pre[i], self.slope)
            grads[2 * i] = delta.T @ acts[i]
            grads[2 * i + 1] = delta.sum(axis=0)
            if i:
                delta = delta @ self.weights[i]
        return grads


class Adam:
    def __init__(self, shapes, beta1=0.9, beta2=0.999, eps=1e-8):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]
        self.t = 0

    @classmethod
    def for_model(cls, model: MLP, **kw) -> "Adam":
        return cls([p.shape for p in model.params()], **kw)

    def step(self, params, grads, lr: float) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            if lr:
                p -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)

    def flat_moments(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.concatenate([m.ravel() for m in self.m]),
                np.concatenate([v.ravel() for v in self.v]))


def grads_finite(grads) -> bool:
    return all(np.all(np.isfinite(g)) for g in grads)


def flatten(arrays) -> np.ndarray:
    return np.concatenate([np.ravel(a) for a in arrays])


def numeric_gradient(loss_fn, model: MLP, coords, delta=1e-4) -> np.ndarray:
    """Central differences of ``loss_fn()`` w.r.t. the chosen flat coordinates."""
    flat = model.get_flat()
    out = np.empty(len(coords))
    for j, c in enumerate(coords):
        keep = flat[c]
        flat[c] = keep + delta
        model.set_flat(flat)
        up = loss_fn()
        flat[c] = keep - delta
        model.set_flat(flat)
        down = loss_fn()
        flat[c] = keep
        out[j] = (up - down) / (2.0 * delta)
    model.set_flat(flat)
    return out
