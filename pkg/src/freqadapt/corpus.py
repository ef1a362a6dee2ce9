"""The bundled mini-corpus and the procedural generator that produced it.

The images are "dead leaves" renderings: opaque discs with power-law radii
(density ~ r^-3) painted front to back, which gives the scale-invariant
1/f amplitude spectrum of natural photographs.  Each leaf carries a gentle
linear shading and the whole image a faint 1/f texture.  Rendering happens
at 4x the output size and is reduced with the package's own antialiased
bicubic filter, so the images carry no blur beyond that filter.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np

from .imaging import load_image, make_rng, resample_bicubic, save_image

CORPUS_SIZE = 16
IMAGE_SIDE = 512
SUPERSAMPLE = 4


def _power_law_radii(rng, n, rmin, rmax):
    # inverse CDF of p(r) ~ r^-3 on [rmin, rmax]
    u = rng.uniform(size=n)
    a, b = rmin ** -2, rmax ** -2
    return (a - u * (a - b)) ** -0.5


def _pink_noise(rng, side):
    f = np.fft.fftfreq(side)
    rad = np.hypot(f[:, None], f[None, :])
    rad[0, 0] = 1.0
    spec = (rng.normal(size=(side, side)) + 1j * rng.normal(size=(side, side))) / rad
    spec[0, 0] = 0.0
    field = np.real(np.fft.ifft2(spec))
    return field / field.std()


def dead_leaves(seed: int, side: int = IMAGE_SIDE, supersample: int = SUPERSAMPLE,
                max_leaves: int = 400_000) -> np.ndarray:
    rng = make_rng(seed)
    big = side * supersample
    rmin, rmax = 0.5 * supersample, 0.6 * big
    canvas = np.zeros((big, big))
    covered = np.zeros((big, big), dtype=bool)
    done = 0
    batch = 4096
    while done < max_leaves:
        radii = _power_law_radii(rng, batch, rmin, rmax)
        centers = rng.uniform(0, big, size=(batch, 2))
        values = rng.uniform(0.08, 0.92, size=batch)
        slopes = rng.normal(scale=0.25, size=(batch, 2)) / big
        for (cy, cx), r, v, (gy, gx) in zip(centers, radii, values, slopes):
            y0, y1 = max(int(cy - r), 0), min(int(cy + r) + 1, big)
            x0, x1 = max(int(cx - r), 0), min(int(cx + r) + 1, big)
            if y0 >= y1 or x0 >= x1:
                continue
            free = ~covered[y0:y1, x0:x1]
            if not free.any():
                continue
            yy = np.arange(y0, y1)[:, None] - cy
            xx = np.arange(x0, x1)[None, :] - cx
            mask = free & (yy * yy + xx * xx <= r * r)
            if not mask.any():
                continue
            canvas[y0:y1, x0:x1][mask] = (v + gy * yy + gx * xx)[mask]
            covered[y0:y1, x0:x1] |= mask
        done += batch
        if covered.mean() > 0.9995:
            break
    canvas[~covered] = 0.5
    canvas += 0.03 * _pink_noise(rng, big)
    small = resample_bicubic(np.clip(canvas, 0.0, 1.0), 1.0 / supersample)
    return np.clip(small, 0.0, 1.0)


def corpus_dir() -> Path:
    return Path(str(resources.files("freqadapt") / "data" / "minicorpus"))


def corpus_files(directory=None) -> list[Path]:
    d = Path(directory) if directory is not None else corpus_dir()
    return sorted(p for p in d.iterdir() if p.suffix.lower() in (".png", ".fqa"))


def load_corpus(directory=None, limit: int | None = None) -> list[np.ndarray]:
    files = corpus_files(directory)
    if limit is not None:
        files = files[:limit]
    return [load_image(p) for p in files]


def build_minicorpus(out_dir, count: int = CORPUS_SIZE, first_seed: int = 1000) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(count):
        p = out / f"leaves_{i:02d}.png"
        save_image(dead_leaves(first_seed + i), p)
        paths.append(p)
    return paths


if __name__ == "__main__":
    import sys

    target = sys.argv[1] if len(sys.argv) > 1 else corpus_dir()
    for p in build_minicorpus(target):
        print(p)
