"""Kernel estimation for an unlabeled corpus.

Two searches over one global :class:`KernelParams` per corpus:

* :func:`estimate_direct` minimizes the corpus-mean profile distance between
  ``G(x) = (x down s) conv k`` and ``x`` with a coarse grid followed by
  coordinate descent.  It is deterministic and serves as the reference.
* :func:`estimate_fca` trains the comparator and the wavelet discriminator
  on the fly and moves the kernel parameters along simultaneous-perturbation
  gradient estimates of ``lambda1 * L_fdc + lambda2 * L_wd``.
"""

from __future__ import annotations

import io
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import AppConfig
from .errors import ArgumentError, EstimationError, FormatError, TrainingError
from .fdc import (ComparatorModel, CurriculumSchedule, TrainState, consistency_losses, fdc_step,
                  make_triplet, triplet_span)
from .imaging import PatchSpec, check_plane, load_image, load_rgb, make_rng, save_image, save_rgb
from .kernels import (KernelParams, crop_to_multiple, degrade, DegradationConfig, downsample,
                      gaussian_kernel, blur, wrap_angle)
from .spectral import freq_distance, normalize_bins, patch_profile, tile_profile
from .wavelet import DiscriminatorModel, WDState, feature_size, features, wd_loss_generator, wd_step

ABLATIONS = ("both", "fdc-only", "wd-only")
HR_POLICIES = ("bicubic-2x", "source")
DEGENERATE_STD = 1e-4


@dataclass(frozen=True)
class EstimatorConfig:
    lambda1: float = 1.0
    lambda2: float = 0.001
    iterations: int = 2000
    warmup: int = 200
    images_per_step: int = 4
    patch_size: int = 64
    curriculum: CurriculumSchedule = field(default_factory=CurriculumSchedule)
    r_min: float = 0.1
    r_max: float = 3.0
    seed: int = 0
    scale: int = 4
    kernel_side: int = 13
    profile_kind: str = "axis"
    normalization: str = "unit-sum"
    fdc_hidden: tuple[int, int] = (64, 32)
    fdc_lr: float = 1e-3
    wd_lr: float = 1e-3
    gen_lr: float = 0.02
    perturbation: float = 0.02
    adam: tuple[float, float, float] = (0.9, 0.999, 1e-8)
    plateau_window: int = 100
    plateau_tol: float = 1e-5
    divergence_factor: float = 10.0
    generator_input: int = 512
    grid_r_steps: int = 15
    grid_theta_steps: int = 4
    direct_profile_kind: str = "oriented"

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ArgumentError("lambda weights must be >= 0")
        if self.iterations < 1:
            raise ArgumentError("iterations must be >= 1")

    @classmethod
    def from_app(cls, cfg: AppConfig, **overrides) -> "EstimatorConfig":
        steps = cfg.curriculum_steps or cfg.iterations
        kw = dict(
            lambda1=cfg.lambda1, lambda2=cfg.lambda2, iterations=cfg.iterations, warmup=cfg.warmup,
            images_per_step=cfg.images_per_step, patch_size=cfg.patch_size,
            curriculum=CurriculumSchedule(cfg.curriculum_start, cfg.curriculum_end, steps,
                                          cfg.curriculum_decay),
            r_min=cfg.r_min, r_max=cfg.r_max, seed=cfg.seed, scale=cfg.scale,
            kernel_side=cfg.kernel_side, profile_kind=cfg.profile_kind,
            normalization=cfg.normalization, fdc_hidden=(cfg.fdc_hidden1, cfg.fdc_hidden2),
            fdc_lr=cfg.fdc_lr, wd_lr=cfg.wd_lr, gen_lr=cfg.gen_lr, perturbation=cfg.perturbation,
            adam=(cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps),
            plateau_window=cfg.plateau_window, plateau_tol=cfg.plateau_tol,
            divergence_factor=cfg.divergence_factor, generator_input=cfg.generator_input,
            grid_r_steps=cfg.grid_r_steps, grid_theta_steps=cfg.grid_theta_steps,
            direct_profile_kind=cfg.direct_profile_kind,
        )
        kw.update(overrides)
        return cls(**kw)

    def echo(self) -> dict:
        d = asdict(self)
        cur = d.pop("curriculum")
        d.update({f"curriculum_{k}": v for k, v in cur.items()})
        d["fdc_hidden"] = ",".join(str(v) for v in self.fdc_hidden)
        d["adam"] = ",".join(f"{v:g}" for v in self.adam)
        return d


@dataclass
class EstimationReport:
    method: str
    estimated: KernelParams
    trace: list[tuple] = field(default_factory=list)  # (iteration, l_fdc, l_wd, l_total, r1, r2, theta)
    final_distance: float = float("nan")
    wall_seconds: float = 0.0
    config: dict = field(default_factory=dict)
    status: str = "ok"
    extra: dict = field(default_factory=dict)

    TRACE_COLUMNS = ("iteration", "l_fdc", "l_wd", "l_total", "r1", "r2", "theta")

    def to_text(self, include_timing: bool = False) -> str:
        p = self.estimated
        out = io.StringIO()
        out.write("[report]\n")
        rows = [("method", self.method), ("status", self.status), ("tool_version", __version__),
                ("r1", p.r1), ("r2", p.r2), ("theta", p.theta),
                ("sigma2_r1", p.r1 ** 2), ("sigma2_r2", p.r2 ** 2), ("sigma2_mean", p.sigma2),
                ("final_distance", self.final_distance), ("iterations_run", len(self.trace))]
        if include_timing:
            rows.append(("wall_seconds", self.wall_seconds))
        rows += sorted(self.extra.items())
        for k, v in rows:
            out.write(f"{k}={_fmt(v)}\n")
        out.write("[config]\n")
        for k, v in sorted(self.config.items()):
            out.write(f"{k}={_fmt(v)}\n")
        out.write("[trace]\n")
        out.write(",".join(self.TRACE_COLUMNS) + "\n")
        for row in self.trace:
            out.write(",".join([str(int(row[0]))] + [_fmt(v) for v in row[1:]]) + "\n")
        return out.getvalue()

    def write(self, path, include_timing: bool = False) -> None:
        Path(path).write_text(self.to_text(include_timing))

    @classmethod
    def from_text(cls, text: str) -> "EstimationReport":
        section, head, conf, trace = None, {}, {}, []
        for ln in text.splitlines():
            ln = ln.strip()
            if not ln:
                continue
            if ln.startswith("[") and ln.endswith("]"):
                section = ln[1:-1]
                continue
            if section == "report":
                k, v = ln.split("=", 1)
                head[k] = v
            elif section == "config":
                k, v = ln.split("=", 1)
                conf[k] = v
            elif section == "trace" and not ln.startswith("iteration"):
                vals = ln.split(",")
                trace.append(tuple([int(vals[0])] + [float(v) for v in vals[1:]]))
        try:
            params = KernelParams(float(head["r1"]), float(head["r2"]), float(head["theta"]))
        except (KeyError, ValueError) as exc:
            raise FormatError(f"report lacks valid kernel parameters: {exc}") from exc
        rep = cls(head.get("method", "?"), params, trace, float(head.get("final_distance", "nan")),
                  float(head.get("wall_seconds", 0.0)), conf, head.get("status", "ok"))
        return rep

    @classmethod
    def read(cls, path) -> "EstimationReport":
        return cls.from_text(Path(path).read_text())


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.9g}"
    return str(v)


# ------------------------------------------------------------------ helpers


def prepare_corpus(corpus, max_side: int | None = None) -> list[np.ndarray]:
    """Validate planes and centre-crop any side longer than ``max_side``."""
    imgs = []
    for img in corpus:
        arr = check_plane(img)
        if max_side:
            h, w = arr.shape
            ch, cw = min(h, max_side), min(w, max_side)
            y, x = (h - ch) // 2, (w - cw) // 2
            arr = arr[y:y + ch, x:x + cw]
        imgs.append(arr)
    if not imgs:
        raise ArgumentError("corpus is empty")
    return imgs


def _textured(img: np.ndarray) -> bool:
    return float(img.std()) > DEGENERATE_STD


def project(vec, r_min, r_max) -> np.ndarray:
    v = np.array(vec, dtype=np.float64)
    v[:2] = np.clip(v[:2], r_min, r_max)
    v[2] = wrap_angle(v[2])
    return v


def to_params(vec) -> KernelParams:
    return KernelParams(float(vec[0]), float(vec[1]), float(vec[2]))


class ProfileObjective:
    """Corpus-mean distance between normalized profiles of ``G(x)`` and ``x``."""

    def __init__(self, corpus, scale, kernel_side, patch_size, kind="axis", norm="unit-sum"):
        self.kernel_side = kernel_side
        self.kind, self.norm = kind, norm
        self.lows, self.targets = [], []
        for x in corpus:
            low = downsample(x, scale)
            if not _textured(x) or min(low.shape) < max(patch_size, kernel_side):
                continue
            self.lows.append(low)
            self.targets.append(normalize_bins(tile_profile(x, patch_size, kind), norm))
        if not self.lows:
            raise EstimationError("no usable (textured, large enough) images in the corpus")
        self.patch_size = patch_size
        self.evaluations = 0

    def generated(self, params: KernelParams) -> list[np.ndarray]:
        k = gaussian_kernel(params, self.kernel_side)
        return [blur(low, k) for low in self.lows]

    def per_image(self, params: KernelParams) -> np.ndarray:
        self.evaluations += 1
        out = []
        for g, t in zip(self.generated(params), self.targets):
            prof = normalize_bins(tile_profile(g, self.patch_size, self.kind), self.norm)
            out.append(freq_distance(prof, t))
        return np.asarray(out)

    def __call__(self, params: KernelParams) -> float:
        return float(np.mean(self.per_image(params)))


# ----------------------------------------------------------- direct search


@dataclass(frozen=True)
class GridSpec:
    r_values: tuple[float, ...]
    theta_values: tuple[float, ...]

    @classmethod
    def default(cls, r_min=0.1, r_max=3.0, r_steps=15, theta_steps=4) -> "GridSpec":
        r = tuple(float(v) for v in np.linspace(r_min, r_max, r_steps))
        th = tuple(float(v) for v in np.arange(theta_steps) * math.pi / theta_steps)
        return cls(r, th)

    def points(self):
        """Grid points in tie-break order (r1, then r2, then theta)."""
        for r1 in self.r_values:
            for r2 in self.r_values:
                thetas = self.theta_values[:1] if r1 == r2 else self.theta_values
                for th in thetas:
                    yield (r1, r2, th)


def _coordinate_descent(objective, start, best, steps, r_min, r_max, min_sweeps=3, tol=2e-3,
                        max_sweeps=60):
    x = np.array(start, dtype=np.float64)
    steps = np.array(steps, dtype=np.float64)
    history = [(x.copy(), best)]
    sweeps = 0
    while sweeps < max_sweeps:
        sweeps += 1
        moved = False
        for j in range(3):
            for sign in (1.0, -1.0):
                cand = x.copy()
                cand[j] += sign * steps[j]
                cand = project(cand, r_min, r_max)
                if np.allclose(cand, x):
                    continue
                val = objective(to_params(cand))
                if val < best:
                    x, best, moved = cand, val, True
                    history.append((x.copy(), best))
                    break
        if not moved:
            steps /= 2.0
            if sweeps >= min_sweeps and steps[0] < tol:
                break
    return x, best, history, sweeps


def estimate_direct(corpus, scale: int = 4, grid: GridSpec | None = None, *, kernel_side: int = 13,
                    patch_size: int = 64, kind: str = "oriented", norm: str = "unit-sum",
                    r_min: float = 0.1, r_max: float = 3.0, generator_input: int | None = 512,
                    ) -> EstimationReport:
    """Grid search then coordinate descent on the profile distance."""
    t0 = time.perf_counter()
    imgs = prepare_corpus(corpus, generator_input)
    grid = grid or GridSpec.default(r_min, r_max)
    objective = ProfileObjective(imgs, scale, kernel_side, patch_size, kind, norm)

    visited = []
    best_val, best_pt = math.inf, None
    for pt in grid.points():
        val = objective(KernelParams(*pt))
        visited.append((pt, val))
        if val < best_val:  # strict: earlier points win ties
            best_val, best_pt = val, pt

    r_step = (grid.r_values[1] - grid.r_values[0]) / 2 if len(grid.r_values) > 1 else 0.1
    th_step = (grid.theta_values[1] - grid.theta_values[0]) / 2 if len(grid.theta_values) > 1 else math.pi / 8
    x, val, history, sweeps = _coordinate_descent(objective, best_pt, best_val,
                                                  (r_step, r_step, th_step), r_min, r_max)
    trace = [(i, math.nan, math.nan, v, *pt) for i, (pt, v) in enumerate(history)]
    report = EstimationReport(
        "direct", to_params(x), trace, float(val), time.perf_counter() - t0,
        config=dict(scale=scale, kernel_side=kernel_side, patch_size=patch_size, profile_kind=kind,
                    normalization=norm, r_min=r_min, r_max=r_max,
                    grid_r=",".join(f"{v:.6g}" for v in grid.r_values),
                    grid_theta=",".join(f"{v:.6g}" for v in grid.theta_values)),
        extra=dict(grid_best_r1=best_pt[0], grid_best_r2=best_pt[1], grid_best_theta=best_pt[2],
                   grid_best_distance=best_val, evaluations=objective.evaluations, sweeps=sweeps,
                   images_used=len(objective.lows)),
    )
    report.visited = visited
    return report


# -------------------------------------------------------------- FCA search


def _axial_mean(thetas) -> float:
    # theta and theta + pi describe the same kernel: average doubled angles
    z = np.mean(np.exp(2j * np.asarray(thetas)))
    return wrap_angle(0.5 * math.atan2(z.imag, z.real)) if abs(z) > 1e-12 else 0.0


class _Batch:
    """Everything one FCA iteration needs from its sampled images."""

    def __init__(self, triplets, lows, g_offsets, real_feats):
        self.triplets = triplets
        self.lows = lows
        self.g_offsets = g_offsets
        self.real_feats = real_feats


def estimate_fca(corpus, cfg: EstimatorConfig | None = None, ablation: str = "both",
                 init: KernelParams | None = None) -> EstimationReport:
    """Joint comparator/discriminator training and kernel-parameter search."""
    cfg = cfg or EstimatorConfig()
    if ablation not in ABLATIONS:
        raise ArgumentError(f"unknown ablation {ablation!r}; expected one of {ABLATIONS}")
    t0 = time.perf_counter()
    imgs = [x for x in prepare_corpus(corpus, cfg.generator_input) if _textured(x)]
    P = cfg.patch_size
    need = triplet_span(P, cfg.curriculum.start_scale)
    usable = [x for x in imgs if min(x.shape) >= need and min(x.shape) // cfg.scale >= max(P, cfg.kernel_side)]
    if not usable:
        raise EstimationError(f"no textured source image is large enough (need >= {need}px "
                              f"and >= {P * cfg.scale}px for {P}px profiles)")
    lows = [downsample(x, cfg.scale) for x in usable]
    w1 = cfg.lambda1 if ablation in ("both", "fdc-only") else 0.0
    w2 = cfg.lambda2 if ablation in ("both", "wd-only") else 0.0

    rng = make_rng(cfg.seed)
    b1, b2, eps = cfg.adam
    fdc = TrainState.fresh(ComparatorModel(P // 2 + 1, cfg.fdc_hidden, cfg.normalization,
                                           seed=int(rng.integers(2 ** 31))),
                           cfg.curriculum, cfg.seed, beta1=b1, beta2=b2, eps=eps)
    wd = WDState.fresh(DiscriminatorModel(feature_size(P), seed=int(rng.integers(2 ** 31))),
                       beta1=b1, beta2=b2, eps=eps)

    theta = project([init.r1, init.r2, init.theta] if init else [1.0, 1.0, 0.0], cfg.r_min, cfg.r_max)
    delta = cfg.perturbation
    trace = []
    ema, reference = None, None
    status = "ok"

    def sample_batch(scale) -> _Batch:
        idx = rng.integers(0, len(usable), size=cfg.images_per_step)
        triplets, blows, offs, reals = [], [], [], []
        for i in idx:
            x = usable[i]
            t = make_triplet(x, scale, PatchSpec(P, 1, 1, int(rng.integers(2 ** 31))), cfg.profile_kind)
            low = lows[i]
            gy = int(rng.integers(0, low.shape[0] - P + 1))
            gx = int(rng.integers(0, low.shape[1] - P + 1))
            ry = int(rng.integers(0, x.shape[0] - P + 1))
            rx = int(rng.integers(0, x.shape[1] - P + 1))
            if t.degenerate:
                continue
            triplets.append(t)
            blows.append(low)
            offs.append((gy, gx))
            reals.append(x[ry:ry + P, rx:rx + P])
        return _Batch(triplets, blows, offs, features(reals) if reals else None)

    def generated(vec, batch):
        k = gaussian_kernel(to_params(vec), cfg.kernel_side)
        patches = []
        for low, (gy, gx) in zip(batch.lows, batch.g_offsets):
            g = blur(low, k)
            patches.append(g[gy:gy + P, gx:gx + P])
        return patches

    def losses(vec, batch):
        patches = generated(vec, batch)
        g_bins = np.stack([patch_profile(p, cfg.profile_kind) for p in patches])
        l_fdc = float(np.mean(consistency_losses(fdc.model, g_bins, batch.triplets)))
        l_wd = wd_loss_generator(wd.model, features(patches))
        return l_fdc, l_wd, w1 * l_fdc + w2 * l_wd

    iterates = []
    for it in range(cfg.iterations):
        batch = sample_batch(fdc.scale)
        if not batch.triplets:
            continue
        # critics first, on the current generator output
        fake_now = generated(theta, batch)
        fdc_step(fdc, batch.triplets, cfg.fdc_lr)
        wd_step(wd, batch.real_feats, features(fake_now), cfg.wd_lr)

        signs = rng.choice([-1.0, 1.0], size=3)
        plus = project(theta + delta * signs, cfg.r_min, cfg.r_max)
        minus = project(theta - delta * signs, cfg.r_min, cfg.r_max)
        lf_p, lw_p, lt_p = losses(plus, batch)
        lf_m, lw_m, lt_m = losses(minus, batch)
        l_fdc, l_wd, l_tot = 0.5 * (lf_p + lf_m), 0.5 * (lw_p + lw_m), 0.5 * (lt_p + lt_m)
        if not (math.isfinite(lt_p) and math.isfinite(lt_m)):
            rep = _report(cfg, ablation, iterates, trace, t0, "failed", fdc, wd, usable)
            raise TrainingError(f"non-finite generator objective at iteration {it}", partial=rep)

        if it >= cfg.warmup and (w1 > 0 or w2 > 0):
            span = plus - minus
            span[2] = (plus[2] - minus[2] + math.pi) % (2 * math.pi) - math.pi
            grad = np.where(np.abs(span) > 1e-12, (lt_p - lt_m) / np.where(span == 0, 1, span), 0.0)
            lr = cfg.gen_lr / (1.0 + (it - cfg.warmup) / max(cfg.iterations / 4, 1))
            theta = project(theta - lr * grad, cfg.r_min, cfg.r_max)

        trace.append((it, l_fdc, l_wd, l_tot, *theta))
        iterates.append(theta.copy())

        ema = l_tot if ema is None else 0.95 * ema + 0.05 * l_tot
        if it == max(cfg.warmup, 20):
            reference = ema
        if reference is not None and reference > 0 and ema > cfg.divergence_factor * reference:
            status = "diverged"
            rep = _report(cfg, ablation, iterates, trace, t0, status, fdc, wd, usable)
            raise TrainingError(f"generator objective diverged at iteration {it}", partial=rep)
        W = cfg.plateau_window
        if it >= cfg.warmup + 2 * W and cfg.plateau_tol > 0:
            recent = [r[3] for r in trace[-W:]]
            older = [r[3] for r in trace[-2 * W:-W]]
            if abs(np.mean(recent) - np.mean(older)) < cfg.plateau_tol:
                status = "plateau"
                break

    return _report(cfg, ablation, iterates, trace, t0, status, fdc, wd, usable)


def _report(cfg, ablation, iterates, trace, t0, status, fdc, wd, usable) -> EstimationReport:
    if iterates:
        tail = np.array(iterates[-max(1, len(iterates) // 10):])
        est = KernelParams(float(tail[:, 0].mean()), float(tail[:, 1].mean()), _axial_mean(tail[:, 2]))
    else:
        est = KernelParams(1.0, 1.0, 0.0)
    objective = ProfileObjective(usable, cfg.scale, cfg.kernel_side, cfg.patch_size,
                                 cfg.profile_kind, cfg.normalization)
    rep = EstimationReport(f"fca-{ablation}", est, trace, objective(est), time.perf_counter() - t0,
                           config=cfg.echo(), status=status,
                           extra=dict(ablation=ablation, final_scale=fdc.scale,
                                      fdc_iterations=fdc.iteration, wd_iterations=wd.iteration))
    rep.comparator = fdc.model
    rep.discriminator = wd.model
    return rep


# ------------------------------------------------------------ pair output


def hr_from_source(img: np.ndarray, policy: str) -> np.ndarray:
    if policy == "source":
        return img
    if policy == "bicubic-2x":
        arr, _ = crop_to_multiple(img, 2)
        return downsample(arr, 2)
    raise ArgumentError(f"unknown HR policy {policy!r}")


def make_pair(img: np.ndarray, params: KernelParams, scale: int, hr_policy: str = "bicubic-2x",
              kernel_side: int = 13):
    """``(hr, lr, (rows, cols) cropped from the HR)`` for one plane."""
    hr, crop = crop_to_multiple(hr_from_source(img, hr_policy), scale)
    return hr, degrade(hr, DegradationConfig(scale, kernel_side, params)), crop


def generate_pairs(corpus, params: KernelParams, scale: int, out_dir, hr_policy: str = "bicubic-2x",
                   kernel_side: int = 13) -> Path:
    """Write HR/LR pairs and ``manifest.txt``; returns the manifest path.

    ``corpus`` is a list of image paths (colour files keep their channels,
    each blurred with the same kernel) or of ``(name, plane)`` tuples.
    """
    if hr_policy not in HR_POLICIES:
        raise ArgumentError(f"unknown HR policy {hr_policy!r}")
    out = Path(out_dir)
    try:
        (out / "hr").mkdir(parents=True, exist_ok=True)
        (out / "lr").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    pairs, skipped = [], []
    for item in corpus:
        if isinstance(item, tuple):
            name, channels = item[0], [check_plane(item[1])]
        else:
            path = Path(item)
            name = path.stem
            channels = load_rgb(path) if _is_colour(path) else [load_image(path)]
        hr0, crop = crop_to_multiple(hr_from_source(channels[0], hr_policy), scale)
        if min(hr0.shape) // scale < kernel_side:
            skipped.append((name, f"LR side {min(hr0.shape) // scale} < kernel side {kernel_side}"))
            continue
        made = [make_pair(c, params, scale, hr_policy, kernel_side) for c in channels]
        hrs, lrs = [m[0] for m in made], [m[1] for m in made]
        hr_path, lr_path = out / "hr" / f"{name}.png", out / "lr" / f"{name}.png"
        try:
            if len(hrs) == 3:
                save_rgb(hrs, hr_path)
                save_rgb(lrs, lr_path)
            else:
                save_image(hrs[0], hr_path)
                save_image(lrs[0], lr_path)
        except OSError as exc:
            raise OSError(f"cannot write pair {name} under {out}: {exc}") from exc
        pairs.append((f"hr/{name}.png", f"lr/{name}.png", hrs[0].shape, lrs[0].shape, crop))

    lines = ["# freqadapt pair manifest", f"tool_version={__version__}",
             f"r1={params.r1:.9g}", f"r2={params.r2:.9g}", f"theta={params.theta:.9g}",
             f"kernel_side={kernel_side}", f"scale={scale}", f"hr_policy={hr_policy}",
             f"pairs={len(pairs)}", f"skipped={len(skipped)}", "[pairs]",
             "hr,lr,hr_size,lr_size,cropped_rows_cols"]
    for hr, lr, hs, ls, crop in pairs:
        lines.append(f"{hr},{lr},{hs[1]}x{hs[0]},{ls[1]}x{ls[0]},{crop[0]}x{crop[1]}")
    lines.append("[skipped]")
    lines += [f"{n},{why}" for n, why in skipped]
    manifest = out / "manifest.txt"
    manifest.write_text("\n".join(lines) + "\n")
    return manifest


def _is_colour(path: Path) -> bool:
    from PIL import Image

    try:
        with Image.open(path) as im:
            return im.mode in ("RGB", "RGBA", "P")
    except Exception:
        return False


def _as_images(items) -> list[np.ndarray]:
    if isinstance(items, (str, Path)):
        d = Path(items)
        files = sorted(p for p in d.iterdir() if p.suffix.lower() in (".png", ".fqa"))
        return [load_image(p) for p in files]
    return [check_plane(x) for x in items]


def domain_profile_bins(images, patch_size: int, kind: str = "axis", norm: str = "unit-sum") -> np.ndarray:
    imgs = [x for x in images if min(x.shape) >= patch_size]
    if not imgs:
        raise ArgumentError(f"no image holds a {patch_size}px patch")
    prof = np.mean([tile_profile(x, patch_size, kind) for x in imgs], axis=0)
    return normalize_bins(prof, norm)


def verify_consistency(lr_set, source_corpus, patch_size: int = 32, kind: str = "axis",
                       norm: str = "unit-sum") -> dict:
    """Distance between the generated-LR domain profile and the source profile."""
    lrs, srcs = _as_images(lr_set), _as_images(source_corpus)
    if not lrs or not srcs:
        raise ArgumentError("both image sets must be non-empty")
    for name, group in (("LR", lrs), ("source", srcs)):
        small = min(min(x.shape) for x in group)
        if small < patch_size:
            raise ArgumentError(f"{name} image side {small} < profile patch size {patch_size}")
    a = domain_profile_bins(lrs, patch_size, kind, norm)
    b = domain_profile_bins(srcs, patch_size, kind, norm)
    return dict(distance=freq_distance(a, b), lr_count=len(lrs), source_count=len(srcs),
                patch_size=patch_size, bins=len(a), kind=kind, normalization=norm)
