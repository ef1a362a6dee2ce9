"""Synthetic kernel-recovery benchmark.

Every cell degrades a clean corpus with a known kernel, hands the result to
an estimator as if it were an unlabeled source domain and scores the
estimate against the truth.  Downstream SR quality is out of reach here, so
the scores are estimator-level: kernel L2 error, variance error, the
frequency distance of regenerated LRs and re-degradation PSNR/SSIM.
"""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from functools import lru_cache
from pathlib import Path

import numpy as np

from .config import AppConfig, parse_kv_lines
from .corpus import corpus_dir, load_corpus
from .errors import ArgumentError, FreqAdaptError
from .estimator import (EstimatorConfig, GridSpec, domain_profile_bins, estimate_direct, estimate_fca,
                        make_pair)
from .kernels import (KERNEL_KINDS, DegradationConfig, KernelParams, degrade, delta_params,
                      kernel_error, synthesize_test_kernel)
from .metrics import psnr, ssim
from .spectral import freq_distance, normalize_bins, tile_profile

ESTIMATORS = ("direct", "fca-both", "fca-fdc", "fca-wd", "bicubic-baseline")
FCA_ABLATION = {"fca-both": "both", "fca-fdc": "fdc-only", "fca-wd": "wd-only"}
TRUTH_SIDE = 19
SYNTH_SCALE = 2
DIAG_PATCH = 32

ROW_COLUMNS = ("kind", "seed", "estimator", "status", "truth_r1", "truth_r2", "truth_theta",
               "truth_sigma2", "est_r1", "est_r2", "est_theta", "est_sigma2", "kernel_error",
               "sigma2_abs_error", "dbar", "dbar_baseline", "dbar_reduction", "redeg_psnr",
               "redeg_ssim", "message")
SUMMARY_METRICS = ("kernel_error", "sigma2_abs_error", "dbar_reduction", "redeg_psnr", "redeg_ssim")
SUMMARY_HEADER = (
    "# Estimator-level scores standing in for downstream SR metrics:\n"
    "#   kernel_error     L2 distance of 19x19 kernels (axis-swap alias resolved)\n"
    "#   sigma2_abs_error |mean variance estimate - mean variance truth|\n"
    "#   dbar_reduction   D(bicubic-only LRs, source) - D(LRs from estimate, source); > 0 is better\n"
    "#   redeg_psnr/ssim  degrade(HR, estimate) vs degrade(HR, truth), luminance, mean over images\n"
)


@dataclass(frozen=True)
class BenchmarkSuite:
    kinds: tuple[str, ...] = ("ISO.1", "ISO.3")
    corpus: str | None = None  # None = bundled mini-corpus
    seeds: tuple[int, ...] = (0, 1, 2)
    estimators: tuple[str, ...] = ESTIMATORS
    out_dir: str = "bench-out"
    config: AppConfig = field(default_factory=AppConfig)
    synthesis_scale: int = SYNTH_SCALE
    truth_side: int = TRUTH_SIDE
    limit: int | None = None

    def validate(self) -> "BenchmarkSuite":
        if not self.kinds:
            raise ArgumentError("suite needs at least one kernel kind")
        if not self.seeds:
            raise ArgumentError("suite needs at least one seed")
        if not self.estimators:
            raise ArgumentError("suite needs at least one estimator")
        for k in self.kinds:
            if k not in KERNEL_KINDS:
                raise ArgumentError(f"unknown kernel kind {k!r}; expected one of {KERNEL_KINDS}")
        for e in self.estimators:
            if e not in ESTIMATORS:
                raise ArgumentError(f"unknown estimator {e!r}; expected one of {ESTIMATORS}")
        if any(s < 0 for s in self.seeds):
            raise ArgumentError("seeds must be non-negative")
        if self.synthesis_scale < 1:
            raise ArgumentError("synthesis_scale must be >= 1")
        if self.truth_side < 3 or self.truth_side % 2 == 0:
            raise ArgumentError("truth_side must be odd and >= 3")
        return self


@dataclass
class ScoreRow:
    kind: str
    seed: int
    estimator: str
    status: str = "ok"
    truth_r1: float = math.nan
    truth_r2: float = math.nan
    truth_theta: float = math.nan
    truth_sigma2: float = math.nan
    est_r1: float = math.nan
    est_r2: float = math.nan
    est_theta: float = math.nan
    est_sigma2: float = math.nan
    kernel_error: float = math.nan
    sigma2_abs_error: float = math.nan
    dbar: float = math.nan
    dbar_baseline: float = math.nan
    dbar_reduction: float = math.nan
    redeg_psnr: float = math.nan
    redeg_ssim: float = math.nan
    message: str = ""
    runtime_seconds: float = 0.0

    def csv_values(self) -> list[str]:
        return [_cell(getattr(self, c)) for c in ROW_COLUMNS]


def _cell(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.9g}"
    return str(v)


# ------------------------------------------------------------- suite files

_SUITE_KEYS = {"kinds", "seeds", "estimators", "corpus", "out", "synthesis_scale", "truth_side", "limit"}


def _split(v: str) -> tuple[str, ...]:
    return tuple(t.strip() for t in v.split(",") if t.strip())


def parse_suite(text: str, where: str = "<suite>", base_dir=None, base: AppConfig | None = None,
                overrides: dict | None = None) -> BenchmarkSuite:
    """Suite file: ``key=value`` lines; other keys override ``base`` config.

    ``overrides`` wins over both (command-line ``--set`` values).
    """
    values = parse_kv_lines(text, where)
    cfg_values = {k: v for k, v in values.items() if k not in _SUITE_KEYS}
    cfg_values.update(overrides or {})
    lines = {k: i for i, ln in enumerate(text.splitlines(), 1) for k in [ln.split("=", 1)[0].strip()]}
    try:
        cfg = (base or AppConfig()).with_values(cfg_values)
        kw = {}
        if "kinds" in values:
            kw["kinds"] = _split(values["kinds"])
        if "seeds" in values:
            kw["seeds"] = tuple(int(s) for s in _split(values["seeds"]))
        if "estimators" in values:
            kw["estimators"] = _split(values["estimators"])
        if "corpus" in values and values["corpus"] not in ("", "builtin"):
            c = Path(values["corpus"])
            kw["corpus"] = str(c if c.is_absolute() or base_dir is None else Path(base_dir) / c)
        if "out" in values:
            kw["out_dir"] = values["out"]
        for key in ("synthesis_scale", "truth_side", "limit"):
            if key in values:
                kw[key] = int(values[key])
        return BenchmarkSuite(config=cfg, **kw).validate()
    except (ArgumentError, ValueError) as exc:
        msg = str(exc)
        # the offending key is named in the message, or one of its values is quoted there
        key = next((k for k in values if k in msg
                    or any(repr(tok) in msg for tok in _split(values[k]))), None)
        loc = f"{where}:{lines[key]}" if key in lines else where
        raise ArgumentError(f"{loc}: {exc}") from None


def read_suite(path, base: AppConfig | None = None, overrides: dict | None = None) -> BenchmarkSuite:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ArgumentError(f"cannot read suite file {p}: {exc}") from exc
    return parse_suite(text, str(p), p.parent, base, overrides)


# ------------------------------------------------------------------ cells


@lru_cache(maxsize=4)
def _clean_corpus(corpus: str | None, limit: int | None) -> tuple[np.ndarray, ...]:
    imgs = load_corpus(corpus if corpus is not None else corpus_dir(), limit)
    if not imgs:
        raise ArgumentError(f"corpus {corpus or corpus_dir()} holds no images")
    return tuple(imgs)


@lru_cache(maxsize=4)
def _degraded(corpus, limit, kind, seed, synthesis_scale, truth_side):
    truth = synthesize_test_kernel(kind, seed)
    cfg = DegradationConfig(synthesis_scale, truth_side, truth)
    return truth, tuple(degrade(x, cfg) for x in _clean_corpus(corpus, limit))


def _estimate(name: str, source, cfg: AppConfig, seed: int) -> KernelParams:
    if name == "bicubic-baseline":
        return delta_params()
    if name == "direct":
        grid = GridSpec.default(cfg.r_min, cfg.r_max, cfg.grid_r_steps, cfg.grid_theta_steps)
        return estimate_direct(list(source), cfg.scale, grid, kernel_side=cfg.kernel_side,
                               patch_size=cfg.patch_size, kind=cfg.direct_profile_kind,
                               norm=cfg.normalization, r_min=cfg.r_min, r_max=cfg.r_max,
                               generator_input=cfg.generator_input).estimated
    ecfg = EstimatorConfig.from_app(cfg, seed=seed)
    return estimate_fca(list(source), ecfg, FCA_ABLATION[name]).estimated


def regenerated_distance(source, params: KernelParams, cfg: AppConfig, patch: int = DIAG_PATCH) -> float:
    """Profile distance between LRs regenerated from ``source`` with ``params`` and ``source``."""
    lrs = [make_pair(x, params, cfg.scale, cfg.hr_policy, cfg.kernel_side)[1] for x in source]
    a = domain_profile_bins(lrs, patch, cfg.profile_kind, cfg.normalization)
    b = domain_profile_bins(list(source), patch, cfg.profile_kind, cfg.normalization)
    return freq_distance(a, b)


def run_cell(suite: BenchmarkSuite, kind: str, seed: int, estimator: str) -> ScoreRow:
    row = ScoreRow(kind, seed, estimator)
    t0 = time.perf_counter()
    try:
        truth, source = _degraded(suite.corpus, suite.limit, kind, seed, suite.synthesis_scale,
                                  suite.truth_side)
        row.truth_r1, row.truth_r2, row.truth_theta = truth.as_tuple()
        row.truth_sigma2 = truth.sigma2
        est = _estimate(estimator, source, suite.config, seed)
        row.est_r1, row.est_r2, row.est_theta = est.as_tuple()
        row.est_sigma2 = est.sigma2
        row.kernel_error = kernel_error(est, truth, suite.truth_side)
        row.sigma2_abs_error = abs(est.sigma2 - truth.sigma2)
        row.dbar = regenerated_distance(source, est, suite.config)
        row.dbar_baseline = regenerated_distance(source, delta_params(), suite.config)
        row.dbar_reduction = row.dbar_baseline - row.dbar
        clean = _clean_corpus(suite.corpus, suite.limit)
        ps, ss = [], []
        for x in clean:
            a = degrade(x, DegradationConfig(suite.synthesis_scale, suite.truth_side, est))
            b = degrade(x, DegradationConfig(suite.synthesis_scale, suite.truth_side, truth))
            ps.append(psnr(a, b))
            ss.append(ssim(a, b))
        row.redeg_psnr, row.redeg_ssim = float(np.mean(ps)), float(np.mean(ss))
        scores = [getattr(row, m) for m in SUMMARY_METRICS]
        if not all(math.isfinite(v) for v in scores):
            raise FreqAdaptError("non-finite score")
    except (FreqAdaptError, ValueError, RuntimeError, OSError) as exc:
        row.status = "failed"
        row.message = f"{type(exc).__name__}: {exc}".replace(",", ";").replace("\n", " ")
    row.runtime_seconds = time.perf_counter() - t0
    return row


def _run_cell_args(args) -> ScoreRow:
    return run_cell(*args)


def suite_cells(suite: BenchmarkSuite):
    return [(k, s, e) for k in suite.kinds for s in suite.seeds for e in suite.estimators]


def run_suite(suite: BenchmarkSuite, jobs: int = 1, write: bool = True, progress=None):
    """Run every (kind, seed, estimator) cell; returns ``(rows, summary)``."""
    suite.validate()
    cells = suite_cells(suite)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_cell_args, [(suite, *c) for c in cells]))
    else:
        rows = []
        for c in cells:
            rows.append(run_cell(suite, *c))
            if progress:
                progress(rows[-1])
    order = {c: i for i, c in enumerate(cells)}
    rows.sort(key=lambda r: order[(r.kind, r.seed, r.estimator)])
    summary = summarize(rows)
    if write:
        write_outputs(rows, summary, suite.out_dir)
    return rows, summary


def summarize(rows) -> list[dict]:
    cells = {}
    for r in rows:
        cells.setdefault((r.kind, r.estimator), []).append(r)
    out = []
    for (kind, est), group in cells.items():
        ok = [r for r in group if r.status == "ok"]
        entry = dict(kind=kind, estimator=est, rows=len(group), ok=len(ok))
        for m in SUMMARY_METRICS:
            vals = np.array([getattr(r, m) for r in ok])
            entry[f"{m}_mean"] = float(vals.mean()) if vals.size else math.nan
            entry[f"{m}_std"] = float(vals.std()) if vals.size else math.nan
        out.append(entry)
    return out


def rows_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ROW_COLUMNS)
    for r in rows:
        w.writerow(r.csv_values())
    return buf.getvalue()


def summary_csv(summary) -> str:
    buf = io.StringIO()
    buf.write(SUMMARY_HEADER)
    cols = ["kind", "estimator", "rows", "ok"] + [f"{m}_{s}" for m in SUMMARY_METRICS for s in ("mean", "std")]
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for e in summary:
        w.writerow([_cell(e[c]) for c in cols])
    return buf.getvalue()


def timings_csv(rows) -> str:
    lines = ["kind,seed,estimator,seconds"]
    lines += [f"{r.kind},{r.seed},{r.estimator},{r.runtime_seconds:.3f}" for r in rows]
    return "\n".join(lines) + "\n"


def write_outputs(rows, summary, out_dir) -> None:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "rows.csv").write_text(rows_csv(rows))
        (out / "summary.csv").write_text(summary_csv(summary))
        (out / "timings.csv").write_text(timings_csv(rows))
    except OSError as exc:
        raise OSError(f"cannot write benchmark outputs under {out}: {exc}") from exc


def read_rows(path) -> list[ScoreRow]:
    """Parse ``rows.csv`` back into rows (runtime is not stored there)."""
    types = {f.name: f.type for f in fields(ScoreRow)}
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            kw = {}
            for k, v in rec.items():
                t = types[k]
                kw[k] = int(v) if t in ("int", int) else float(v) if t in ("float", float) else v
            rows.append(ScoreRow(**kw))
    return rows


# ------------------------------------------------------------- plot data


def emit_profile_plot_data(domains: dict, out, patch_size: int = DIAG_PATCH, kind: str = "axis",
                           norm: str = "unit-sum") -> Path:
    """Write ``bin,<domain>...`` CSV of domain-mean profiles, columns in input order."""
    if not domains:
        raise ArgumentError("no domains given")
    cols = {}
    for name, images in domains.items():
        images = list(images)
        if not images:
            raise ArgumentError(f"domain {name!r} is empty")
        prof = np.mean([tile_profile(x, patch_size, kind) for x in images], axis=0)
        cols[name] = normalize_bins(prof, norm)
    n = len(next(iter(cols.values())))
    lines = [",".join(["bin", *cols])]
    for i in range(n):
        lines.append(",".join([str(i)] + [f"{c[i]:.9g}" for c in cols.values()]))
    path = Path(out)
    try:
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write profile data {path}: {exc}") from exc
    return path
