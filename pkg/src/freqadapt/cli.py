"""``freqadapt`` command-line entry point.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .benchmark import ESTIMATORS, BenchmarkSuite, read_suite, run_suite
from .config import ENV_VAR, help_table, load_config
from .errors import ArgumentError, FreqAdaptError, TrainingError
from .estimator import (ABLATIONS, HR_POLICIES, EstimationReport, EstimatorConfig, GridSpec,
                        estimate_direct, estimate_fca, generate_pairs)
from .fdc import CurriculumSchedule, fdc_train_loss, ordering_accuracy, sample_triplets, save_comparator, train_comparator
from .imaging import PatchSpec, load_image, make_rng, sample_patches
from .kernels import KERNEL_KINDS, KernelParams, wrap_angle
from .spectral import frequency_profile, normalize_profile, format_profile

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
IMAGE_SUFFIXES = (".png", ".fqa")


class UsageError(Exception):
    pass


def _epilog() -> str:
    return (f"configuration keys (set with --set key=value, a --config file or ${ENV_VAR}):\n"
            + help_table())


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value config file (default: $%s)" % ENV_VAR)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override one config key; repeatable")


def _sub(subs, name, help_text):
    return subs.add_parser(name, help=help_text, description=help_text, epilog=_epilog(),
                           formatter_class=argparse.RawDescriptionHelpFormatter)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="freqadapt", description="Estimate the blur kernel of an unlabeled image corpus.",
        epilog=_epilog(), formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"freqadapt {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    p = _sub(subs, "estimate", "estimate one Gaussian kernel for a source corpus")
    p.add_argument("--source", required=True, help="directory of source images")
    p.add_argument("--method", choices=("direct", "fca"), default="fca")
    p.add_argument("--ablation", choices=ABLATIONS, help="loss terms used by fca (default both)")
    p.add_argument("--out", default="freqadapt-report.txt", help="report file")
    p.add_argument("--limit", type=int, help="use only the first N images")
    p.add_argument("--timing", action="store_true", help="record wall time in the report")
    _common(p)

    p = _sub(subs, "generate-pairs", "write HR/LR training pairs degraded with a kernel")
    p.add_argument("--source", required=True, help="directory of source images")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--report", help="take kernel parameters from an estimation report")
    p.add_argument("--r1", type=float)
    p.add_argument("--r2", type=float)
    p.add_argument("--theta", type=float)
    p.add_argument("--hr-policy", choices=HR_POLICIES)
    _common(p)

    p = _sub(subs, "benchmark", "run the synthetic kernel-recovery suite")
    p.add_argument("--suite", help="suite file (key=value); flags below override it")
    p.add_argument("--kinds", help=f"comma list from {','.join(KERNEL_KINDS)}")
    p.add_argument("--seeds", help="comma list of seeds")
    p.add_argument("--estimators", help=f"comma list from {','.join(ESTIMATORS)}")
    p.add_argument("--corpus", help="clean corpus directory (default: bundled mini-corpus)")
    p.add_argument("--out", help="output directory for rows/summary/timings CSVs")
    p.add_argument("--limit", type=int, help="use only the first N corpus images")
    p.add_argument("--jobs", type=int, help="worker processes (default: config key jobs)")
    p.add_argument("--keep-going", action="store_true", help="exit 0 even if some rows failed")
    _common(p)

    p = _sub(subs, "profile", "print or write the frequency profile of an image set")
    p.add_argument("--source", required=True, help="image file or directory")
    p.add_argument("--patch-size", type=int)
    p.add_argument("--count", type=int, default=8, help="patches per image")
    p.add_argument("--kind", choices=("axis", "radial", "oriented"))
    p.add_argument("--normalization", choices=("none", "unit-sum", "log1p"))
    p.add_argument("--out", help="write here instead of standard output")
    _common(p)

    p = _sub(subs, "train-fdc", "train a comparator with the curriculum and save it")
    p.add_argument("--source", required=True, help="directory of source images")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--iterations", type=int)
    p.add_argument("--batch", type=int, default=8)
    p.add_argument("--holdout", type=int, default=0, help="images kept out for an accuracy check")
    _common(p)
    return parser


# ------------------------------------------------------------------ helpers


def _overrides(args) -> dict:
    out = {}
    for item in args.set:
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _config(args):
    try:
        return load_config(args.config, _overrides(args))
    except ArgumentError as exc:
        raise UsageError(str(exc)) from None


def _image_files(source: str, flag: str = "--source") -> list[Path]:
    p = Path(source)
    if p.is_file():
        return [p]
    if not p.is_dir():
        raise UsageError(f"{flag}: {source} is not an existing file or directory")
    files = sorted(f for f in p.iterdir() if f.suffix.lower() in IMAGE_SUFFIXES)
    if not files:
        raise UsageError(f"{flag}: {source} holds no .png or .fqa images")
    return files


def _params_text(p: KernelParams) -> str:
    return (f"r1={p.r1:.6g} r2={p.r2:.6g} theta={p.theta:.6g} "
            f"sigma2_r1={p.r1 ** 2:.6g} sigma2_r2={p.r2 ** 2:.6g} sigma2_mean={p.sigma2:.6g}")


# ----------------------------------------------------------------- commands


def cmd_estimate(args) -> int:
    if args.ablation and args.method != "fca":
        raise UsageError("--ablation applies only to --method fca")
    cfg = _config(args)
    files = _image_files(args.source)[: args.limit]
    images = [load_image(f) for f in files]
    try:
        if args.method == "direct":
            grid = GridSpec.default(cfg.r_min, cfg.r_max, cfg.grid_r_steps, cfg.grid_theta_steps)
            rep = estimate_direct(images, cfg.scale, grid, kernel_side=cfg.kernel_side,
                                  patch_size=cfg.patch_size, kind=cfg.direct_profile_kind,
                                  norm=cfg.normalization, r_min=cfg.r_min, r_max=cfg.r_max,
                                  generator_input=cfg.generator_input)
        else:
            rep = estimate_fca(images, EstimatorConfig.from_app(cfg), args.ablation or "both")
    except FreqAdaptError as exc:
        partial = getattr(exc, "partial", None)
        stub = partial or EstimationReport(args.method, KernelParams(1.0, 1.0, 0.0), status="failed")
        stub.status = "failed"
        stub.extra["error"] = str(exc).replace("\n", " ")
        stub.write(args.out)
        print(f"freqadapt estimate: {exc}", file=sys.stderr)
        print(f"report stub: {args.out}", file=sys.stderr)
        return EXIT_FAIL
    rep.write(args.out, include_timing=args.timing)
    print(_params_text(rep.estimated))
    print(f"final_distance={rep.final_distance:.6g} status={rep.status}")
    print(f"report: {args.out}")
    return EXIT_OK


def cmd_generate_pairs(args) -> int:
    explicit = [v is not None for v in (args.r1, args.r2, args.theta)]
    if args.report and any(explicit):
        raise UsageError("give either --report or --r1/--r2/--theta, not both")
    if not args.report and not (explicit[0] and explicit[1]):
        raise UsageError("kernel parameters needed: --report FILE or --r1 and --r2 (optional --theta)")
    cfg = _config(args)
    if args.report:
        try:
            params = EstimationReport.read(args.report).estimated
        except OSError as exc:
            raise UsageError(f"--report: cannot read {args.report}: {exc}") from None
    else:
        theta = args.theta or 0.0
        wrapped = wrap_angle(theta)
        if not 0.0 <= theta < 2 * math.pi:
            print(f"warning: theta {theta:g} wrapped into [0, 2pi) as {wrapped:.9g}", file=sys.stderr)
        try:
            params = KernelParams(args.r1, args.r2, wrapped)
        except ArgumentError as exc:
            raise UsageError(str(exc)) from None
    files = _image_files(args.source)
    manifest = generate_pairs(files, params, cfg.scale, args.out, args.hr_policy or cfg.hr_policy,
                              cfg.kernel_side)
    print(f"manifest: {manifest}")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    try:
        if args.suite:
            suite = read_suite(args.suite, load_config(args.config), _overrides(args))
        else:
            suite = BenchmarkSuite(config=_config(args))
        kw = {}
        if args.kinds:
            kw["kinds"] = tuple(s.strip() for s in args.kinds.split(",") if s.strip())
        if args.seeds:
            kw["seeds"] = tuple(int(s) for s in args.seeds.split(",") if s.strip())
        if args.estimators:
            kw["estimators"] = tuple(s.strip() for s in args.estimators.split(",") if s.strip())
        if args.corpus:
            _image_files(args.corpus, "--corpus")
            kw["corpus"] = args.corpus
        if args.out:
            kw["out_dir"] = args.out
        if args.limit:
            kw["limit"] = args.limit
        suite = replace(suite, **kw).validate()
    except (ArgumentError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    jobs = args.jobs or suite.config.jobs
    if jobs < 1:
        raise UsageError("--jobs must be >= 1")

    def progress(row):
        print(f"{row.kind} seed={row.seed} {row.estimator}: {row.status} "
              f"kernel_error={row.kernel_error:.4g} ({row.runtime_seconds:.1f}s)", file=sys.stderr)

    rows, _ = run_suite(suite, jobs=jobs, progress=progress)
    failed = [r for r in rows if r.status != "ok"]
    print(f"rows: {Path(suite.out_dir) / 'rows.csv'} ({len(rows)} rows, {len(failed)} failed)")
    print(f"summary: {Path(suite.out_dir) / 'summary.csv'}")
    if failed and not args.keep_going:
        return EXIT_FAIL
    return EXIT_OK


def cmd_profile(args) -> int:
    cfg = _config(args)
    size = args.patch_size or cfg.patch_size
    if args.count < 1:
        raise UsageError("--count must be >= 1")
    patches = []
    for i, f in enumerate(_image_files(args.source)):
        img = load_image(f)
        if min(img.shape) < size:
            raise UsageError(f"--patch-size {size} exceeds image {f.name} ({img.shape[1]}x{img.shape[0]})")
        patches += sample_patches(img, PatchSpec(size, args.count, 1, cfg.seed + i))
    prof = frequency_profile(patches, args.kind or cfg.profile_kind)
    prof = normalize_profile(prof, args.normalization or "none")
    text = format_profile(prof)
    if args.out:
        Path(args.out).write_text(text)
        print(f"profile: {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_train_fdc(args) -> int:
    cfg = _config(args)
    images = [load_image(f) for f in _image_files(args.source)]
    if args.holdout < 0 or args.holdout >= len(images):
        raise UsageError(f"--holdout must be in [0, {len(images) - 1}]")
    train = images[: len(images) - args.holdout]
    held = images[len(images) - args.holdout:]
    iters = args.iterations or cfg.iterations
    schedule = CurriculumSchedule(cfg.curriculum_start, cfg.curriculum_end,
                                  cfg.curriculum_steps or iters, cfg.curriculum_decay)
    state = train_comparator(train, iters, args.batch, cfg.fdc_lr, schedule, cfg.patch_size,
                             cfg.profile_kind, cfg.normalization, (cfg.fdc_hidden1, cfg.fdc_hidden2),
                             cfg.seed)
    save_comparator(state.model, args.out)
    print(f"checkpoint: {args.out} (iterations={iters}, final scale={state.scale:.3g})")
    for scale in ((1.5, cfg.curriculum_end) if held else ()):
        ts = sample_triplets(held, scale, 200, make_rng(cfg.seed + 1), cfg.patch_size, cfg.profile_kind)
        print(f"held-out scale={scale:g}: ordering_accuracy={ordering_accuracy(state.model, ts):.4f} "
              f"loss={fdc_train_loss(state.model, ts):.4f}")
    return EXIT_OK


COMMANDS = {"estimate": cmd_estimate, "generate-pairs": cmd_generate_pairs, "benchmark": cmd_benchmark,
            "profile": cmd_profile, "train-fdc": cmd_train_fdc}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"freqadapt {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TrainingError as exc:
        print(f"freqadapt {args.command}: training failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (FreqAdaptError, OSError) as exc:
        print(f"freqadapt {args.command}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
