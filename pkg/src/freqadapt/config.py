"""Flat ``key=value`` configuration shared by the CLI and the benchmark.

A config file holds one ``key=value`` per line; ``#`` starts a comment.
``FREQADAPT_CONFIG`` names a default file; explicit flags override both.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import ArgumentError

ENV_VAR = "FREQADAPT_CONFIG"

PUBLISHED = "published setting"
ARTIFACT = "artifact choice"

# key -> (provenance, help)
KEY_NOTES = {
    "lambda1": (PUBLISHED, "weight of the comparator consistency loss"),
    "lambda2": (PUBLISHED, "weight of the wavelet adversarial loss"),
    "scale": (PUBLISHED, "SR factor s of the degradation generator"),
    "kernel_side": (PUBLISHED, "side of the estimated Gaussian kernel"),
    "r_min": (ARTIFACT, "lower bound on kernel std-devs (pixels)"),
    "r_max": (PUBLISHED, "upper bound on kernel std-devs; variance cap 9"),
    "curriculum_start": (PUBLISHED, "first comparator resampling factor"),
    "curriculum_end": (PUBLISHED, "final comparator resampling factor"),
    "curriculum_decay": (ARTIFACT, "linear | geometric"),
    "curriculum_steps": (ARTIFACT, "iterations over which the factor decays; 0 = iterations"),
    "generator_input": (PUBLISHED, "source images are centre-cropped to at most this side"),
    "hr_policy": (PUBLISHED, "HR side of generated pairs: bicubic-2x | source"),
    "iterations": (ARTIFACT, "FCA iteration budget"),
    "warmup": (ARTIFACT, "iterations that train the critics before the kernel moves"),
    "images_per_step": (ARTIFACT, "source images drawn per FCA iteration"),
    "patch_size": (ARTIFACT, "square patch side for frequency profiles"),
    "profile_kind": (ARTIFACT, "comparator/diagnostic profile: axis | radial"),
    "direct_profile_kind": (ARTIFACT, "direct estimator profile: oriented | axis | radial"),
    "normalization": (ARTIFACT, "profile normalization: none | unit-sum | log1p"),
    "fdc_hidden1": (ARTIFACT, "comparator encoder hidden width 1"),
    "fdc_hidden2": (ARTIFACT, "comparator encoder hidden width 2"),
    "fdc_lr": (ARTIFACT, "comparator Adam learning rate"),
    "wd_lr": (ARTIFACT, "discriminator Adam learning rate"),
    "gen_lr": (ARTIFACT, "kernel-parameter step size"),
    "perturbation": (ARTIFACT, "simultaneous-perturbation half-width"),
    "adam_beta1": (ARTIFACT, "Adam first-moment decay"),
    "adam_beta2": (ARTIFACT, "Adam second-moment decay"),
    "adam_eps": (ARTIFACT, "Adam epsilon"),
    "grid_r_steps": (ARTIFACT, "direct estimator: grid points per std-dev axis"),
    "grid_theta_steps": (ARTIFACT, "direct estimator: grid points over [0, pi)"),
    "plateau_window": (ARTIFACT, "FCA early stop window (iterations)"),
    "plateau_tol": (ARTIFACT, "FCA early stop objective change"),
    "divergence_factor": (ARTIFACT, "abort when smoothed loss exceeds this multiple"),
    "seed": (ARTIFACT, "seed of the pcg64 stream"),
    "rng": (ARTIFACT, "random generator algorithm (only pcg64)"),
    "jobs": (ARTIFACT, "worker processes for independent work items"),
}


@dataclass(frozen=True)
class AppConfig:
    lambda1: float = 1.0
    lambda2: float = 0.001
    scale: int = 4
    kernel_side: int = 13
    r_min: float = 0.1
    r_max: float = 3.0
    curriculum_start: float = 3.5
    curriculum_end: float = 1.2
    curriculum_decay: str = "linear"
    curriculum_steps: int = 0
    generator_input: int = 512
    hr_policy: str = "bicubic-2x"
    iterations: int = 2000
    warmup: int = 200
    images_per_step: int = 4
    patch_size: int = 64
    profile_kind: str = "axis"
    direct_profile_kind: str = "oriented"
    normalization: str = "unit-sum"
    fdc_hidden1: int = 64
    fdc_hidden2: int = 32
    fdc_lr: float = 1e-3
    wd_lr: float = 1e-3
    gen_lr: float = 0.02
    perturbation: float = 0.02
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    grid_r_steps: int = 15
    grid_theta_steps: int = 4
    plateau_window: int = 100
    plateau_tol: float = 1e-5
    divergence_factor: float = 10.0
    seed: int = 0
    rng: str = "pcg64"
    jobs: int = 1

    def validate(self) -> "AppConfig":
        def bad(key, why):
            raise ArgumentError(f"config key {key!r}: {why} (got {getattr(self, key)!r})")

        for key in ("lambda1", "lambda2"):
            if getattr(self, key) < 0:
                bad(key, "must be >= 0")
        if self.scale < 1:
            bad("scale", "must be a positive integer")
        if self.kernel_side < 3 or self.kernel_side % 2 == 0:
            bad("kernel_side", "must be odd and >= 3")
        if not 0.001 <= self.r_min < self.r_max:
            bad("r_min", "must satisfy 0.001 <= r_min < r_max")
        if self.r_max > 3.0:
            bad("r_max", "must be <= 3.0")
        if not self.curriculum_start > self.curriculum_end > 1.0:
            bad("curriculum_end", "needs curriculum_start > curriculum_end > 1.0")
        if self.curriculum_decay not in ("linear", "geometric"):
            bad("curriculum_decay", "must be linear or geometric")
        if self.curriculum_steps < 0:
            bad("curriculum_steps", "must be >= 0")
        if self.hr_policy not in ("bicubic-2x", "source"):
            bad("hr_policy", "must be bicubic-2x or source")
        if self.iterations < 1:
            bad("iterations", "must be >= 1")
        if self.warmup < 0:
            bad("warmup", "must be >= 0")
        for key in ("images_per_step", "fdc_hidden1", "fdc_hidden2", "grid_theta_steps",
                    "plateau_window", "jobs", "generator_input"):
            if getattr(self, key) < 1:
                bad(key, "must be >= 1")
        if self.grid_r_steps < 2:
            bad("grid_r_steps", "must be >= 2")
        if self.patch_size < 4:
            bad("patch_size", "must be >= 4")
        if self.profile_kind not in ("axis", "radial"):
            bad("profile_kind", "must be axis or radial")
        if self.direct_profile_kind not in ("oriented", "axis", "radial"):
            bad("direct_profile_kind", "must be oriented, axis or radial")
        if self.normalization not in ("none", "unit-sum", "log1p"):
            bad("normalization", "must be none, unit-sum or log1p")
        for key in ("fdc_lr", "wd_lr", "gen_lr", "plateau_tol"):
            if getattr(self, key) < 0:
                bad(key, "must be >= 0")
        if not 0 < self.perturbation < 1:
            bad("perturbation", "must be in (0, 1)")
        for key in ("adam_beta1", "adam_beta2"):
            if not 0 <= getattr(self, key) < 1:
                bad(key, "must be in [0, 1)")
        if self.adam_eps <= 0:
            bad("adam_eps", "must be > 0")
        if self.divergence_factor <= 1:
            bad("divergence_factor", "must be > 1")
        if self.seed < 0:
            bad("seed", "must be a non-negative integer")
        if self.rng != "pcg64":
            bad("rng", "only pcg64 is supported")
        return self

    def with_values(self, values: dict) -> "AppConfig":
        return replace(self, **coerce(values)).validate()

    def items(self):
        return [(f.name, getattr(self, f.name)) for f in fields(self)]


_TYPES = {f.name: f.type for f in fields(AppConfig)}


def coerce(values: dict) -> dict:
    out = {}
    for key, raw in values.items():
        if key not in _TYPES:
            raise ArgumentError(f"unknown config key {key!r}")
        typ = _TYPES[key]
        try:
            if typ in ("int", int):
                out[key] = int(raw)
            elif typ in ("float", float):
                out[key] = float(raw)
            else:
                out[key] = str(raw)
        except ValueError:
            raise ArgumentError(f"config key {key!r}: cannot parse {raw!r} as {typ}") from None
    return out


def parse_kv_lines(text: str, where: str = "<config>") -> dict:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ArgumentError(f"{where}:{lineno}: expected key=value, got {line!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ArgumentError(f"{where}:{lineno}: empty key")
        values[key] = val
    return values


def load_config(path=None, overrides: dict | None = None) -> AppConfig:
    """Defaults, then the file (explicit path or $FREQADAPT_CONFIG), then overrides."""
    values = {}
    path = path or os.environ.get(ENV_VAR)
    if path:
        p = Path(path)
        try:
            text = p.read_text()
        except OSError as exc:
            raise ArgumentError(f"cannot read config file {p}: {exc}") from exc
        values.update(parse_kv_lines(text, str(p)))
    if overrides:
        values.update(overrides)
    return AppConfig().with_values(values)


def format_config(cfg: AppConfig) -> str:
    return "".join(f"{k}={v}\n" for k, v in cfg.items())


def help_table() -> str:
    defaults = AppConfig()
    lines = []
    for key, value in defaults.items():
        note, text = KEY_NOTES[key]
        lines.append(f"  {key}={value}  ({note}) {text}")
    return "\n".join(lines)
