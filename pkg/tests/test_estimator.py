import math

import numpy as np
import pytest

from freqadapt.errors import ArgumentError, EstimationError, FormatError, TrainingError
from freqadapt.estimator import (EstimationReport, EstimatorConfig, GridSpec, ProfileObjective,
                                 estimate_direct, estimate_fca, generate_pairs, make_pair,
                                 prepare_corpus, verify_consistency)
from freqadapt.imaging import load_image
from freqadapt.kernels import KernelParams, delta_params, downsample
from freqadapt.config import AppConfig

SMALL_GRID = GridSpec.default(0.1, 3.0, r_steps=6, theta_steps=2)


@pytest.fixture(scope="module")
def small_source(iso1_source):
    return iso1_source[:4]


# ------------------------------------------------------------------ direct

def test_direct_recovers_iso1(direct_iso1):
    p = direct_iso1.estimated
    assert 0.8 <= p.sigma2 <= 1.25
    assert abs(p.r1 - p.r2) < 0.15
    assert direct_iso1.extra["images_used"] == 16


def test_direct_recovers_iso3(direct_iso3):
    p = direct_iso3.estimated
    assert abs(p.sigma2 - 3.0) <= 0.6
    assert abs(p.r1 - p.r2) < 0.15


def test_direct_on_plain_bicubic_sources(corpus):
    source = [downsample(x, 2) for x in corpus]
    rep = estimate_direct(source)
    # distance floor of this corpus, frozen from a reference run
    assert rep.final_distance == pytest.approx(0.0005926086556785725, rel=1e-6)
    step = 2.9 / 14
    assert max(rep.estimated.r1, rep.estimated.r2) <= 0.1 + step, rep.estimated


def test_grid_optimality_and_monotone_refinement(small_source):
    rep = estimate_direct(small_source, grid=SMALL_GRID)
    objective = ProfileObjective(prepare_corpus(small_source, 512), 4, 13, 64, "oriented", "unit-sum")
    values = [(objective(KernelParams(*pt)), pt) for pt in SMALL_GRID.points()]
    best_val = min(v for v, _ in values)
    first_best = next(pt for v, pt in values if v == best_val)
    assert (rep.extra["grid_best_r1"], rep.extra["grid_best_r2"], rep.extra["grid_best_theta"]) == first_best
    assert rep.extra["grid_best_distance"] == best_val
    assert rep.final_distance <= best_val
    totals = [row[3] for row in rep.trace]
    assert all(b <= a for a, b in zip(totals, totals[1:]))
    assert objective(rep.estimated) == pytest.approx(rep.final_distance, rel=1e-12)


def test_direct_is_deterministic(small_source):
    a = estimate_direct(small_source, grid=SMALL_GRID)
    b = estimate_direct(small_source, grid=SMALL_GRID)
    assert a.to_text() == b.to_text()


def test_grid_tie_break_order():
    pts = list(GridSpec((0.5, 1.0), (0.0, math.pi / 2)).points())
    assert pts == [(0.5, 0.5, 0.0), (0.5, 1.0, 0.0), (0.5, 1.0, math.pi / 2),
                   (1.0, 0.5, 0.0), (1.0, 0.5, math.pi / 2), (1.0, 1.0, 0.0)]


def test_textureless_corpus():
    flat = [np.full((256, 256), 0.5)] * 3
    with pytest.raises(EstimationError):
        estimate_direct(flat, grid=SMALL_GRID)
    with pytest.raises(EstimationError):
        estimate_fca(flat, EstimatorConfig(iterations=2))
    with pytest.raises(ArgumentError):
        prepare_corpus([])


# --------------------------------------------------------------------- FCA

def test_zero_weights_leave_init(small_source):
    cfg = EstimatorConfig(lambda1=0.0, lambda2=0.0, iterations=20, warmup=2, images_per_step=2)
    rep = estimate_fca(small_source, cfg)
    assert rep.estimated.as_tuple() == (1.0, 1.0, 0.0)
    assert len(rep.trace) == 20
    assert rep.extra["fdc_iterations"] == 20


def test_fca_trace_and_determinism(small_source):
    cfg = EstimatorConfig(iterations=30, warmup=5, images_per_step=2, seed=3)
    a = estimate_fca(small_source, cfg)
    b = estimate_fca(small_source, cfg)
    assert a.to_text() == b.to_text()
    assert len(a.trace) == a.extra["fdc_iterations"] == 30
    assert all(len(row) == 7 for row in a.trace)
    assert a.method == "fca-both"


def test_divergence_guard_returns_partial_report(small_source):
    cfg = EstimatorConfig(iterations=200, warmup=0, images_per_step=2, divergence_factor=1.0 + 1e-9,
                          gen_lr=0.5)
    with pytest.raises(TrainingError) as info:
        estimate_fca(small_source, cfg)
    partial = info.value.partial
    assert partial is not None and partial.status == "diverged"
    assert 0 < len(partial.trace) < 200


def test_bad_ablation(small_source):
    with pytest.raises(ArgumentError):
        estimate_fca(small_source, EstimatorConfig(iterations=1), ablation="neither")


def test_config_bridge():
    cfg = EstimatorConfig.from_app(AppConfig(iterations=300, curriculum_steps=0))
    assert cfg.curriculum.steps == 300
    assert (cfg.lambda1, cfg.lambda2) == (1.0, 0.001)
    with pytest.raises(ArgumentError):
        EstimatorConfig(lambda1=-1.0)
    with pytest.raises(ArgumentError):
        EstimatorConfig(iterations=0)


# ----------------------------------------------------------------- reports

def test_report_round_trip(tmp_path):
    rep = EstimationReport("fca-both", KernelParams(1.2, 0.8, 0.4),
                           [(0, 0.5, 0.9, 0.5009, 1.0, 1.0, 0.0), (1, 0.4, 0.8, 0.4008, 1.1, 0.9, 0.1)],
                           0.0123, 4.5, {"lambda1": 1.0})
    rep.write(tmp_path / "r.txt")
    back = EstimationReport.read(tmp_path / "r.txt")
    assert back.estimated.as_tuple() == pytest.approx(rep.estimated.as_tuple())
    assert back.trace == rep.trace
    assert back.final_distance == pytest.approx(0.0123)
    assert "wall_seconds" not in rep.to_text()
    assert "wall_seconds=4.5" in rep.to_text(include_timing=True)
    with pytest.raises(FormatError):
        EstimationReport.from_text("[report]\nmethod=x\n")


# ------------------------------------------------------------------- pairs

def test_generate_pairs_contract(corpus, tmp_path):
    items = [(f"img{i:02d}", corpus[i]) for i in range(10)]
    params = KernelParams(1.3, 0.9, 0.6)
    manifest = generate_pairs(items, params, 4, tmp_path / "a")
    hr = load_image(tmp_path / "a" / "hr" / "img00.png")
    lr = load_image(tmp_path / "a" / "lr" / "img00.png")
    assert hr.shape == (256, 256) and lr.shape == (64, 64)
    text = manifest.read_text()
    assert "pairs=10" in text and "hr_policy=bicubic-2x" in text
    again = generate_pairs(items, params, 4, tmp_path / "b")
    assert again.read_bytes() == manifest.read_bytes()


def test_generate_pairs_source_policy_and_skips(corpus, tmp_path):
    items = [("big", corpus[0][:200, :300]), ("tiny", corpus[1][:40, :40])]
    manifest = generate_pairs(items, delta_params(), 4, tmp_path, hr_policy="source")
    text = manifest.read_text()
    assert "pairs=1" in text and "skipped=1" in text and "tiny," in text
    assert "big.png,300x200,75x50,0x0" in text
    with pytest.raises(ArgumentError):
        generate_pairs(items, delta_params(), 4, tmp_path, hr_policy="lanczos")


def test_make_pair_records_crop(corpus):
    hr, lr, crop = make_pair(corpus[0][:203, :210], KernelParams(1, 1, 0), 4)
    assert hr.shape == (100, 104) and lr.shape == (25, 26) and crop == (1, 1)


# ------------------------------------------------------------- consistency

def regenerated(source, params):
    return [make_pair(x, params, 4)[1] for x in source]


def test_verify_consistency_orderings(iso1_source):
    truth = regenerated(iso1_source, KernelParams(1.0, 1.0, 0.0))
    plain = regenerated(iso1_source, delta_params())
    blurry = regenerated(iso1_source, KernelParams(3.0, 3.0, 0.0))
    d = {name: verify_consistency(lrs, iso1_source)["distance"]
         for name, lrs in (("truth", truth), ("plain", plain), ("blurry", blurry))}
    assert d["truth"] < d["plain"]
    assert d["blurry"] > d["truth"]
    assert verify_consistency(iso1_source, iso1_source)["distance"] == 0.0


def test_verify_consistency_errors(iso1_source):
    with pytest.raises(ArgumentError):
        verify_consistency([], iso1_source)
    with pytest.raises(ArgumentError):
        verify_consistency([np.zeros((16, 16))], iso1_source, patch_size=32)
