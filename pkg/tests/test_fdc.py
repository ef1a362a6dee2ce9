import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freqadapt.errors import ArgumentError, FormatError, TrainingError
from freqadapt.fdc import (ComparatorModel, CurriculumSchedule, TrainState, Triplet, comparator_forward,
                           comparator_scores, consistency_losses, fdc_consistency_loss, fdc_loss_and_grads,
                           fdc_step, fdc_train_loss, load_comparator, make_triplet, ordering_accuracy,
                           sample_triplets, save_comparator, triplet_span)
from freqadapt.imaging import PatchSpec, center_crop, make_rng
from freqadapt.kernels import KernelParams, blur, downsample, gaussian_kernel
from freqadapt.nn import flatten, numeric_gradient
from freqadapt.spectral import patch_profile


def random_profiles(rng, n, bins=33):
    return rng.random((n, bins)) + 0.01


def random_triplets(rng, n, bins=33):
    return [Triplet(*random_profiles(rng, 4, bins)) for _ in range(n)]


def keyed(value):
    p = np.full(33, 1.0)
    p[0] = value
    return p


# ------------------------------------------------------------- comparator

@given(seed=st.integers(0, 2 ** 31 - 1))
@settings(max_examples=40, deadline=None)
def test_antisymmetry_is_exact(seed):
    rng = np.random.default_rng(seed)
    m = ComparatorModel(seed=seed)
    a, b = random_profiles(rng, 2)
    assert comparator_forward(m, a, b) == -comparator_forward(m, b, a)
    assert comparator_forward(m, a, a) == 0.0


def test_bin_count_mismatch():
    m = ComparatorModel()
    with pytest.raises(ArgumentError):
        comparator_forward(m, np.ones(33), np.ones(17))
    with pytest.raises(ArgumentError):
        comparator_forward(m, np.ones(17), np.ones(17))


def test_zero_model_losses():
    m = ComparatorModel(zero=True)
    t = Triplet(*random_profiles(np.random.default_rng(0), 4))
    assert fdc_train_loss(m, t) == 2.0
    assert fdc_consistency_loss(m, t.anchor, t.anchor, t.down, t.up) == 2.0


def test_perfect_model_losses():
    m = ComparatorModel(zero=True)
    # embeddings keyed on bin 0: down -> 1, up -> -1, same and anchor -> 0
    table = {2.0: 1.0, 3.0: 0.0, 4.0: -1.0, 5.0: 0.0}
    m.embed = lambda bins: np.array([table[float(r[0])] for r in np.atleast_2d(bins)])
    t = Triplet(keyed(2.0), keyed(3.0), keyed(4.0), keyed(5.0))
    assert fdc_train_loss(m, t) == 0.0
    # a generated profile embedding like the anchor sits between the boundaries
    assert fdc_consistency_loss(m, t.anchor, t.anchor, t.down, t.up) == 0.0


# ---------------------------------------------------------------- triplets

def test_triplet_shape_contract(corpus):
    t = make_triplet(corpus[0], 3.5, PatchSpec(64, 1, 1, 7))
    assert all(p.shape == (33,) for p in t)
    assert not t.degenerate
    assert triplet_span(64, 3.5) <= 512


def test_constant_image_gives_degenerate_triplet():
    t = make_triplet(np.full((300, 300), 0.4), 2.0, PatchSpec(64, 1, 1, 1))
    assert t.degenerate
    assert all(np.all(p == 0) for p in t)
    with pytest.raises(TrainingError):
        sample_triplets([np.full((300, 300), 0.4)], 2.0, 2, make_rng(0))


def test_triplet_is_deterministic(corpus):
    a = make_triplet(corpus[3], 2.0, PatchSpec(64, 1, 1, 5))
    b = make_triplet(corpus[3], 2.0, PatchSpec(64, 1, 1, 5))
    c = make_triplet(corpus[3], 2.0, PatchSpec(64, 1, 1, 6))
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)
    assert not np.array_equal(a.same, c.same)


def test_triplet_errors():
    with pytest.raises(ArgumentError):
        make_triplet(np.zeros((512, 512)), 1.0, PatchSpec(64, 1, 1, 0))
    with pytest.raises(ArgumentError):
        make_triplet(np.zeros((200, 200)), 3.5, PatchSpec(64, 1, 1, 0))


def test_triplet_anchor_is_patch_profile(corpus):
    # anchor must be the profile of a plain 64px crop somewhere in the image
    t = make_triplet(corpus[2], 1.5, PatchSpec(64, 1, 1, 3))
    assert t.anchor.sum() > 0
    assert t.anchor.shape == patch_profile(corpus[2][:64, :64]).shape


# -------------------------------------------------------------- schedule

def test_curriculum_bounds():
    s = CurriculumSchedule(steps=100)
    vals = [s.scale_at(i) for i in range(0, 130)]
    assert vals[0] == 3.5 and vals[-1] == pytest.approx(1.2)
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    g = CurriculumSchedule(steps=100, decay="geometric")
    assert g.scale_at(50) == pytest.approx(math.sqrt(3.5 * 1.2))
    for bad in (dict(start_scale=1.2, end_scale=1.5), dict(end_scale=1.0), dict(steps=0), dict(decay="cos")):
        with pytest.raises(ArgumentError):
            CurriculumSchedule(**bad)


# ---------------------------------------------------------------- training

def test_zero_learning_rate_keeps_weights():
    rng = np.random.default_rng(1)
    state = TrainState.fresh(ComparatorModel(seed=3))
    before = state.model.encoder.get_flat().copy()
    fdc_step(state, random_triplets(rng, 4), 0.0)
    np.testing.assert_array_equal(state.model.encoder.get_flat(), before)
    assert state.iteration == 1
    m, v = state.optimizer.flat_moments()
    assert m.shape == v.shape == before.shape


def test_empty_batch():
    with pytest.raises(ArgumentError):
        fdc_step(TrainState.fresh(ComparatorModel()), [], 1e-3)


@pytest.mark.filterwarnings("ignore:invalid value")
def test_non_finite_gradient_names_batch_index():
    rng = np.random.default_rng(2)
    batch = random_triplets(rng, 3)
    bad = batch[1]._replace(up=np.full(33, np.inf))
    batch[1] = bad
    with pytest.raises(TrainingError) as info:
        fdc_step(TrainState.fresh(ComparatorModel()), batch, 1e-3)
    assert info.value.batch_index == 1


def test_fixed_batch_loss_decreases(iso1_source):
    rng = make_rng(4)
    batch = sample_triplets(iso1_source, 2.0, 8, rng)
    state = TrainState.fresh(ComparatorModel(seed=1))
    losses = []
    for _ in range(200):
        losses.append(fdc_train_loss(state.model, batch))
        fdc_step(state, batch, 1e-4)
    smooth = np.convolve(losses, np.ones(10) / 10, mode="valid")
    assert np.all(np.diff(smooth) <= 1e-12), np.diff(smooth).max()
    assert smooth[-1] < smooth[0]


def relative_errors(analytic, numeric):
    return np.abs(analytic - numeric) / np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(5)
    model = ComparatorModel(seed=11)
    batch = random_triplets(rng, 6)
    _, grads, _ = fdc_loss_and_grads(model, batch)
    analytic = flatten(grads)
    coords = rng.choice(analytic.size, size=100, replace=False)
    numeric = numeric_gradient(lambda: fdc_train_loss(model, batch), model.encoder, coords, 1e-4)
    assert relative_errors(analytic[coords], numeric).max() < 1e-3


# ---------------------------------------------------------- trained model

def test_trained_model_orders_scale_pairs(trained_fdc):
    model, held = trained_fdc
    rng = make_rng(21)
    pos = 0
    n = 0
    for img in held:
        for _ in range(25):
            t = make_triplet(img, 1.0 / 0.7, PatchSpec(64, 1, 1, int(rng.integers(2 ** 31))))
            pos += comparator_forward(model, t.down, t.anchor) > 0
            n += 1
    assert pos / n >= 0.95


@pytest.mark.parametrize("scale,floor", [(1.5, 0.95), (1.2, 0.85)])
def test_trained_model_ordering_accuracy(trained_fdc, scale, floor):
    model, held = trained_fdc
    assert ordering_accuracy(model, sample_triplets(held, scale, 200, make_rng(99))) >= floor


def test_trained_model_held_out_loss(trained_fdc):
    model, held = trained_fdc
    loss = fdc_train_loss(model, sample_triplets(held, 1.2, 200, make_rng(99)))
    assert loss < 0.5, loss


def test_over_blurred_generator_costs_more(trained_fdc, iso1_source):
    model, _ = trained_fdc
    rng = make_rng(8)
    true_k = gaussian_kernel(KernelParams(1.0, 1.0, 0.0), 13)
    blurry_k = gaussian_kernel(KernelParams(3.0, 3.0, 0.0), 13)
    totals = {"true": 0.0, "blurry": 0.0}
    for img in iso1_source:
        t = make_triplet(img, 1.2, PatchSpec(64, 1, 1, int(rng.integers(2 ** 31))))
        low = downsample(img, 4)
        for name, k in (("true", true_k), ("blurry", blurry_k)):
            g = patch_profile(center_crop(blur(low, k), 64))
            totals[name] += fdc_consistency_loss(model, g, t.anchor, t.down, t.up)
    assert totals["blurry"] > totals["true"]


def test_batched_consistency_matches_single(trained_fdc):
    model, held = trained_fdc
    batch = sample_triplets(held, 1.5, 5, make_rng(3))
    g = np.stack([t.same for t in batch])
    single = [fdc_consistency_loss(model, gi, t.anchor, t.down, t.up) for gi, t in zip(g, batch)]
    np.testing.assert_allclose(consistency_losses(model, g, batch), single, rtol=1e-12)
    s = comparator_scores(model, batch)
    assert s.shape == (5, 3)


# -------------------------------------------------------------- checkpoints

def test_checkpoint_round_trip(tmp_path):
    m = ComparatorModel(seed=9, norm="log1p")
    save_comparator(m, tmp_path / "c.fqm")
    back = load_comparator(tmp_path / "c.fqm")
    assert back.norm == "log1p" and back.encoder.sizes == [33, 64, 32, 1]
    rng = np.random.default_rng(0)
    a, b = random_profiles(rng, 2)
    # weights are stored as float32
    assert comparator_forward(back, a, b) == pytest.approx(comparator_forward(m, a, b), abs=1e-5)


def test_checkpoint_rejects_garbage(tmp_path):
    p = tmp_path / "bad.fqm"
    p.write_bytes(b"hello\n\nworld")
    with pytest.raises(FormatError):
        load_comparator(p)
    p.write_bytes(b"no terminator")
    with pytest.raises(FormatError):
        load_comparator(p)
