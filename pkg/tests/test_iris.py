import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdmsnn.config import EncoderParams, ExperimentConfig
from fdmsnn.iris import (
    as_arrays,
    classify,
    decide,
    encode,
    evaluate,
    initial_weights,
    load_and_normalize,
    stratified_split,
    teacher_currents,
    train,
    weights_hash,
)
from fdmsnn.neuron import INPUT_LIF
from fdmsnn.reference import RefNetwork

CFG = ExperimentConfig()


@pytest.fixture(scope="module")
def samples():
    return load_and_normalize()


def test_bundled_dataset(samples):
    x, y = as_arrays(samples)
    assert x.shape == (150, 4)
    assert np.bincount(y).tolist() == [50, 50, 50]
    assert np.allclose(x.min(axis=0), 0) and np.allclose(x.max(axis=0), 1)


def test_loader_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("1,2,3,setosa\n")
    with pytest.raises(ValueError, match="expected 5 fields"):
        load_and_normalize(p)
    p.write_text("1,2,3,4,rose\n2,3,4,5,setosa\n")
    with pytest.raises(ValueError, match="unknown label"):
        load_and_normalize(p)
    p.write_text("1,2,3,4,0\n1,3,4,5,1\n")
    with pytest.raises(ValueError, match="zero range"):
        load_and_normalize(p)
    p.write_text("a,b,c,d,label\n1,2,3,4,0\n2,3,4,5,2\n")
    assert [s.label for s in load_and_normalize(p)] == [0, 2]


def test_encoder_examples():
    p = EncoderParams()
    assert p.centers == (0.125, 0.375, 0.625, 0.875)
    i = encode(np.array([0.125, 0.5, 0.375, 0.875]), p)
    assert i.shape == (16,)
    assert i[0] == pytest.approx(p.i_max)
    assert i[5] == pytest.approx(i[6])  # midway between centres 2 and 3
    assert i[9] == pytest.approx(p.i_max)
    assert i[15] == pytest.approx(p.i_max)


def test_encoder_rate_at_spec_current():
    p = EncoderParams(i_max=10.8e-9)
    i = encode(np.array([0.125, 0.125, 0.125, 0.125]), p)
    rate = 1 / INPUT_LIF.period(i[0])
    assert rate == pytest.approx(1 / (10e-3 * math.log(4 / 3) + 5e-3), rel=1e-9)
    assert rate == pytest.approx(127, rel=0.01)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_split_stratified_and_deterministic(seed):
    y = np.repeat([0, 1, 2], 50)
    a = stratified_split(y, 15, np.random.default_rng(seed))
    b = stratified_split(y, 15, np.random.default_rng(seed))
    assert np.array_equal(a, b)
    assert np.bincount(y[a]).tolist() == [15, 15, 15]
    assert len(set(a.tolist())) == 45


def test_decide_rule():
    assert decide(np.array([0, 3, 0]), np.array([np.inf, 0.01, np.inf])) == 1
    assert decide(np.array([0, 0, 0]), np.full(3, np.inf)) == 0
    assert decide(np.array([2, 2, 1]), np.array([0.05, 0.02, 0.01])) == 1
    assert decide(np.array([2, 2, 0]), np.array([0.02, 0.02, np.inf])) == 0


def test_teacher_currents():
    t = teacher_currents(1, 3, CFG)
    i_th = CFG.lif_output.i_threshold
    assert t.tolist() == pytest.approx([-3 * i_th, 3 * i_th, -3 * i_th])


def test_initial_weights_ranges():
    rng = np.random.default_rng(0)
    w = initial_weights(CFG, 16, 3, rng)
    assert np.all((w >= 70) & (w <= 210))
    wh = initial_weights(CFG, 16, 3, np.random.default_rng(0), "hfo2")
    lo = CFG.hfo2.g_span[0]
    assert np.all(wh >= lo + 0.1 * (700 - lo) - 1e-9)


def test_evaluation_never_mutates_weights(samples):
    net = RefNetwork(16, 3, CFG)
    net.set_weights(initial_weights(CFG, 16, 3, np.random.default_rng(3)))
    before = weights_hash(net.weights())
    x, y = as_arrays(samples)
    evaluate(net, x[:20], y[:20], CFG)
    assert weights_hash(net.weights()) == before


def test_classify_single_winner():
    net = RefNetwork(16, 3, CFG)
    w = np.zeros((16, 3))
    w[:, 2] = 700.0
    net.set_weights(w)
    assert classify(net, np.full(4, 0.5), CFG) == 2
    net.set_weights(np.zeros((16, 3)))
    assert classify(net, np.full(4, 0.5), CFG) == 0


def test_untrained_accuracy_near_chance(samples):
    accs = []
    for seed in range(10):
        rep = train(RefNetwork(16, 3, CFG), samples, 0, seed, CFG)
        accs.append(rep.accuracy[0])
    assert 20.0 <= np.mean(accs) <= 55.0


def test_reference_training_report(samples):
    rep = train(RefNetwork(16, 3, CFG), samples, 20, 1, CFG)
    assert len(rep.accuracy) == 21
    assert all(0 <= a <= 100 for a in rep.accuracy)
    assert rep.peak_accuracy >= 94.0
    assert rep.setosa_recall() >= 0.95
    s = rep.summary()
    assert s["epochs"] == 20 and s["peak_accuracy"] == rep.peak_accuracy
    with pytest.raises(ValueError):
        train(RefNetwork(16, 3, CFG), samples, -1, 1, CFG)
