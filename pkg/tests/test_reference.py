import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdmsnn.config import ExperimentConfig, StdpParams
from fdmsnn.device import QuadraticParams, g_read
from fdmsnn.reference import RefNetwork, apply_stdp, eq7_factor, ref_step
from fdmsnn.signals import alpha_response

CFG = ExperimentConfig()
S = StdpParams()


def test_apply_stdp_examples():
    assert apply_stdp(0.0, 0.0, S) == pytest.approx(9.0)
    assert apply_stdp(700.0, -20e-3, S) == pytest.approx(-15 * math.exp(-1), rel=1e-12)
    assert apply_stdp(700.0, 5e-3, S) == 0.0
    assert apply_stdp(695.0, 0.0, dataclasses.replace(S, p=0.0)) == pytest.approx(5.0)  # clipped


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 700), st.floats(-0.2, 0.2))
def test_stdp_polarity_and_bounds(g, dt):
    dg = apply_stdp(g, dt, S)
    assert 0.0 <= g + dg <= S.g_max
    if dt >= 0:
        assert dg >= 0
    else:
        assert dg <= 0


def test_stdp_log_affine_without_saturation():
    s0 = dataclasses.replace(S, p=0.0)
    for sign, tau in ((1, S.tau_plus), (-1, S.tau_minus)):
        dts = np.linspace(1e-3, 60e-3, 40)
        dg = np.array([abs(apply_stdp(350.0, sign * d, s0)) for d in dts])
        slope, icpt = np.polyfit(dts, np.log(dg), 1)
        resid = np.log(dg) - (slope * dts + icpt)
        r2 = 1 - resid.var() / np.log(dg).var()
        assert r2 > 0.9999
        assert slope == pytest.approx(-1 / tau, rel=1e-9)


def _net(m=1, n=1, **kw):
    net = RefNetwork(m, n, CFG, **kw)
    return net


def test_zero_weights_never_spike():
    net = _net(4, 2)
    log = net.run(2000, np.full(4, 10e-9), np.zeros(2), plastic=False)
    assert log.counts(1, 2).sum() == 0
    assert log.counts(0, 4).sum() > 0


def test_single_spike_alpha_peak():
    net = _net()
    net.set_weights(np.array([[350.0]]))
    forced = np.array([[0, 0, 0]])
    cur = []
    for _ in range(300):
        net.run(1, [0.0], [0.0], plastic=False, forced=forced, out_lif=False)
        cur.append(net.alpha_current()[0])
    cur = np.array(cur)
    t_star = (np.argmax(cur) + 1) * net.dt
    # the step that receives the spike is step 0; sampled after each decay
    assert t_star == pytest.approx(CFG.alpha.t_peak, abs=net.dt)
    assert cur.max() == pytest.approx(350.0 * alpha_response(CFG.alpha.t_peak), rel=1e-3)


def test_alpha_superposition_two_spikes():
    net = _net()
    net.set_weights(np.array([[200.0]]))
    forced = np.array([[0, 0, 0], [10, 0, 0]])
    cur = []
    for _ in range(400):
        net.run(1, [0.0], [0.0], plastic=False, forced=forced, out_lif=False)
        cur.append(net.alpha_current()[0])
    t = (np.arange(400) + 1) * net.dt
    direct = 200.0 * (alpha_response(t) + alpha_response(t - 10 * net.dt))
    assert np.allclose(cur, direct, rtol=1e-9, atol=1e-25)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_alpha_state_space_matches_convolution(seed):
    rng = np.random.default_rng(seed)
    steps = np.unique(rng.integers(0, 800, 12))
    net = _net()
    net.set_weights(np.array([[100.0]]))
    forced = np.column_stack([steps, np.zeros_like(steps), np.zeros_like(steps)])
    cur = np.zeros(1000)
    for k in range(1000):
        net.run(1, [0.0], [0.0], plastic=False, forced=forced, out_lif=False)
        cur[k] = net.alpha_current()[0]
    t = (np.arange(1000) + 1) * net.dt
    direct = 100.0 * sum(alpha_response(t - s * net.dt) for s in steps)
    mask = direct > 1e-3 * direct.max()
    assert np.allclose(cur[mask], direct[mask], rtol=1e-3)


def test_pair_stdp_in_network():
    cfg = dataclasses.replace(CFG, stdp=dataclasses.replace(S, p=0.0))
    net = RefNetwork(1, 1, cfg)
    net.set_weights(np.array([[350.0]]))
    net.run(400, [0.0], [0.0], plastic=True, out_lif=False, forced=np.array([[100, 0, 0], [200, 1, 0]]))
    assert net.weights()[0, 0] - 350.0 == pytest.approx(apply_stdp(350.0, 10e-3, cfg.stdp), rel=1e-9)
    net.reset_transients()
    net.run(400, [0.0], [0.0], plastic=True, out_lif=False, forced=np.array([[500, 1, 0], [700, 0, 0]]))
    expected = 350.0 + apply_stdp(350.0, 10e-3, cfg.stdp)
    expected += apply_stdp(expected, -20e-3, cfg.stdp)
    assert net.weights()[0, 0] == pytest.approx(expected, rel=1e-9)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["ideal", "hfo2"]))
def test_weights_stay_bounded_under_random_spikes(seed, mode):
    rng = np.random.default_rng(seed)
    net = RefNetwork(3, 2, CFG, mode=mode, pump_rates=(1e3, 1e3) if mode == "hfo2" else None)
    lo = CFG.hfo2.g_span[0] if mode == "hfo2" else 0.0
    net.set_weights(rng.uniform(lo, 700, (3, 2)))
    n = 3000
    k = rng.integers(0, n, 120)
    ev = np.column_stack([k, rng.integers(0, 2, 120), rng.integers(0, 2, 120)])
    net.run(n, np.zeros(3), np.zeros(2), plastic=True, out_lif=False, forced=ev)
    w = net.weights()
    assert np.all(w >= lo - 1e-9) and np.all(w <= 700 + 1e-9)


def test_eq7_factor():
    net = RefNetwork(2, 1, CFG, mode="eq7", read_amplitude=0.1)
    q = QuadraticParams()
    assert eq7_factor(net, 0, 0) == pytest.approx(4 * 0.1 / (3 * math.pi * 0.3), rel=1e-3)
    assert eq7_factor(RefNetwork(1, 1, CFG), 0, 0) == 1.0
    assert g_read(q, 0.3, 1e-4) == pytest.approx(1.0, rel=1e-6)
    with pytest.raises(ValueError):
        RefNetwork(1, 1, CFG, mode="eq7")


def test_eq7_vbias_collected_and_scaled():
    net = RefNetwork(1, 1, CFG, mode="eq7", read_amplitude=0.1)
    net.set_weights(np.array([[300.0]]))
    vb: list[float] = []
    net.run(1000, [4e-9], [0.0], plastic=False, out_lif=False, vbias=vb)
    assert vb[0] == 0.0 and len(vb) >= 3
    assert all(v < 0 for v in vb[1:])  # the row's own write-pulse tail


def test_ref_step_and_validation():
    net = _net(2, 1)
    ref_step(net, np.zeros(2))
    assert net.time == pytest.approx(net.dt)
    with pytest.raises(ValueError):
        ref_step(net, np.zeros(2), dt=1e-3)
    with pytest.raises(ValueError):
        net.run(1, np.zeros(3))
    with pytest.raises(ValueError):
        net.set_weights(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        RefNetwork(1, 1, CFG, mode="bogus")


def test_determinism():
    logs = []
    for _ in range(2):
        net = RefNetwork(4, 2, CFG)
        net.set_weights(np.full((4, 2), 400.0))
        log = net.run(3000, np.linspace(3e-9, 8e-9, 4), np.array([8e-9, 0.0]))
        logs.append((log.steps.copy(), log.index.copy(), net.weights()))
    for a, b in zip(*logs):
        assert np.array_equal(a, b)
