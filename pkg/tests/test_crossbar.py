import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdmsnn import _backend
from fdmsnn.config import ExperimentConfig
from fdmsnn.crossbar import (
    CircuitNetwork,
    calibrate_kappa,
    run_read_validation,
    run_stdp_sweep,
    stdp_mae,
    step,
)

CFG = ExperimentConfig()
needs_cython = pytest.mark.skipif(_backend.BACKEND != "cython", reason="compiled kernels not built")


def test_quiescent_network():
    net = CircuitNetwork(3, 2, CFG)
    log = net.run(500, np.zeros(3), np.zeros(2), trace_column=0)
    assert len(log.steps) == 0
    assert not np.any(net.last_trace)
    assert np.all(net.conductance() == 0)


def test_kappa_calibration_linear():
    kappa = calibrate_kappa(CFG)
    for frac in (0.5, 0.25, 0.9):
        net = CircuitNetwork(1, 1, CFG, writes=False, kappa=kappa)
        net.set_weights(np.array([[frac * 700.0]]))
        net.run(400, forced=np.array([[50, 0, 0]]), out_lif=False, record_reads=True, plastic=False)
        g_hat = net.last_reads.g_hat[0]
        tol = 1e-9 if frac == 0.5 else 0.02
        assert g_hat == pytest.approx(frac * 700.0, rel=tol)


def _column_run(rows, n_steps=600):
    """Forced pre spikes ``(row, step)`` on a 2x1 array with writes disabled."""
    net = CircuitNetwork(2, 1, CFG, writes=False)
    net.set_weights(np.array([[300.0], [150.0]]))
    ev = np.array([[k, 0, r] for r, k in rows])
    net.run(n_steps, np.zeros(2), np.zeros(1), plastic=False, out_lif=False, forced=ev, trace_column=0)
    return net


def test_superposition_at_sense_node():
    a = _column_run([(0, 50)])
    b = _column_run([(1, 50)])
    ab = _column_run([(0, 50), (1, 50)])
    i_a, i_b, i_ab = (n.trace("i_col").values for n in (a, b, ab))
    scale = np.abs(i_ab).max()
    assert np.max(np.abs(i_ab - (i_a + i_b))) <= 0.005 * scale
    env = ab.trace("envelope").values
    env_sum = a.trace("envelope").values + b.trace("envelope").values
    assert env.max() == pytest.approx(env_sum.max(), rel=0.005)
    assert ab.alpha_current()[0] == pytest.approx(a.alpha_current()[0] + b.alpha_current()[0], rel=0.005)


def test_overlapping_reads_sum():
    # second row fires while the first read window is still open
    a = _column_run([(0, 50)], n_steps=3000)
    b = _column_run([(1, 150)], n_steps=3000)
    ab = _column_run([(0, 50), (1, 150)], n_steps=3000)
    assert ab.alpha_current()[0] == pytest.approx(a.alpha_current()[0] + b.alpha_current()[0], rel=0.01)


def test_read_validation_default_and_writes_off():
    rv = run_read_validation(200, 1, CFG)
    assert len(rv.errors) >= 200
    assert rv.max_error <= 0.03
    quiet = rv.errors[rv.reads.write_peak == 0]
    assert quiet.size == 0 or quiet.max() <= rv.max_error
    off = run_read_validation(200, 1, CFG, writes=False)
    assert off.max_error <= 0.005
    edges, counts = rv.histogram()
    assert counts.sum() == len(rv.errors)
    with pytest.raises(ValueError):
        run_read_validation(0, 1, CFG)


def test_filter_bypass_breaks_reads():
    cfg = CFG.with_overrides({"hpf.bypass": True})
    assert run_read_validation(100, 1, cfg).max_error > 0.10


def test_stdp_sweep_polarity_and_decay():
    pts = run_stdp_sweep([10e-3, -10e-3, 200e-3, -200e-3], CFG)
    assert pts[0].dg_circuit > 0 and pts[1].dg_circuit < 0
    assert abs(pts[2].dg_circuit) < 0.01 * abs(pts[0].dg_circuit)
    assert abs(pts[3].dg_circuit) < 0.01 * abs(pts[1].dg_circuit)
    assert pts[0].rel_error <= 0.05
    with pytest.raises(ValueError):
        run_stdp_sweep([], CFG)


def test_stdp_mae_default_grid():
    assert stdp_mae(run_stdp_sweep(CFG.validation.delta_ts, CFG)) <= 0.05


def test_forced_pair_without_saturation_matches_rule():
    pts = run_stdp_sweep([10e-3], CFG)
    assert pts[0].dg_circuit == pytest.approx(pts[0].dg_eq4, rel=0.05)


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["ideal", "hfo2", "quadratic"]))
def test_conductance_bounds_any_run(seed, device):
    rng = np.random.default_rng(seed)
    net = CircuitNetwork(3, 2, CFG, device=device)
    lo = CFG.hfo2.g_span[0] if device == "hfo2" else 0.0
    net.set_weights(rng.uniform(lo, 700, (3, 2)))
    net.run(3000, rng.uniform(0, 12e-9, 3), rng.uniform(-8e-9, 12e-9, 2), plastic=True)
    g = net.conductance()
    assert np.all(g >= lo - 1e-6) and np.all(g <= 700 + 1e-6)


def _small_run(backend):
    net = CircuitNetwork(3, 2, CFG, backend=backend)
    net.set_weights(np.array([[100.0, 200.0], [300.0, 400.0], [500.0, 600.0]]))
    log = net.run(2500, np.array([6e-9, 9e-9, 12e-9]), np.array([8e-9, -2e-9]), plastic=True,
                  record_reads=True, trace_column=1)
    return log, net


def test_determinism_bit_identical():
    (l1, n1), (l2, n2) = _small_run(None), _small_run(None)
    assert np.array_equal(l1.steps, l2.steps) and np.array_equal(l1.index, l2.index)
    assert np.array_equal(n1.vc, n2.vc)
    assert np.array_equal(n1.last_trace, n2.last_trace)


@needs_cython
def test_cython_matches_python_bit_for_bit():
    (lc, nc), (lp, np_) = _small_run("cython"), _small_run("python")
    assert np.array_equal(lc.steps, lp.steps) and np.array_equal(lc.kinds, lp.kinds)
    assert np.array_equal(lc.index, lp.index)
    assert np.array_equal(nc.vc, np_.vc)
    assert np.array_equal(nc.last_trace, np_.last_trace)
    assert np.array_equal(nc.last_reads.g_hat, np_.last_reads.g_hat)


@needs_cython
@pytest.mark.parametrize("mode", ["ideal", "hfo2", "eq7"])
def test_reference_cython_matches_python(mode):
    from fdmsnn.reference import RefNetwork

    out = []
    for backend in ("cython", "python"):
        net = RefNetwork(3, 2, CFG, mode=mode, read_amplitude=0.1 if mode == "eq7" else None,
                         pump_rates=(2e3, 2e3) if mode == "hfo2" else None, backend=backend)
        lo = CFG.hfo2.g_span[0] if mode == "hfo2" else 0.0
        net.set_weights(np.full((3, 2), lo + 200.0))
        vb: list[float] = []
        log = net.run(3000, np.array([6e-9, 9e-9, 12e-9]), np.array([8e-9, -2e-9]), plastic=True, vbias=vb)
        out.append((log.steps, log.index, net.weights(), np.array(vb)))
    for a, b in zip(*out):
        assert np.array_equal(a, b)


def test_step_and_validation():
    net = CircuitNetwork(2, 1, CFG)
    step(net, np.zeros(2))
    assert net.time == pytest.approx(CFG.circuit.dt)
    with pytest.raises(ValueError):
        step(net, np.zeros(2), dt=1e-3)
    with pytest.raises(ValueError):
        CircuitNetwork(1, 1, CFG, device="bogus")
    with pytest.raises(ValueError):
        net.trace("envelope") if net.last_trace is None else net.trace("bogus")
    with pytest.raises(ValueError):
        CircuitNetwork(1, 1, dataclasses.replace(CFG, read=dataclasses.replace(CFG.read, amplitude=0.6)))
