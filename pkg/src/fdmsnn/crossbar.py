"""Fixed-step mixed-signal crossbar simulator.

Each tick: input neurons fire and trigger their row's read burst at once and
its write pulse ``t_offset`` later; rows carry read burst plus write pulse,
columns carry their output's write pulse; every device sees
``V_row - V_col`` and pumps its state when a threshold is exceeded; the column
current passes an 8th-order high-pass filter and a one-period peak detector;
while any row's read window is open (after the filter settles) the detected
envelope drives the column's alpha generator, which feeds the output neuron.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _backend
from .config import ExperimentConfig
from .reference import NEVER, SpikeLog, _events, _spike_cap, apply_stdp, device_vector, lif_vector, write_vector
from .signals import SignalTrace, hpf_coefficients

TRACE_COLUMNS = ("v_row0", "v_col", "i_col", "i_filtered", "envelope", "g_0j", "i_alpha")


@dataclass
class ReadRecords:
    """One row per (read, column): start time, row, column, estimate, true mean."""

    start: np.ndarray
    row: np.ndarray
    col: np.ndarray
    g_hat: np.ndarray
    g_true: np.ndarray
    write_peak: np.ndarray

    @classmethod
    def from_buffer(cls, buf: np.ndarray, count: int, dt: float) -> "ReadRecords":
        if count > buf.shape[0]:
            raise OverflowError("read buffer overflow")
        b = buf[:count]
        return cls(b[:, 0] * dt, b[:, 1].astype(int), b[:, 2].astype(int), b[:, 3].copy(),
                   b[:, 4].copy(), b[:, 5].copy())

    @property
    def rel_error(self) -> np.ndarray:
        return np.abs(self.g_hat - self.g_true) / self.g_true


class CircuitNetwork:
    """m x n crossbar with resumable state.

    ``kappa`` (envelope to conductance) and ``pump_rates`` (SET, RESET, in
    state units per volt-second) default to the calibrated values.
    """

    def __init__(self, m: int, n: int, cfg: ExperimentConfig = ExperimentConfig(), device: str = "ideal",
                 kappa: float | None = None, pump_rates: tuple[float, float] | None = None,
                 p_sat: float | None = None, writes: bool = True, backend: str | None = None):
        if device not in ("ideal", "hfo2", "quadratic"):
            raise ValueError(f"unknown device {device!r}")
        if device != "hfo2":
            cfg.read.check_device(cfg.ideal.v_tp, cfg.ideal.v_tn)
        self.m, self.n, self.cfg, self.device = m, n, cfg, device
        self.k = _backend.get_kernels(backend)
        self.dt = dt = cfg.circuit.dt
        self.step_index = 0
        if kappa is None:
            kappa = cfg.circuit.kappa if cfg.circuit.kappa is not None else calibrate_kappa(cfg)
        self.kappa = kappa
        if pump_rates is None and cfg.circuit.calibrate_gains:
            pump_rates = calibrate_write_gains(cfg, device)
        self.dev = device_vector(cfg, device, rates=pump_rates, p_sat=p_sat, v_ref=cfg.quadratic.v_ref)
        self.vc = np.zeros((m, n))
        if device == "hfo2":
            self.vc[:] = cfg.hfo2.vc_min
        self.lif_in = lif_vector(cfg.lif_input, dt)
        self.lif_out = lif_vector(cfg.lif_output, dt)
        self.wp = write_vector(cfg, dt, writes)
        r = cfg.read
        n_dur = int(round(r.duration / dt))
        n_skip = int(round(cfg.circuit.skip_periods * r.period / dt))
        n_end = n_dur + int(round(cfg.circuit.tail_periods * r.period / dt))
        if n_skip >= n_dur:
            raise ValueError("read window shorter than the filter settling skip")
        n_per = max(int(round(r.period / dt)), 1)
        self.rp = np.array([r.amplitude, r.period, n_dur, n_skip, n_end, n_per])
        self.n_ring = n_per
        if cfg.hpf.bypass:
            self.fp = np.array([0.0, 0.0, cfg.hpf.order, 1.0])
        else:
            a, c = hpf_coefficients(cfg.hpf, dt)
            self.fp = np.array([a, c, cfg.hpf.order, 0.0])
        al = cfg.alpha
        self.ap = np.array([math.exp(-dt / al.tau1), math.exp(-dt / al.tau2), al.v0, kappa,
                            (n_end - n_skip) * dt])
        self.plastic = True
        self.i_in = np.zeros(m)
        self.i_teach = np.zeros(n)
        self.last_reads: ReadRecords | None = None
        self.last_trace: np.ndarray | None = None
        self.reset_transients()

    # state ---------------------------------------------------------------
    def reset_transients(self) -> None:
        """Reset neurons, generators, filters, envelopes and alpha state.
        Device states persist."""
        m, n = self.m, self.n
        self.v_in = np.zeros(m)
        self.in_ref = np.full(m, NEVER, dtype=np.int64)
        self.v_out = np.zeros(n)
        self.out_ref = np.full(n, NEVER, dtype=np.int64)
        qcap = int(self.wp[6]) + 4
        self.gen = np.zeros((m + n, 2))
        self.gen_i = np.zeros((m + n, 4), dtype=np.int64)
        self.queue = np.zeros((m + n, qcap), dtype=np.int64)
        self.read_start = np.full(m, NEVER, dtype=np.int64)
        order = int(self.fp[2])
        self.hx = np.zeros((n, order))
        self.hy = np.zeros((n, order))
        self.ring = np.zeros((n, self.n_ring))
        self.s1 = np.zeros(n)
        self.s2 = np.zeros(n)
        self.racc = np.zeros((m, n, 3))

    @property
    def time(self) -> float:
        return self.step_index * self.dt

    def conductance(self) -> np.ndarray:
        if self.device == "hfo2":
            return np.asarray(self.cfg.hfo2.g_of(self.vc), dtype=float).reshape(self.m, self.n)
        return self.cfg.ideal.g_max * self.vc

    weights = conductance

    def set_weights(self, g: np.ndarray) -> None:
        g = np.asarray(g, dtype=float)
        if g.shape != (self.m, self.n):
            raise ValueError(f"weights must have shape {(self.m, self.n)}")
        if self.device == "hfo2":
            h = self.cfg.hfo2
            self.vc = np.array([[h.v_c_of(x) for x in row] for row in g])
        else:
            self.vc = np.clip(g / self.cfg.ideal.g_max, 0.0, 1.0)

    # running -------------------------------------------------------------
    def run(self, n_steps: int, input_currents=None, teach=None, plastic: bool | None = None,
            forced: np.ndarray | None = None, out_lif: bool = True, record_reads: bool = False,
            trace_column: int | None = None) -> SpikeLog:
        """Advance ``n_steps``. Read records and traces of this call are left in
        ``last_reads`` / ``last_trace``."""
        if input_currents is not None:
            ic = np.asarray(input_currents, dtype=float)
            if ic.shape != (self.m,):
                raise ValueError(f"input_currents must have length {self.m}")
            self.i_in = ic.copy()
        if teach is not None:
            tc = np.asarray(teach, dtype=float)
            if tc.shape != (self.n,):
                raise ValueError(f"teacher currents must have length {self.n}")
            self.i_teach = tc.copy()
        if plastic is not None:
            self.plastic = plastic
        ev = _events(forced)
        spikes = np.zeros((_spike_cap(n_steps, self.m, self.n, self.lif_in) + len(ev), 3), dtype=np.int64)
        n_reads = (self.m * self.n * (n_steps // max(int(self.lif_in[4]), 1) + len(ev) + 2)
                   if record_reads else 1)
        reads = np.zeros((n_reads, 6))
        trace = np.zeros((n_steps if trace_column is not None else 0, len(TRACE_COLUMNS)))
        counters = np.zeros(3, dtype=np.int64)
        flags = np.array([float(self.plastic), float(out_lif), float(record_reads),
                          float(trace_column if trace_column is not None else -1)])
        t0 = self.time
        self.k.circuit_run(n_steps, self.step_index, self.dt, self.vc, self.dev, self.v_in,
                           self.in_ref, self.i_in, self.lif_in, self.v_out, self.out_ref,
                           self.i_teach, self.lif_out, self.gen, self.gen_i, self.queue, self.wp,
                           self.read_start, self.rp, self.hx, self.hy, self.fp, self.ring,
                           self.s1, self.s2, self.ap, self.racc, flags, ev, spikes, reads, trace,
                           counters)
        self.step_index += n_steps
        self.last_reads = ReadRecords.from_buffer(reads, int(counters[1]), self.dt) if record_reads else None
        self.last_trace = trace if trace_column is not None else None
        self._trace_t0 = t0
        return SpikeLog.from_buffer(spikes, int(counters[0]), self.dt)

    def trace(self, name: str) -> SignalTrace:
        if self.last_trace is None:
            raise ValueError("no trace recorded in the last run")
        col = TRACE_COLUMNS.index(name)
        unit = "A" if name.startswith("i_") or name == "envelope" else ("S" if name.startswith("g") else "V")
        return SignalTrace(self._trace_t0, self.dt, self.last_trace[:, col].copy(), unit)

    def alpha_current(self) -> np.ndarray:
        return self.cfg.alpha.v0 * (self.s2 - self.s1)


def step(net: CircuitNetwork, input_currents, dt: float | None = None) -> SpikeLog:
    """One engine tick at the network's own dt."""
    if dt is not None and not math.isclose(dt, net.dt):
        raise ValueError("dt must match the engine configuration")
    return net.run(1, input_currents)


# calibration -------------------------------------------------------------

def _calib_key(cfg: ExperimentConfig) -> ExperimentConfig:
    # kappa and gains depend only on the analog blocks; drop run-level fields
    return dataclasses.replace(cfg, seed=0, epochs=0, out="", fast=False,
                               circuit=dataclasses.replace(cfg.circuit, kappa=None))


def calibrate_kappa(cfg: ExperimentConfig = ExperimentConfig()) -> float:
    """Envelope-to-conductance constant from one read of a G_max/2 device with
    writes disabled."""
    return _calibrate_kappa(_calib_key(cfg))


@lru_cache(maxsize=32)
def _calibrate_kappa(cfg: ExperimentConfig) -> float:
    g_cal = 0.5 * cfg.ideal.g_max
    net = CircuitNetwork(1, 1, cfg, "ideal", kappa=1.0, pump_rates=(1.0, 1.0), writes=False)
    net.set_weights(np.array([[g_cal]]))
    start = 50
    n = start + int(net.rp[4]) + 5
    net.run(n, forced=np.array([[start, 0, 0]]), out_lif=False, record_reads=True, plastic=False)
    est = float(net.last_reads.g_hat[0])
    if not est > 1e-12 * g_cal:
        raise ValueError("read envelope below numerical floor; check the filter configuration")
    return g_cal / est


def pair_response(cfg: ExperimentConfig, device: str, delta_t: float, g_start: float,
                  pump_rates: tuple[float, float] | None, p_sat: float | None = 0.0,
                  kappa: float | None = None, backend: str | None = None) -> float:
    """Conductance change of a 1x1 array for one forced pre/post pair
    (``delta_t = t_post - t_pre``)."""
    dt = cfg.circuit.dt
    net = CircuitNetwork(1, 1, cfg, device, kappa=kappa if kappa is not None else 1.0,
                         pump_rates=pump_rates, p_sat=p_sat, backend=backend)
    net.set_weights(np.array([[g_start]]))
    g0 = net.conductance()[0, 0]
    lead = 100
    lag = int(round(abs(delta_t) / dt))
    t_pre, t_post = (lead, lead + lag) if delta_t >= 0 else (lead + lag, lead)
    st = cfg.stdp
    settle = 5 * cfg.write.tail_scale * max(st.tau_plus, st.tau_minus) + cfg.write.t_offset + cfg.write.t_w
    n_steps = lead + lag + int(round(settle / dt))
    ev = np.array([[t_pre, 0, 0], [t_post, 1, 0]])
    net.run(n_steps, forced=ev, out_lif=False, plastic=True)
    return float(net.conductance()[0, 0] - g0)


def calibrate_write_gains(cfg: ExperimentConfig = ExperimentConfig(), device: str = "ideal") -> tuple[float, float]:
    """Pump rates (SET, RESET) for ``device`` such that an isolated pair at
    +/- ``calibration_lag`` changes the conductance of an ideal device by the
    STDP rule's amount with saturation disabled."""
    return _calibrate_gains(_calib_key(cfg), device)


@lru_cache(maxsize=32)
def _calibrate_gains(cfg: ExperimentConfig, device: str) -> tuple[float, float]:
    lag = cfg.circuit.calibration_lag
    g_max = cfg.ideal.g_max
    st = dataclasses.replace(cfg.stdp, p=0.0)
    mid = 0.5 * g_max
    # unit rates: the response is the overdrive integral scaled by g_max
    up = pair_response(cfg, "ideal", lag, mid, (1.0, 1.0), kappa=1.0)
    down = pair_response(cfg, "ideal", -lag, mid, (1.0, 1.0), kappa=1.0)
    if up <= 0 or down >= 0:
        raise ValueError("write pulses do not overlap beyond threshold at the calibration lag")
    r_set = apply_stdp(mid, lag, st) / up
    r_reset = apply_stdp(mid, -lag, st) / down
    if device == "hfo2":
        # same conductance rate at the mean slope of the HfO2 conductance law
        scale = g_max / cfg.hfo2.mean_slope
        return r_set * scale, r_reset * scale
    return r_set, r_reset


# 1x1 experiments ----------------------------------------------------------

@dataclass
class StdpPoint:
    delta_t: float
    dg_circuit: float
    dg_eq4: float

    @property
    def rel_error(self) -> float:
        return abs(self.dg_circuit - self.dg_eq4) / abs(self.dg_eq4)


def run_stdp_sweep(delta_ts, cfg: ExperimentConfig = ExperimentConfig(), backend: str | None = None) -> list[StdpPoint]:
    """Circuit conductance change for isolated pairs vs. the STDP rule with
    saturation disabled, starting from G_max/2 each time."""
    delta_ts = list(delta_ts)
    if not delta_ts:
        raise ValueError("empty delta-t grid")
    g_max = cfg.ideal.g_max
    g0 = cfg.validation.g_init * g_max
    rates = calibrate_write_gains(cfg, "ideal") if cfg.circuit.calibrate_gains else None
    st = dataclasses.replace(cfg.stdp, p=0.0)
    out = []
    for d in delta_ts:
        dg = pair_response(cfg, "ideal", d, g0, rates, p_sat=0.0, kappa=1.0, backend=backend)
        out.append(StdpPoint(float(d), dg, apply_stdp(g0, d, st)))
    return out


def stdp_mae(points: list[StdpPoint]) -> float:
    return float(np.mean([p.rel_error for p in points]))


@dataclass
class ReadValidation:
    reads: ReadRecords
    spikes: SpikeLog
    g_trajectory: tuple[float, float]

    @property
    def errors(self) -> np.ndarray:
        return self.reads.rel_error

    @property
    def max_error(self) -> float:
        return float(self.errors.max())

    def histogram(self, bin_width: float = 0.001) -> tuple[np.ndarray, np.ndarray]:
        e = self.errors
        top = max(e.max(), bin_width)
        edges = np.arange(0.0, top + bin_width, bin_width)
        counts, edges = np.histogram(e, bins=edges)
        return edges, counts


def random_spike_schedule(n_events: int, rng: np.random.Generator, isi_min: float, isi_max: float,
                          dt: float, start: float) -> np.ndarray:
    """Spike steps with independent uniform inter-spike intervals."""
    isi = rng.uniform(isi_min, isi_max, n_events)
    return np.round((start + np.cumsum(isi)) / dt).astype(np.int64)


def run_read_validation(n_events: int, seed: int, cfg: ExperimentConfig = ExperimentConfig(),
                        writes: bool = True, backend: str | None = None) -> ReadValidation:
    """1x1 array with independent random pre and post spike trains; returns the
    relative error of every read against the device's true mean conductance
    over the read window."""
    if n_events < 1:
        raise ValueError("n_events must be positive")
    v = cfg.validation
    dt = cfg.circuit.dt
    rng = np.random.default_rng(seed)
    pre = random_spike_schedule(n_events, rng, v.isi_min, v.isi_max, dt, 1e-3)
    post = random_spike_schedule(n_events, rng, v.isi_min, v.isi_max, dt, 1e-3)
    ev = np.concatenate([np.column_stack([pre, np.zeros_like(pre), np.zeros_like(pre)]),
                         np.column_stack([post, np.ones_like(post), np.zeros_like(post)])])
    net = CircuitNetwork(1, 1, cfg, "ideal", writes=writes, backend=backend)
    net.set_weights(np.array([[v.g_init * cfg.ideal.g_max]]))
    g0 = float(net.conductance()[0, 0])
    n_steps = int(pre[-1]) + int(net.rp[4]) + 10
    log = net.run(n_steps, forced=ev, out_lif=False, record_reads=True, plastic=True)
    return ReadValidation(net.last_reads, log, (g0, float(net.conductance()[0, 0])))
