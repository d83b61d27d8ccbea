"""The mathematical spiking network: LIF neurons, alpha-kernel synapses and
pair-based STDP, plus two device-aware variants.

Read models:

- ``ideal``: weights are conductances updated by the STDP rule.
- ``hfo2``: weights follow the HfO2 state variable; each spike pair moves the
  state by the pump integral of the two write pulses' superposition, so the
  state-dependent thresholds shape learning as they do in the circuit.
- ``eq7``: ideal STDP, but each read is scaled by the square-law device's
  fundamental response at the bias set by the write pulses at the read instant.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _backend
from .config import ExperimentConfig, StdpParams
from .device import Hfo2Params, QuadraticParams, g_read
from .neuron import LifParams
from .signals import WritePulseParams, write_pulse

NEVER = _backend.NEVER
MODES = ("ideal", "hfo2", "eq7")


def apply_stdp(g: float, delta_t: float, s: StdpParams = StdpParams()) -> float:
    """Weight change for one pre/post pair with ``delta_t = t_post - t_pre``.

    The result is clipped so that ``g + dG`` stays within [0, G_max].
    """
    x = min(max(g / s.g_max, 0.0), 1.0)
    if delta_t >= 0:
        dg = abs(s.a_plus) * math.exp(-delta_t / s.tau_plus) * (1.0 - x) ** s.p
    else:
        dg = -abs(s.a_minus) * math.exp(-abs(delta_t) / s.tau_minus) * x**s.p
    return min(max(g + dg, 0.0), s.g_max) - g


def lif_vector(p: LifParams, dt: float) -> np.ndarray:
    return np.array([math.exp(-dt * p.g / p.c), p.g, p.v_t, p.v_r, round(p.tau_ref / dt)], dtype=float)


def write_params(cfg: ExperimentConfig, side: str) -> WritePulseParams:
    tau = cfg.stdp.tau_plus if side == "pre" else cfg.stdp.tau_minus
    w = cfg.write
    return WritePulseParams(w.amplitude, w.t_w, w.tail_scale * tau, w.smooth_onset)


def write_vector(cfg: ExperimentConfig, dt: float, writes: bool = True) -> np.ndarray:
    pre = write_params(cfg, "pre")
    post = write_params(cfg, "post")
    return np.array(
        [pre.amplitude, pre.t_w, pre.tau_tail, post.tau_tail, float(pre.smooth_onset),
         float(writes), round(cfg.write.t_offset / dt)],
        dtype=float,
    )


def device_vector(cfg: ExperimentConfig, model: str, rates: tuple[float, float] | None = None,
                  p_sat: float | None = None, v_ref: float | None = None) -> np.ndarray:
    """Pack device parameters for the kernels. ``rates`` are (SET, RESET) pump
    rates in state units per volt-second."""
    if model == "hfo2":
        h = cfg.hfo2
        set_r, reset_r = rates if rates is not None else (h.b / h.c_state, h.gain_reset / h.c_state)
        ps = h.p_sat if p_sat is None else p_sat
        return np.array([1, set_r, reset_r, ps, h.vc_min, h.vc_max, cfg.stdp.g_max, 0.5, -0.5,
                         h.area_scale, h.g1, h.g2, h.v_pole, 0.3], dtype=float)
    d = cfg.ideal
    set_r, reset_r = rates if rates is not None else (d.b / d.c_state, d.gain_reset / d.c_state)
    ps = d.p_sat if p_sat is None else p_sat
    vr = cfg.quadratic.v_ref if v_ref is None else v_ref
    code = 2 if model == "quadratic" else 0
    return np.array([code, set_r, reset_r, ps, 0.0, 1.0, d.g_max, d.v_tp, d.v_tn,
                     1.0, 0.0, 0.0, 0.0, vr], dtype=float)


@lru_cache(maxsize=16)
def pair_overdrive_table(pre: WritePulseParams, post: WritePulseParams, dt: float, n_lag: int,
                         thetas: tuple[float, ...], resolution: float = 2e-6) -> np.ndarray:
    """Pump integrals of overdrive for isolated pulse pairs.

    ``table[0, k, t]``: pre pulse then post pulse ``k*dt`` later, integral of
    ``max(-(w_pre - w_post) - theta, 0)`` (SET). ``table[1, k, t]``: post first,
    pre ``k*dt`` later, integral of ``max(w_pre - w_post - theta, 0)`` (RESET).
    """
    th = np.asarray(thetas)[:, None]
    if th.min() < max(pre.amplitude, post.amplitude):
        raise ValueError("thresholds below the pulse amplitude are not supported")
    out = np.zeros((2, n_lag, len(thetas)))
    t_w = max(pre.t_w, post.t_w)
    for k in range(n_lag):
        lag = k * dt
        # once the first pulse is in its tail, only the second pulse's positive
        # lobe can push the pair beyond a threshold of at least one amplitude
        t = np.arange(lag if lag >= t_w else 0.0, lag + (0.5 if lag >= t_w else 1.0) * t_w, resolution)
        # SET: post starts at lag
        v = write_pulse(t, pre) - write_pulse(t - lag, post)
        out[0, k] = np.clip(-v - th, 0.0, None).sum(axis=1) * resolution
        # RESET: pre starts at lag
        v = write_pulse(t - lag, pre) - write_pulse(t, post)
        out[1, k] = np.clip(v - th, 0.0, None).sum(axis=1) * resolution
    return out


@lru_cache(maxsize=16)
def g_read_table(q: QuadraticParams, a: float, v_lim: float = 1.5, dv: float = 1e-3):
    grid = np.arange(-v_lim, v_lim + 0.5 * dv, dv)
    return grid, g_read(q, grid, a)


@dataclass
class SpikeLog:
    """Spikes of one run segment: ``steps``, ``kinds`` (0 input, 1 output), ``index``."""

    steps: np.ndarray
    kinds: np.ndarray
    index: np.ndarray
    dt: float

    @classmethod
    def from_buffer(cls, buf: np.ndarray, count: int, dt: float) -> "SpikeLog":
        if count > buf.shape[0]:
            raise OverflowError("spike buffer overflow")
        b = buf[:count]
        return cls(b[:, 0].copy(), b[:, 1].copy(), b[:, 2].copy(), dt)

    def layer(self, kind: int) -> tuple[np.ndarray, np.ndarray]:
        sel = self.kinds == kind
        return self.index[sel], self.steps[sel] * self.dt

    def counts(self, kind: int, size: int) -> np.ndarray:
        idx, _ = self.layer(kind)
        return np.bincount(idx, minlength=size)

    def first_times(self, kind: int, size: int) -> np.ndarray:
        out = np.full(size, np.inf)
        idx, t = self.layer(kind)
        for i, ti in zip(idx[::-1], t[::-1]):
            out[i] = ti
        return out

    def to_csv(self, path, kind: int | None = None) -> None:
        sel = np.ones(len(self.steps), bool) if kind is None else self.kinds == kind
        data = np.column_stack([self.index[sel], self.steps[sel] * self.dt])
        np.savetxt(path, data, delimiter=",", header="neuron_id,time_s", comments="", fmt=["%d", "%.9g"])


class RefNetwork:
    """m x n reference network with resumable state.

    ``mode`` selects the read model (see module docstring). For ``eq7``,
    ``read_amplitude`` sets A.
    """

    def __init__(self, m: int, n: int, cfg: ExperimentConfig = ExperimentConfig(), mode: str = "ideal",
                 read_amplitude: float | None = None, pump_rates: tuple[float, float] | None = None,
                 backend: str | None = None):
        if mode not in MODES:
            raise ValueError(f"unknown reference mode {mode!r}")
        self.m, self.n, self.cfg, self.mode = m, n, cfg, mode
        self.k = _backend.get_kernels(backend)
        self.dt = dt = cfg.reference.dt
        self.step_index = 0
        self.w = np.zeros((m, n))
        self.vc = np.zeros((m, n))
        if mode == "hfo2" and pump_rates is None and cfg.circuit.calibrate_gains:
            from .crossbar import calibrate_write_gains  # circular at module level

            pump_rates = calibrate_write_gains(cfg, "hfo2")
        self.dev = device_vector(cfg, "hfo2" if mode == "hfo2" else "ideal", rates=pump_rates)
        self.lif_in = lif_vector(cfg.lif_input, dt)
        self.lif_out = lif_vector(cfg.lif_output, dt)
        a = cfg.alpha
        self.ap = np.array([math.exp(-dt / a.tau1), math.exp(-dt / a.tau2), a.v0])
        s = cfg.stdp
        self.sp = np.array([abs(s.a_plus), abs(s.a_minus), s.tau_plus, s.tau_minus, s.p, s.g_max])
        self.wp = write_vector(cfg, dt)
        if mode == "hfo2":
            thetas = tuple(np.round(np.arange(0.5, 1.3001, 0.005), 6))
            n_lag = int(round(5 * cfg.write.tail_scale * max(s.tau_plus, s.tau_minus) / dt)) + 1
            self.ftab = pair_overdrive_table(write_params(cfg, "pre"), write_params(cfg, "post"),
                                             dt, n_lag, thetas)
            self.ftp = np.array([thetas[0], thetas[1] - thetas[0]])
        else:
            self.ftab = np.zeros((2, 1, 1))
            self.ftp = np.array([0.0, 1.0])
        if mode == "eq7":
            if read_amplitude is None:
                raise ValueError("eq7 mode needs a read amplitude")
            q = QuadraticParams(v_ref=cfg.quadratic.v_ref)
            grid, tab = g_read_table(q, float(read_amplitude))
            self.gtab = np.ascontiguousarray(tab)
            self.gp = np.array([grid[0], grid[1] - grid[0], read_amplitude, q.v_ref])
        else:
            self.gtab = np.zeros(2)
            self.gp = np.array([0.0, 1.0, 0.0, 1.0])
        self.read_amplitude = read_amplitude
        self.plastic = True
        self.i_in = np.zeros(m)
        self.i_teach = np.zeros(n)
        self.reset_transients()

    # state ---------------------------------------------------------------
    def reset_transients(self) -> None:
        """Reset neurons, alpha filters, spike history and write generators.
        Weights persist."""
        m, n = self.m, self.n
        self.v_in = np.zeros(m)
        self.in_ref = np.full(m, NEVER, dtype=np.int64)
        self.v_out = np.zeros(n)
        self.out_ref = np.full(n, NEVER, dtype=np.int64)
        self.s1 = np.zeros(n)
        self.s2 = np.zeros(n)
        self.last_pre = np.full(m, NEVER, dtype=np.int64)
        self.last_post = np.full(n, NEVER, dtype=np.int64)
        qcap = int(self.wp[6]) + 4
        self.gen = np.zeros((m + n, 2))
        self.gen_i = np.zeros((m + n, 4), dtype=np.int64)
        self.queue = np.zeros((m + n, qcap), dtype=np.int64)

    @property
    def time(self) -> float:
        return self.step_index * self.dt

    def weights(self) -> np.ndarray:
        return self.w.copy()

    def set_weights(self, g: np.ndarray) -> None:
        g = np.asarray(g, dtype=float)
        if g.shape != (self.m, self.n):
            raise ValueError(f"weights must have shape {(self.m, self.n)}")
        if self.mode == "hfo2":
            h = self.cfg.hfo2
            self.vc = np.array([[h.v_c_of(x) for x in row] for row in g])
            self.w = np.asarray(h.g_of(self.vc), dtype=float).reshape(self.m, self.n)
        else:
            self.w = np.clip(g, 0.0, self.cfg.stdp.g_max).copy()

    # running -------------------------------------------------------------
    def run(self, n_steps: int, input_currents=None, teach=None, plastic: bool | None = None,
            forced: np.ndarray | None = None, out_lif: bool = True,
            vbias: list | None = None) -> SpikeLog:
        """Advance ``n_steps`` with constant input and teacher currents.

        ``forced`` is an int array of [step, kind, index] rows (absolute steps).
        ``vbias`` (eq7 mode) collects the bias voltage seen at every read.
        """
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
        spikes = np.zeros((_spike_cap(n_steps, self.m, self.n, self.lif_in), 3), dtype=np.int64)
        nv = self.m * self.n * (n_steps // max(int(self.lif_in[4]), 1) + len(ev) + 2) if self.mode == "eq7" else 1
        vb = np.zeros(nv)
        counters = np.zeros(3, dtype=np.int64)
        flags = np.array([float(self.plastic), float(out_lif)])
        self.k.ref_run(n_steps, self.step_index, self.dt, self.w, self.vc, self.dev,
                       MODES.index(self.mode), self.v_in, self.in_ref, self.i_in, self.lif_in,
                       self.v_out, self.out_ref, self.i_teach, self.lif_out, self.s1, self.s2,
                       self.ap, self.last_pre, self.last_post, self.sp, flags, self.ftab, self.ftp,
                       self.gen, self.gen_i, self.queue, self.wp, self.gtab, self.gp, ev, spikes,
                       vb, counters)
        self.step_index += n_steps
        if vbias is not None and self.mode == "eq7":
            vbias.extend(vb[: min(counters[1], nv)].tolist())
        return SpikeLog.from_buffer(spikes, int(counters[0]), self.dt)

    def alpha_current(self) -> np.ndarray:
        return self.cfg.alpha.v0 * (self.s2 - self.s1)


def ref_step(net: RefNetwork, input_currents, dt: float | None = None) -> SpikeLog:
    """One reference tick (the network's own dt)."""
    if dt is not None and not math.isclose(dt, net.dt):
        raise ValueError("dt must match the network's configured dt")
    return net.run(1, input_currents)


def eq7_factor(net: RefNetwork, i: int, j: int) -> float:
    """Read scaling for synapse (i, j) at the network's current time."""
    if net.mode != "eq7":
        return 1.0
    vb = net.gen[i, 1] - net.gen[net.m + j, 1]
    q = QuadraticParams(v_ref=net.cfg.quadratic.v_ref)
    return float(g_read(q, vb, net.read_amplitude))


def _events(forced) -> np.ndarray:
    if forced is None or len(forced) == 0:
        return np.zeros((0, 3), dtype=np.int64)
    ev = np.asarray(forced, dtype=np.int64).reshape(-1, 3)
    order = np.lexsort((ev[:, 2], ev[:, 1], ev[:, 0]))
    return np.ascontiguousarray(ev[order])


def _spike_cap(n_steps: int, m: int, n: int, lif_in: np.ndarray) -> int:
    # inputs fire at most once per refractory period; outputs at most once per step
    per_in = n_steps // max(int(lif_in[4]), 1) + 2
    return m * per_in + n * (n_steps + 1) + 16
