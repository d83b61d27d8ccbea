"""Behavioural RRAM synapse models: ideal threshold device, HfO2 device with
state-dependent thresholds, and a square-law device read by a sinusoid."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

MODELS = ("ideal", "hfo2", "quadratic")


@dataclass(frozen=True)
class IdealRramParams:
    """Ideal device: G = g_max*V_C with V_C in [0, 1].

    ``b`` is the SET (conductance-increasing) pump gain, ``b_reset`` the RESET
    gain (defaults to ``b``). ``p_sat`` applies a soft bound to the pump rate,
    ``(1 - V_C)**p_sat`` for SET and ``V_C**p_sat`` for RESET; 0 is a pure
    linear pump.
    """

    c_state: float = 1.0
    v_tp: float = 0.5
    v_tn: float = -0.5
    g_max: float = 700.0
    b: float = 1.94e4
    b_reset: float | None = None
    p_sat: float = 0.0

    model = "ideal"

    def __post_init__(self):
        if not self.v_tn < 0 < self.v_tp:
            raise ValueError("need V_TN < 0 < V_TP")
        if self.g_max <= 0 or self.b <= 0 or self.c_state <= 0:
            raise ValueError("g_max, b and c_state must be positive")
        if self.b_reset is not None and self.b_reset <= 0:
            raise ValueError("b_reset must be positive")
        if self.p_sat < 0:
            raise ValueError("p_sat must be non-negative")

    @property
    def gain_reset(self) -> float:
        return self.b if self.b_reset is None else self.b_reset

    @property
    def vc_range(self) -> tuple[float, float]:
        return 0.0, 1.0


@dataclass(frozen=True)
class Hfo2Params:
    """HfO2 device. ``area_scale`` multiplies the fitted conductance law so the
    top of the state range can be matched to a network's G_max."""

    c_state: float = 1.0
    b: float = 1.94e4
    b_reset: float | None = None
    p_sat: float = 0.0
    vc_min: float = -1.2
    vc_max: float = -0.52
    area_scale: float = 1.0
    g1: float = 31.5
    g2: float = 0.127
    v_pole: float = -0.48

    model = "hfo2"

    def __post_init__(self):
        if not self.vc_min < self.vc_max:
            raise ValueError("vc_min must be below vc_max")
        for v in (self.vc_min, self.vc_max):
            if v == 0.0 or v == self.v_pole:
                raise ValueError("HfO2 state range touches a singularity")
        if (self.vc_min < self.v_pole < self.vc_max) or (self.vc_min < 0.0 < self.vc_max):
            raise ValueError("HfO2 state range straddles a singularity")
        if self.b <= 0 or self.c_state <= 0 or self.area_scale <= 0:
            raise ValueError("b, c_state and area_scale must be positive")
        if self.b_reset is not None and self.b_reset <= 0:
            raise ValueError("b_reset must be positive")

    @property
    def gain_reset(self) -> float:
        return self.b if self.b_reset is None else self.b_reset

    @property
    def vc_range(self) -> tuple[float, float]:
        return self.vc_min, self.vc_max

    def g_of(self, v_c):
        v_c = np.asarray(v_c, dtype=float)
        if np.any(v_c == 0.0) or np.any(v_c == self.v_pole):
            raise ValueError("HfO2 conductance undefined at V_C = 0 or V_C = -0.48")
        g = self.g1 / np.abs(v_c) + self.g2 / (np.abs(v_c) * (v_c - self.v_pole) ** 2)
        g = self.area_scale * g
        return g if g.ndim else float(g)

    @property
    def g_span(self) -> tuple[float, float]:
        return self.g_of(self.vc_min), self.g_of(self.vc_max)

    @property
    def mean_slope(self) -> float:
        """Average dG/dV_C over the state range."""
        lo, hi = self.g_span
        return (hi - lo) / (self.vc_max - self.vc_min)

    def v_c_of(self, g):
        """Invert the conductance law on the state range (G is increasing there)."""
        from scipy.optimize import brentq

        lo, hi = self.g_span
        g = float(np.clip(g, lo, hi))
        if g <= lo:
            return self.vc_min
        if g >= hi:
            return self.vc_max
        return brentq(lambda v: self.g_of(v) - g, self.vc_min, self.vc_max, xtol=1e-14)


@dataclass(frozen=True)
class QuadraticParams:
    """Square-law device I = k*V*|V|. Switching reuses the ideal threshold pump."""

    k: float = 1.0
    v_ref: float = 0.3
    switching: IdealRramParams = IdealRramParams()

    model = "quadratic"

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError("k must be positive")
        if self.v_ref <= 0:
            raise ValueError("v_ref must be positive")

    @property
    def vc_range(self) -> tuple[float, float]:
        return 0.0, 1.0


DeviceParams = Union[IdealRramParams, Hfo2Params, QuadraticParams]


@dataclass
class DeviceState:
    v_c: float
    model: str = "ideal"

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown device model {self.model!r}")


def _check(state: DeviceState, p: DeviceParams) -> None:
    if state.model != p.model:
        raise ValueError(f"state is {state.model!r} but params are {p.model!r}")


def conductance(state: DeviceState, p: DeviceParams, v_bias: float = 0.0) -> float:
    """Device conductance. For the quadratic device this is the small-signal
    conductance at ``v_bias``."""
    _check(state, p)
    if p.model == "ideal":
        return p.g_max * state.v_c
    if p.model == "hfo2":
        return p.g_of(state.v_c)
    return 2.0 * p.k * abs(v_bias)


def thresholds(state: DeviceState, p: DeviceParams) -> tuple[float, float]:
    _check(state, p)
    if p.model == "ideal":
        return p.v_tp, p.v_tn
    if p.model == "hfo2":
        return 0.5 - 1e-2 * (state.v_c + 0.5), state.v_c
    return p.switching.v_tp, p.switching.v_tn


def state_update(state: DeviceState, v_a: float, dt: float, p: DeviceParams) -> DeviceState:
    """Threshold charge pump over ``dt``; over-positive bias lowers conductance."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    v_tp, v_tn = thresholds(state, p)
    q = p.switching if p.model == "quadratic" else p
    lo, hi = q.vc_range
    x = (state.v_c - lo) / (hi - lo)
    if v_a > v_tp:
        rate = -(q.gain_reset / q.c_state) * (v_a - v_tp) * max(x, 0.0) ** q.p_sat
    elif v_a < v_tn:
        rate = -(q.b / q.c_state) * (v_a - v_tn) * max(1.0 - x, 0.0) ** q.p_sat
    else:
        return DeviceState(state.v_c, state.model)
    return DeviceState(min(max(state.v_c + rate * dt, lo), hi), state.model)


def dc_current(state: DeviceState, v: float, p: DeviceParams) -> float:
    _check(state, p)
    if p.model == "quadratic":
        return p.k * v * abs(v)
    return conductance(state, p) * v


def g_read(q: QuadraticParams, v_bias, a: float, n_points: int = 2048):
    """Fundamental read response of the square-law device, normalised by the
    iso-voltage small-signal conductance ``2*k*v_ref``.

    The sinusoid ``v_bias + a*sin(theta)`` is sampled at ``n_points`` and the
    first sine harmonic of the current extracted by the rectangle rule (exact
    for trigonometric polynomials, spectrally accurate otherwise).
    """
    if a <= 0:
        raise ValueError("read amplitude must be positive")
    v = np.asarray(v_bias, dtype=float)
    theta = 2 * math.pi * np.arange(n_points) / n_points
    s = np.sin(theta)
    u = v[..., None] + a * s
    i = q.k * u * np.abs(u)
    b1 = (2.0 / n_points) * np.sum(i * s, axis=-1)
    out = b1 / (a * 2.0 * q.k * q.v_ref)
    return out if out.ndim else float(out)


def g_read_zero_bias(q: QuadraticParams, a: float) -> float:
    return 4.0 * a / (3.0 * math.pi * q.v_ref)
