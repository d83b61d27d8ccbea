"""Selects the compiled kernels when available, else the pure-Python copy.

Set ``FDMSNN_BACKEND=python`` to force the fallback.

Kernel array layouts (all C-contiguous, float64 unless noted int64):

- ``dev``: [model(0 ideal, 1 hfo2, 2 quadratic), rate_set, rate_reset, p_sat,
  vc_lo, vc_hi, g_max, v_tp, v_tn, area_scale, g1, g2, v_pole, v_ref]
- ``lif_*``: [decay, G, V_T, V_R, n_ref (steps)]
- ``gen`` (rows+cols, 2): [value at last restart, current value];
  ``gen_i`` int (rows+cols, 4): [trigger step, active, queue head, queue count];
  ``queue`` int (rows+cols, capacity): pending trigger steps
- ``wp``: [amplitude, T_w, tau_row, tau_col, smooth_onset, writes_enabled, n_offset]
- ``rp``: [amplitude, period, n_duration, n_skip, n_gate_end, n_period];
  a read opens at the first zero phase of the global sinusoid after the spike
- ``fp``: [a, c, order, bypass]
- ``ap``: [decay1, decay2, v0, kappa, window length]
- ``racc`` (m, n, 3): per-read [G-hat, mean G, max write voltage] accumulators
- ``flags``: circuit [plastic, output LIF on, record reads, trace column];
  reference [plastic, output LIF on]
- ``ev`` int (k, 3): forced spikes [step, kind (0 pre, 1 post), index], sorted
- ``spikes`` int (cap, 3): same layout as ``ev``
- ``reads`` (cap, 6): [start step, row, col, G-hat, mean G, max write voltage]
- ``counters`` int: [n spikes, n reads or n v_bias samples, event pointer]
- ``sp``: [A+, A-, tau+, tau-, p, G_max]
- ``ftab`` (2, n_lag, n_theta): pair overdrive integrals, [0] SET, [1] RESET;
  ``ftp``: [theta0, dtheta]
- ``gtab``/``gp``: g_read table on a uniform bias grid, [v0, dv, A, v_ref]
"""

from __future__ import annotations

import os

from . import _pykernels

NEVER = _pykernels.NEVER

_forced = os.environ.get("FDMSNN_BACKEND", "").lower()
if _forced == "python":
    kernels = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        if _forced == "cython":
            raise
        kernels = _pykernels
        BACKEND = "python"


def get_kernels(name: str | None = None):
    """Kernel module by name ('cython' or 'python'); None gives the default."""
    if name is None:
        return kernels
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _kernels  # type: ignore[attr-defined]

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
