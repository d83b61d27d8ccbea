"""SVG renderings of CLI results. Plots are derived artifacts: any failure
(including a missing matplotlib) degrades to a warning and the CSVs stand."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _save(draw, path: Path) -> bool:
    try:
        plt = _pyplot()
        fig, ax = plt.subplots(figsize=(5, 3.5))
        draw(ax)
        fig.tight_layout()
        fig.savefig(path, format="svg")
        plt.close(fig)
        return True
    except Exception as exc:  # plotting must never fail a run
        log.warning("plot %s skipped: %s", Path(path).name, exc)
        return False


def accuracy(path: Path, curves: dict[str, list[float]]) -> bool:
    def draw(ax):
        for name, acc in curves.items():
            ax.plot(np.arange(len(acc)), acc, marker="o", ms=3, label=name)
        ax.set_xlabel("epoch")
        ax.set_ylabel("accuracy (%)")
        ax.set_ylim(0, 100)
        ax.legend()

    return _save(draw, path)


def weights(path: Path, w: np.ndarray, g_max: float) -> bool:
    def draw(ax):
        im = ax.imshow(np.asarray(w).T, cmap="gray", vmin=0, vmax=g_max, aspect="auto")
        ax.set_xlabel("input neuron")
        ax.set_ylabel("output neuron")
        ax.figure.colorbar(im, ax=ax, label="conductance")

    return _save(draw, path)


def histogram(path: Path, edges: np.ndarray, counts: np.ndarray, xlabel: str) -> bool:
    def draw(ax):
        ax.bar(edges[:-1], counts, width=np.diff(edges), align="edge", edgecolor="k")
        ax.set_xlabel(xlabel)
        ax.set_ylabel("count")

    return _save(draw, path)


def stdp(path: Path, dt_s: np.ndarray, dg_circuit: np.ndarray, dg_rule: np.ndarray) -> bool:
    def draw(ax):
        ax.plot(1e3 * dt_s, dg_rule, "k-", label="rule")
        ax.plot(1e3 * dt_s, dg_circuit, "o", label="circuit")
        ax.axhline(0, color="0.7", lw=0.5)
        ax.set_xlabel("delta t (ms)")
        ax.set_ylabel("delta G")
        ax.legend()

    return _save(draw, path)


def bode(path: Path, omega: np.ndarray, analytic: np.ndarray, simulated: np.ndarray) -> bool:
    def draw(ax):
        keep = omega > 0
        ax.loglog(omega[keep], analytic[keep], "k-", label="analytic")
        ax.loglog(omega[keep], np.maximum(simulated[keep], 1e-300), "r.", label="simulated")
        ax.set_xlabel("omega (rad/s)")
        ax.set_ylabel("|H|")
        ax.legend()

    return _save(draw, path)
