"""Iris data, population coding, supervised STDP training and evaluation."""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Protocol

import numpy as np

from .config import EncoderParams, ExperimentConfig

LABELS = {"iris-setosa": 0, "iris-versicolor": 1, "iris-virginica": 2,
          "setosa": 0, "versicolor": 1, "virginica": 2}


@dataclass(frozen=True)
class IrisSample:
    attributes: tuple[float, float, float, float]
    label: int


def _parse_label(raw: str, line: int) -> int:
    s = raw.strip().lower()
    if s in LABELS:
        return LABELS[s]
    if s in ("0", "1", "2"):
        return int(s)
    raise ValueError(f"line {line}: unknown label {raw!r}")


def load_and_normalize(path: str | Path | None = None) -> list[IrisSample]:
    """Read Iris rows (4 numbers + label) and min-max normalise each attribute
    over the whole file. ``None`` loads the bundled copy."""
    if path is None:
        text = resources.files("fdmsnn").joinpath("data/iris.csv").read_text()
    else:
        text = Path(path).read_text()
    rows, labels = [], []
    for ln, rec in enumerate(csv.reader(text.splitlines()), start=1):
        if not rec or all(not c.strip() for c in rec):
            continue
        if len(rec) != 5:
            raise ValueError(f"line {ln}: expected 5 fields, got {len(rec)}")
        try:
            vals = [float(c) for c in rec[:4]]
        except ValueError:
            if ln == 1:
                continue  # header
            raise ValueError(f"line {ln}: non-numeric attribute in {rec!r}") from None
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"line {ln}: non-finite attribute")
        rows.append(vals)
        labels.append(_parse_label(rec[4], ln))
    if not rows:
        raise ValueError("no samples found")
    x = np.array(rows)
    lo, hi = x.min(axis=0), x.max(axis=0)
    if np.any(hi == lo):
        raise ValueError("attribute with zero range cannot be normalised")
    xn = (x - lo) / (hi - lo)
    return [IrisSample(tuple(r), lab) for r, lab in zip(xn.tolist(), labels)]


def as_arrays(samples: list[IrisSample]) -> tuple[np.ndarray, np.ndarray]:
    return np.array([s.attributes for s in samples]), np.array([s.label for s in samples])


def encode(sample: IrisSample | np.ndarray, p: EncoderParams = EncoderParams()) -> np.ndarray:
    """Gaussian receptive-field currents, attribute-major (4 attributes x M fields)."""
    x = np.asarray(sample.attributes if isinstance(sample, IrisSample) else sample, dtype=float)
    mu = np.array(p.centers)
    return (p.i_max * np.exp(-((x[:, None] - mu[None, :]) ** 2) / (2 * p.sigma**2))).ravel()


def stratified_split(labels: np.ndarray, per_class: int, rng: np.random.Generator) -> np.ndarray:
    """Training indices, ``per_class`` per label, in a seeded random order."""
    idx = []
    for c in np.unique(labels):
        pool = np.flatnonzero(labels == c)
        if len(pool) < per_class:
            raise ValueError(f"class {c} has only {len(pool)} samples")
        idx.append(rng.choice(pool, per_class, replace=False))
    out = np.concatenate(idx)
    rng.shuffle(out)
    return out


def decide(counts: np.ndarray, first_times: np.ndarray) -> int:
    """Spike-count argmax; ties go to the earliest first spike, then the lowest index."""
    best = 0
    for j in range(1, len(counts)):
        if counts[j] > counts[best] or (counts[j] == counts[best] and first_times[j] < first_times[best]):
            best = j
    return best


class Engine(Protocol):
    m: int
    n: int
    dt: float

    def reset_transients(self) -> None: ...
    def weights(self) -> np.ndarray: ...
    def set_weights(self, g: np.ndarray) -> None: ...
    def run(self, n_steps: int, input_currents=None, teach=None, plastic=None, **kw): ...


def present(engine: Engine, currents: np.ndarray, teach: np.ndarray, plastic: bool,
            duration: float, **kw):
    engine.reset_transients()
    n_steps = int(round(duration / engine.dt))
    return engine.run(n_steps, currents, teach, plastic=plastic, **kw)


def classify(engine: Engine, sample: IrisSample | np.ndarray, cfg: ExperimentConfig = ExperimentConfig(),
             **kw) -> int:
    log = present(engine, encode(sample, cfg.encoder), np.zeros(engine.n), False,
                  cfg.training.presentation, **kw)
    return decide(log.counts(1, engine.n), log.first_times(1, engine.n))


def teacher_currents(label: int, n: int, cfg: ExperimentConfig) -> np.ndarray:
    i_th = cfg.lif_output.i_threshold
    t = np.full(n, cfg.training.teacher_off * i_th)
    t[label] = cfg.training.teacher_on * i_th
    return t


def weights_hash(w: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(w).tobytes()).hexdigest()[:16]


@dataclass
class TrainReport:
    accuracy: list[float]
    train_counts: list[list[float]]
    weights_initial: np.ndarray
    weights_final: np.ndarray
    weights_history: list[np.ndarray]
    confusion: np.ndarray
    seed: int
    config: dict
    engine: str
    device: str
    extra: dict = field(default_factory=dict)

    @property
    def initial_accuracy(self) -> float:
        return self.accuracy[0]

    @property
    def peak_accuracy(self) -> float:
        tail = self.accuracy[1:] if len(self.accuracy) > 1 else self.accuracy
        return max(tail)

    def final_std(self, last: int = 10) -> float:
        tail = self.accuracy[1:][-last:]
        return float(np.std(tail)) if tail else 0.0

    def setosa_recall(self) -> float:
        row = self.confusion[0]
        return float(row[0] / row.sum()) if row.sum() else 0.0

    def summary(self) -> dict:
        return {
            "engine": self.engine,
            "device": self.device,
            "seed": self.seed,
            "epochs": len(self.accuracy) - 1,
            "initial_accuracy": self.initial_accuracy,
            "peak_accuracy": self.peak_accuracy,
            "final_accuracy": self.accuracy[-1],
            "final10_std": self.final_std(),
            "accuracy": self.accuracy,
            "mean_output_spikes_per_epoch": self.train_counts,
            "confusion_final": self.confusion.tolist(),
            "setosa_recall": self.setosa_recall(),
            **self.extra,
            "config": self.config,
        }


def evaluate(engine: Engine, x: np.ndarray, y: np.ndarray, cfg: ExperimentConfig, **kw):
    """Accuracy (percent) and confusion matrix with plasticity frozen."""
    conf = np.zeros((engine.n, engine.n), dtype=int)
    for xi, yi in zip(x, y):
        conf[yi, classify(engine, xi, cfg, **kw)] += 1
    return 100.0 * np.trace(conf) / len(y), conf


def initial_weights(cfg: ExperimentConfig, m: int, n: int, rng: np.random.Generator,
                    device: str = "ideal") -> np.ndarray:
    """Uniform draws in [init_lo, init_hi] as fractions of the device's
    programmable conductance span."""
    t = cfg.training
    g_lo = cfg.hfo2.g_span[0] if device == "hfo2" else 0.0
    return g_lo + rng.uniform(t.init_lo, t.init_hi, (m, n)) * (cfg.stdp.g_max - g_lo)


def train(engine: Engine, samples: list[IrisSample], epochs: int, seed: int,
          cfg: ExperimentConfig = ExperimentConfig(), engine_name: str = "reference",
          device: str = "ideal", progress=None, run_kwargs: dict | None = None) -> TrainReport:
    """Supervised STDP training with a teacher current, evaluating all samples
    after every epoch (epoch 0 is the untrained network)."""
    if epochs < 0:
        raise ValueError("epochs must be non-negative")
    kw = run_kwargs or {}
    x, y = as_arrays(samples)
    rng = np.random.default_rng(seed)
    tr = stratified_split(y, cfg.training.train_per_class, rng)
    engine.set_weights(initial_weights(cfg, engine.m, engine.n, rng, device))
    w0 = engine.weights()
    acc, conf = evaluate(engine, x, y, cfg, **kw)
    accs, counts, hist = [acc], [], [w0]
    for ep in range(epochs):
        tot = np.zeros(engine.n)
        for k in tr:
            log = present(engine, encode(x[k], cfg.encoder), teacher_currents(y[k], engine.n, cfg),
                          True, cfg.training.presentation, **kw)
            tot += log.counts(1, engine.n)
        acc, conf = evaluate(engine, x, y, cfg, **kw)
        accs.append(acc)
        counts.append((tot / len(tr)).tolist())
        hist.append(engine.weights())
        if progress is not None:
            progress(ep + 1, acc)
    return TrainReport(accs, counts, w0, engine.weights(), hist, conf, seed, cfg.to_dict(),
                       engine_name, device)
