"""Compiled vs pure-Python kernels on the two simulation loops.

    python3 benchmarks/bench_kernels.py [--repeat N]

Both backends run the same workload (a 16x3 network driven by constant
currents for one 100 ms presentation) and must end in identical states.
"""

import argparse
import time

import numpy as np

from fdmsnn import _backend
from fdmsnn.config import ExperimentConfig
from fdmsnn.crossbar import CircuitNetwork
from fdmsnn.reference import RefNetwork

CFG = ExperimentConfig()
INPUTS = np.linspace(2e-9, 4e-9, 16)
TEACH = np.array([8e-9, -8e-9, -8e-9])


def circuit(backend):
    net = CircuitNetwork(16, 3, CFG, backend=backend)
    net.set_weights(np.full((16, 3), 150.0))
    t0 = time.perf_counter()
    net.run(int(round(0.1 / net.dt)), INPUTS, TEACH, plastic=True)
    return time.perf_counter() - t0, net.vc.copy()


def reference(backend):
    net = RefNetwork(16, 3, CFG, backend=backend)
    net.set_weights(np.full((16, 3), 150.0))
    t0 = time.perf_counter()
    net.run(int(round(0.1 / net.dt)), INPUTS, TEACH, plastic=True)
    return time.perf_counter() - t0, net.weights()


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _backend.BACKEND != "cython":
        raise SystemExit("compiled kernels are not built; run `pip install -e . --no-build-isolation`")
    circuit("cython")  # calibration is cached after the first construction
    print(f"{'loop':<10} {'cython (s)':>12} {'python (s)':>12} {'speed-up':>10}")
    for name, fn in (("circuit", circuit), ("reference", reference)):
        best = {}
        for backend in ("cython", "python"):
            runs = [fn(backend) for _ in range(args.repeat)]
            best[backend] = min(r[0] for r in runs)
            state = runs[0][1]
            if backend == "python" and not np.array_equal(state, ref_state):
                raise SystemExit(f"{name}: backends disagree")
            ref_state = state
        print(f"{name:<10} {best['cython']:>12.4f} {best['python']:>12.4f} {best['python'] / best['cython']:>9.0f}x")


if __name__ == "__main__":
    main()
