"""Benchmark the walk kernels: numba JIT versus the pure-numpy fallback.

Run: python benchmarks/bench_kernels.py

Times the hot segment kernel on the three reference workloads (static
corral, single-shot herd, disorder-sweep scale) plus the keyed noise
generator, and prints the speedup.  Both backends are exercised in one
process regardless of CORRALWALK_BACKEND.
"""

from __future__ import annotations

import time

import numpy as np

from corralwalk import kernels
from corralwalk.engine import CoinField
from corralwalk.state import BlochSpin, GaussianSpec, Lattice, gaussian_state

CASES = [
    ("corral 319 sites x 574 steps", 159, 101, 574),
    ("herd 1627 sites x 994 steps", 813, 250, 994),
    ("sweep 2235 sites x 1424 steps", 1117, 250, 1424),
]


def _timeit(fn, n_runs=3):
    best = float("inf")
    for _ in range(n_runs):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_segments():
    print("segment kernel (coin + shift per site per step)")
    for label, half, wall, steps in CASES:
        lat = Lattice(-half, half)
        st = gaussian_state(GaussianSpec(10.0, 0), BlochSpin(0.0), lat)
        cf = CoinField.with_walls(lat, [-wall, wall])
        args = (st.up, st.down, *cf.entries(), steps)

        runs = {}
        if kernels.HAS_NUMBA:
            kernels.run_segment_numba(*args[:-1], 1)  # compile outside timing
            runs["numba"] = _timeit(lambda: kernels.run_segment_numba(*args))
        runs["numpy"] = _timeit(lambda: kernels.run_segment_numpy(*args))

        line = f"  {label:34s}"
        for name, sec in runs.items():
            line += f" {name}: {sec * 1e3:8.2f} ms"
        if "numba" in runs:
            line += f"  speedup: {runs['numpy'] / runs['numba']:.1f}x"
        print(line)


def bench_noise():
    print("keyed coin-noise generator (2235 sites, 10 epochs)")
    n = 2235
    runs = {}

    def drive(fn):
        q = np.full(n, 0.5)
        th = np.zeros(n)
        ph = np.zeros(n)
        for epoch in range(1, 11):
            fn(q, th, ph, 0.002, False, 12345, 0, epoch, True, True)

    if kernels.HAS_NUMBA:
        drive(kernels.perturb_params_numba)  # compile
        runs["numba"] = _timeit(lambda: drive(kernels.perturb_params_numba))
    runs["numpy"] = _timeit(lambda: drive(kernels.perturb_params_numpy))
    line = "  per-realization noise            "
    for name, sec in runs.items():
        line += f" {name}: {sec * 1e3:8.2f} ms"
    if "numba" in runs:
        line += f"  speedup: {runs['numpy'] / runs['numba']:.1f}x"
    print(line)


def main():
    print(f"active backend: {kernels.BACKEND} (numba available: {kernels.HAS_NUMBA})")
    bench_segments()
    bench_noise()


if __name__ == "__main__":
    main()
