"""Compare the numba and numpy backends on simulation and map iteration.

Usage: python benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import time

import numpy as np

from synclab import simulator as sim
from synclab import stability as stab
from synclab.network import generate_random
from synclab.potential import IFPotential


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    U = IFPotential(4.0)
    irregular = generate_random(400, 0.2, -16.0, 1)
    small = generate_random(64, 0.25, -0.2, 1)
    delta = np.random.default_rng(0).uniform(0, 0.05, 64)
    cases = {
        "simulate N=400, 20 time units": lambda b: sim.run(
            sim.random_state(400, 0.035, 1), irregular, U, 20.0, backend=b),
        "exact map N=64, 200 periods": lambda b: stab.contraction_trace(
            small, U, 0.15, delta, 200, mode="exact", backend=b),
        "linear map N=64, 200 periods": lambda b: stab.contraction_trace(
            small, U, 0.15, delta, 200, mode="linear", backend=b),
    }
    print(f"{'case':34s} {'numba [s]':>10s} {'numpy [s]':>10s} {'speedup':>8s}")
    for name, fn in cases.items():
        fn("numba")     # compile outside the timing
        t_nb = best_of(lambda: fn("numba"), args.repeat)
        t_np = best_of(lambda: fn("numpy"), args.repeat)
        print(f"{name:34s} {t_nb:10.4f} {t_np:10.4f} {t_np / t_nb:8.1f}")


if __name__ == "__main__":
    main()
