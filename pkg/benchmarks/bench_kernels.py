"""Time the compiled and pure-Python kernels on the workloads the package runs.

    python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import time

import numpy as np

from minnisens import kernels


def workloads():
    rng = np.random.default_rng(0)
    g = rng.uniform(-2, 2, 256 * 256)
    b = rng.uniform(-2, 2, 256 * 256)
    field = rng.normal(size=(256, 256)).cumsum(axis=0).cumsum(axis=1)
    return {
        "bias_points 65536": lambda k: k.bias_points(0.732, 0.376, 0.5, g, b),
        "grid_min_difference 2000^2": lambda k: k.grid_min_difference(0.019, 0.0, 1.0, 0.0, 1.0, 2000),
        "grid_min_ratio 2000^2": lambda k: k.grid_min_ratio(0.026, 1.0, 6.0, 1.0, 6.0, 2000),
        "marching_segments 256^2": lambda k: k.marching_segments(field, 0.0),
    }


def best_of(fn, mod, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(mod)
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    mods = {"python": kernels.backend("python")}
    try:
        mods["cython"] = kernels.backend("cython")
    except ImportError:
        print("compiled kernels not built; timing the python backend only")
    print(f"{'workload':30s}" + "".join(f"{n:>12s}" for n in mods) + ("     speedup" if len(mods) == 2 else ""))
    for name, fn in workloads().items():
        t = {n: best_of(fn, m, args.repeat) for n, m in mods.items()}
        row = f"{name:30s}" + "".join(f"{v * 1e3:10.2f}ms" for v in t.values())
        if len(t) == 2:
            row += f"{t['python'] / t['cython']:11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
