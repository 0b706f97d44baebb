"""Compare the compiled and numpy split-search kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--skip-forest]

Prints per-call timings of ``best_split`` for a range of node sizes and the
wall time of a small forest fit under each backend.
"""
from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from scaff.kernels import get_backend

FOREST_SNIPPET = """
import time
from scaff import BACKEND
from scaff.ensemble import ForestConfig, fit
from scaff.experiment import generate_synthetic
from scaff.tree import TreeConfig
ds = generate_synthetic(2000, 0.8, 0.8, seed=0)
t = time.perf_counter()
fit(ds, ForestConfig(n_trees={trees}, tree=TreeConfig(criterion="{criterion}"), seed=0))
print(BACKEND, time.perf_counter() - t)
"""


def time_call(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def bench_best_split(repeat: int) -> None:
    backends = {"python": get_backend("python")}
    try:
        backends["cython"] = get_backend("cython")
    except ImportError:
        print("compiled kernels not built; timing the numpy kernels only")
    rng = np.random.default_rng(0)
    print(f"{'kind':<12}{'n':>7}{'groups':>8}" + "".join(f"{b + ' (us)':>15}" for b in backends) + f"{'speedup':>10}")
    for kind, name, n_groups in ((0, "scaff", 1), (0, "scaff", 4), (2, "kamiran-sub", 1), (4, "faht", 1)):
        for n in (50, 500, 5000):
            m, bins = 9, 34
            X = rng.integers(0, bins, (n, m)).astype(np.int32)
            y = rng.integers(0, 2, n).astype(np.uint8)
            groups = rng.integers(0, 2, (n_groups, n)).astype(np.uint8)
            idx = rng.integers(0, n, n).astype(np.intp)
            feats = np.arange(3, dtype=np.intp)
            n_bins = np.full(m, bins, dtype=np.intp)
            theta = 0.5 if kind == 0 else 0.0
            times = {}
            for label, mod in backends.items():
                calls = max(1, 2000 // n)
                times[label] = time_call(
                    lambda: [mod.best_split(X, idx, feats, n_bins, y, groups, kind, theta, 1) for _ in range(calls)],
                    repeat,
                ) / calls
            row = f"{name:<12}{n:>7}{n_groups:>8}" + "".join(f"{times[b] * 1e6:>15.1f}" for b in backends)
            if "cython" in times:
                row += f"{times['python'] / times['cython']:>9.1f}x"
            print(row)


def bench_forest(trees: int) -> None:
    print(f"\nforest fit: n=2000, {trees} trees, depth 4, scaff:0.5")
    for pure in ("", "1"):
        env = dict(os.environ)
        env.pop("SCAFF_PURE_PYTHON", None)
        if pure:
            env["SCAFF_PURE_PYTHON"] = pure
        out = subprocess.run([sys.executable, "-c", FOREST_SNIPPET.format(trees=trees, criterion="scaff:0.5")],
                             env=env, capture_output=True, text=True, check=True).stdout.split()
        print(f"  {out[0]:<8}{float(out[1]):8.2f} s")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--trees", type=int, default=50)
    parser.add_argument("--skip-forest", action="store_true")
    args = parser.parse_args()
    bench_best_split(args.repeat)
    if not args.skip_forest:
        bench_forest(args.trees)


if __name__ == "__main__":
    main()
