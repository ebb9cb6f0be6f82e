"""Benchmark the compiled kernels against the pure-numpy fallback.

Micro-benchmarks swap the backend in process; the end-to-end row runs the
full cross-weighted pipeline in a subprocess with IHW_PURE_KERNELS toggled,
which is how the fallback is selected in real use.

    python benchmarks/bench_kernels.py [--quick]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from ihw import kernels
from ihw.grenander import ecdf, least_concave_majorant
from ihw.learner import ConditionalModel, build_threshold_lp
from ihw import lp as lpmod


def time_call(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_pava(backend, rng, repeats):
    y = rng.normal(size=20_000)
    w = rng.uniform(0.5, 2.0, size=20_000)
    return time_call(lambda: backend.pava_decreasing(y, w), repeats)


def bench_hull(backend, rng, repeats):
    x = np.unique(rng.uniform(size=20_000))
    y = np.cumsum(rng.uniform(size=x.size))
    return time_call(lambda: backend.upper_hull_indices(x, y), repeats)


def learner_style_lp(rng):
    cdfs = tuple(
        least_concave_majorant(ecdf(rng.uniform(size=400) ** 1.5)) for _ in range(4)
    )
    mass = np.full(4, 0.25)
    model = ConditionalModel(cdfs, np.ones(4), mass, np.zeros(4, dtype=bool))
    return build_threshold_lp(model, 0.1, 0.5, "ordered")


def bench_simplex(backend, rng, repeats):
    program = learner_style_lp(rng)
    saved = kernels.simplex_core
    kernels.simplex_core = backend.simplex_core
    try:
        return time_call(lambda: lpmod.solve_lp(program), repeats)
    finally:
        kernels.simplex_core = saved


END_TO_END = """
import time
import numpy as np
from scipy.special import ndtr
from ihw.engine import IhwConfig, run_ihw
from ihw.learner import LearnerConfig
from ihw.table import HypothesisTable

rng = np.random.default_rng(0)
m = 2000
x = rng.uniform(size=m)
h = rng.uniform(size=m) < 0.3 * (1 + x) / 2
z = rng.standard_normal(m) + 2.5 * h
table = HypothesisTable.from_arrays(ndtr(-z), x)
config = IhwConfig(alpha=0.1, procedure="bh", K=5, seed=1,
                   learner=LearnerConfig(alpha=0.1, n_bins=4))
run_ihw(table, config)  # warm up
start = time.perf_counter()
for seed in range(5):
    run_ihw(table, IhwConfig(alpha=0.1, procedure="bh", K=5, seed=seed,
                             learner=LearnerConfig(alpha=0.1, n_bins=4)))
print((time.perf_counter() - start) / 5)
"""


def bench_end_to_end(pure):
    env = dict(os.environ)
    env["IHW_PURE_KERNELS"] = "1" if pure else "0"
    out = subprocess.run(
        [sys.executable, "-c", END_TO_END], env=env, capture_output=True, text=True, check=True
    )
    return float(out.stdout.strip().splitlines()[-1])


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true", help="fewer repeats")
    args = parser.parse_args()
    repeats = 3 if args.quick else 7

    try:
        compiled = kernels.get_backend("compiled")
    except ImportError:
        print("compiled backend not available; build it with `pip install -e .`")
        return 1
    pure = kernels.get_backend("pure")

    rows = []
    for name, fn in (("pava n=20000", bench_pava), ("hull n=20000", bench_hull),
                     ("threshold LP solve", bench_simplex)):
        rng = np.random.default_rng(42)
        t_pure = fn(pure, rng, repeats)
        rng = np.random.default_rng(42)
        t_fast = fn(compiled, rng, repeats)
        rows.append((name, t_pure, t_fast))

    t_pure = bench_end_to_end(pure=True)
    t_fast = bench_end_to_end(pure=False)
    rows.append(("run_ihw m=2000 K=5 J=4", t_pure, t_fast))

    width = max(len(r[0]) for r in rows)
    print(f"{'workload'.ljust(width)}  {'pure':>10}  {'compiled':>10}  {'speedup':>8}")
    for name, tp, tf in rows:
        print(f"{name.ljust(width)}  {tp * 1e3:>8.2f}ms  {tf * 1e3:>8.2f}ms  {tp / tf:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
