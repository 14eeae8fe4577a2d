"""Time the compiled misranking kernel against the numpy fallback.

Usage: python3 benchmarks/bench_kernel.py [--pairs N] [--repeat R]
"""
import argparse
import time

import numpy as np

from utileval import kernel
from utileval.metrics import REGISTRY
from utileval.montecarlo import DEFAULT_SIGMAS
from utileval.sampling import (
    UtilityPrior,
    perturb_utilities,
    rate_from_uniform,
    sample_true_utilities,
)


def make_inputs(n: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    true_u = sample_true_utilities(UtilityPrior(), rng, n)
    noisy = np.stack([perturb_utilities(true_u, s, rng) for s in DEFAULT_SIGMAS])
    f0 = rng.random(n)
    rates = rate_from_uniform(rng.random((n, 4)))
    codes = np.array([d.kernel_code for d in REGISTRY.values()], dtype=np.int64)
    return (np.ascontiguousarray(true_u), np.ascontiguousarray(noisy), f0,
            np.ascontiguousarray(rates), codes)


def best_of(fn, args, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pairs", type=int, default=1 << 16)
    ap.add_argument("--repeat", type=int, default=5)
    opts = ap.parse_args()

    args = make_inputs(opts.pairs)
    backends = {"numpy fallback": kernel.fallback}
    if kernel.compiled is not None:
        backends["compiled"] = kernel.compiled
    else:
        print("compiled extension not built; timing the fallback only")

    results = {name: fn(*args) for name, fn in backends.items()}
    if len(results) == 2:
        (m1, t1), (m2, t2) = results.values()
        same = np.array_equal(m1, m2) and np.array_equal(t1, t2)
        print(f"outputs bit-identical: {same}")

    print(f"{opts.pairs} pairs, {len(REGISTRY)} metrics + {len(DEFAULT_SIGMAS)} noise levels, "
          f"best of {opts.repeat}")
    timings = {name: best_of(fn, args, opts.repeat) for name, fn in backends.items()}
    for name, t in timings.items():
        print(f"  {name:15s} {1e3 * t:9.2f} ms   {opts.pairs / t / 1e6:7.2f} M pairs/s")
    if len(timings) == 2:
        print(f"  speed-up {timings['numpy fallback'] / timings['compiled']:.1f}x")


if __name__ == "__main__":
    main()
