"""Compare the compiled kernels with the pure-Python fallback.

    python benchmarks/bench_kernels.py [--traces 200] [--samples 200000]

Both backends are checked for equal results before timing.
"""
from __future__ import annotations

import argparse
import random
import sys
import time

import numpy as np

from streamsim import kernels


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--traces", type=int, default=200)
    p.add_argument("--samples", type=int, default=200_000)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    if kernels.compiled is None:
        print("compiled extension not available; build it with `pip install -e . --no-build-isolation`")
        return 1

    rng = random.Random(args.seed)
    traces = [tuple(rng.randrange(8) for _ in range(rng.randint(3, 25))) for _ in range(args.traces)]
    np_rng = np.random.default_rng(args.seed)
    a = np.sort(np_rng.gamma(2.0, 600.0, args.samples))
    b = np.sort(np_rng.gamma(2.2, 550.0, args.samples))

    cases = {
        f"distance_matrix {args.traces}x{args.traces}": lambda mod: mod.distance_matrix(traces, traces),
        f"w1_sorted n={args.samples}": lambda mod: mod.w1_sorted(a, b),
    }
    print(f"{'kernel':<32}{'python s':>12}{'compiled s':>12}{'speedup':>10}")
    for name, call in cases.items():
        ref, fast = call(kernels.pure), call(kernels.compiled)
        if not np.allclose(ref, fast, rtol=1e-12, atol=1e-12):
            print(f"{name}: results differ", file=sys.stderr)
            return 2
        t_py = _best(lambda: call(kernels.pure), args.repeat)
        t_c = _best(lambda: call(kernels.compiled), args.repeat)
        print(f"{name:<32}{t_py:>12.4f}{t_c:>12.4f}{t_py / t_c:>9.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
