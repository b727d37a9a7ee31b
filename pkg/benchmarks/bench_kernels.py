"""Compare the compiled and numpy kernel backends.

Times the detection kernels alone (trial generation excluded) on a
fixed batch of CRPs and reports nanoseconds per row and the speed-up.

    python benchmarks/bench_kernels.py [--rows 200000] [--n 16] [--repeat 3]
"""
import argparse
import math
import time

import numpy as np

from bayescfar.detectors import InterferencePrior
from bayescfar.kernels import available_backends, load_backend


def _cases(n):
    uni = np.log(InterferencePrior.uniform(n).cell_weights)
    half = np.log(InterferencePrior.uniform(n, 0.5).cell_weights)
    mult = 0.01 ** (-1.0 / n) - 1.0
    return {
        "ca": lambda k, z0, crp: k.threshold_exceedances(z0, crp, -1, mult),
        "case1": lambda k, z0, crp: k.threshold_exceedances(z0, crp, n - 1, mult),
        "case2": lambda k, z0, crp: k.mixture_pfa(z0, crp, uni, -math.inf),
        "case3": lambda k, z0, crp: k.mixture_pfa(z0, crp, half, math.log(0.5)),
    }


def run(rows=200_000, n=16, repeat=3, seed=0):
    """Return ``{variant: {backend: seconds_per_row}}``."""
    gen = np.random.default_rng(seed)
    z0 = gen.exponential(size=rows)
    crp = np.ascontiguousarray(gen.exponential(size=(rows, n)))
    results = {}
    for name, fn in _cases(n).items():
        results[name] = {}
        for b in available_backends():
            k = load_backend(b)
            best = math.inf
            for _ in range(repeat):
                t = time.perf_counter()
                fn(k, z0, crp)
                best = min(best, time.perf_counter() - t)
            results[name][b] = best / rows
    return results


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=200_000)
    ap.add_argument("--n", type=int, default=16)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    res = run(args.rows, args.n, args.repeat)
    backends = available_backends()
    print(f"rows={args.rows} N={args.n} (best of {args.repeat}, ns/row)")
    print(f"{'variant':<8}" + "".join(f"{b:>10}" for b in backends) + ("   speed-up" if len(backends) == 2 else ""))
    for name, times in res.items():
        line = f"{name:<8}" + "".join(f"{times[b] * 1e9:10.1f}" for b in backends)
        if len(backends) == 2:
            line += f"{times['python'] / times['cython']:10.1f}x"
        print(line)


if __name__ == "__main__":
    main()
