"""Compare the compiled kernels with the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--particles N] [--repeat R]
"""

import argparse
import timeit

import numpy as np

from vkglab import _fallback

try:
    from vkglab import _kernels
except ImportError:
    _kernels = None


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--particles", type=int, default=200_000)
    ap.add_argument("--points", type=int, default=64)
    ap.add_argument("--dimension", type=int, default=2)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    n, d = args.points, args.dimension
    dx, origin = 2.0 / n, -1.0
    pos = rng.uniform(-1.0, 1.0, (args.particles, d))
    w = rng.uniform(size=args.particles)
    field = rng.normal(size=(d, n ** d))
    values = rng.normal(size=args.particles)

    cases = {
        "sum": lambda m: m.neumaier_sum(values),
        "deposit": lambda m: m.tsc_deposit(pos, w, n, dx, origin),
        "gather": lambda m: m.tsc_gather(field, pos, n, dx, origin),
    }
    backends = {"python": _fallback}
    if _kernels is not None:
        backends["compiled"] = _kernels
    print(f"{'kernel':<10}" + "".join(f"{b:>14}" for b in backends) + "   speedup   max |diff|")
    for name, fn in cases.items():
        times = {b: min(timeit.repeat(lambda: fn(m), number=1, repeat=args.repeat)) for b, m in backends.items()}
        line = f"{name:<10}" + "".join(f"{times[b] * 1e3:>12.2f}ms" for b in backends)
        if "compiled" in backends:
            diff = np.max(np.abs(np.asarray(fn(_fallback)) - np.asarray(fn(_kernels))))
            line += f"   {times['python'] / times['compiled']:6.1f}x   {diff:.1e}"
        print(line)


if __name__ == "__main__":
    main()
