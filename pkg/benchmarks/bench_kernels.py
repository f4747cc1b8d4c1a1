"""Compare the compiled kernels with the numpy fallback on reference-sized inputs.

Usage: python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from semiflow_lab import _kernels_py

try:
    from semiflow_lab import _kernels as compiled
except ImportError:
    compiled = None


def cases(rng):
    # one transfer step on the reference grid: 128 base nodes x 391 heights
    values = rng.normal(size=(128, 391)) + 1j * rng.normal(size=(128, 391))
    q = np.ascontiguousarray(rng.uniform(0.0, 3.0, size=(128, 391)))
    nodes = np.sort(rng.random(64))
    weight = np.ones(391)
    mask = np.ones((64, 391), dtype=bool)
    return {
        "uniform_interp": lambda mod: mod.uniform_interp(values, 1 / 128, q, 6),
        "holder_pairs_max": lambda mod: mod.holder_pairs_max(values[:64], nodes, 0.5, weight, mask),
    }


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':<18} {'numpy [ms]':>11} {'cython [ms]':>12} {'speedup':>8} {'max diff':>9}")
    for name, call in cases(rng).items():
        t_py = min(timeit.repeat(lambda: call(_kernels_py), number=1, repeat=args.repeat)) * 1e3
        if compiled is None:
            print(f"{name:<18} {t_py:11.2f} {'n/a':>12}")
            continue
        t_c = min(timeit.repeat(lambda: call(compiled), number=1, repeat=args.repeat)) * 1e3
        a, b = call(_kernels_py), call(compiled)
        diff = float(np.max(np.abs(np.asarray(a[0] if isinstance(a, tuple) else a)
                                   - np.asarray(b[0] if isinstance(b, tuple) else b))))
        print(f"{name:<18} {t_py:11.2f} {t_c:12.2f} {t_py / t_c:8.1f} {diff:9.1e}")


if __name__ == "__main__":
    main()
