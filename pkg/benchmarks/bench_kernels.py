"""Time the compiled kernels against the numpy fallback on the same inputs.

    python3 benchmarks/bench_kernels.py            # default sizes
    python3 benchmarks/bench_kernels.py --repeat 7 --sizes 200 1000 4000

For every size it checks that both backends return identical results before
timing them, then prints the best-of-N wall time per call and the speedup.
"""
import argparse
import sys
import timeit

import numpy as np

from mlbaseline import kernels


def cases(n, d, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y_reg = X[:, 0] * 2 - X[:, 1] + 0.1 * rng.normal(size=n)
    y_cls = (X[:, 0] + X[:, 2] > 0).astype(np.int64)
    samples = np.arange(n, dtype=np.int64)
    features = np.arange(d, dtype=np.int64)
    Q = rng.normal(size=(max(n // 4, 1), d))
    return {
        "split/regression": lambda b: kernels.best_split_regression(X, y_reg, samples, features, 1, backend=b),
        "split/classification": lambda b: kernels.best_split_classification(
            X, y_cls, samples, features, 2, 1, backend=b),
        "knn/k=5": lambda b: kernels.knn_neighbors(X, Q, 5, backend=b),
    }


def same(a, b):
    if isinstance(a, np.ndarray):
        return np.array_equal(a, b)
    return a == b


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[200, 1000, 4000])
    parser.add_argument("--features", type=int, default=8)
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    if "cython" not in kernels.BACKENDS:
        print("compiled kernels are not built; only the numpy fallback is available", file=sys.stderr)
        return 1
    print(f"active backend: {kernels.BACKEND}")
    print(f"{'kernel':<22}{'n':>7}{'cython ms':>12}{'python ms':>12}{'speedup':>10}")
    for n in args.sizes:
        for name, call in cases(n, args.features, args.seed).items():
            if not same(call("cython"), call("python")):
                print(f"{name} n={n}: backends disagree", file=sys.stderr)
                return 1
            best = {}
            for backend in ("cython", "python"):
                timer = timeit.Timer(lambda: call(backend))
                number, _ = timer.autorange()
                best[backend] = min(timer.repeat(args.repeat, number)) / number
            print(f"{name:<22}{n:>7}{best['cython'] * 1e3:>12.3f}{best['python'] * 1e3:>12.3f}"
                  f"{best['python'] / best['cython']:>9.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
