"""Compare the compiled tree kernels against the pure-numpy fallback.

Times the two hot paths (split search during forest training, batched
forest traversal during scoring) on workloads shaped like the evaluation
harness: a few hundred to a couple thousand pages, 22 features.

Usage: python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from phishevade.detectors import ForestConfig, train_rf
from phishevade.kernels import _kernels_py

try:
    from phishevade.kernels import _kernels as compiled
except ImportError:
    compiled = None


def feature_like_matrix(rng, n, d=22):
    """Mixed ternary and ratio columns, like extracted page features."""
    x = rng.choice([-1.0, 0.0, 1.0], size=(n, d))
    x[:, : d // 4] = np.round(rng.uniform(0, 1, size=(n, d // 4)), 3)
    return np.ascontiguousarray(x)


def timeit(fn, repeat=5):
    best = np.inf
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_best_split(backend, x, y, repeat=5):
    return timeit(lambda: backend.best_split(x, y), repeat)


def bench_forest_predict(backend, flat, x, repeat=5):
    return timeit(lambda: backend.forest_predict(*flat, x), repeat)


def main():
    rng = np.random.default_rng(0)
    backends = [("python", _kernels_py)]
    if compiled is not None:
        backends.append(("cython", compiled))
    else:
        print("compiled extension unavailable; timing the fallback only")

    print(f"{'kernel':<28}{'n':>8}" + "".join(f"{name:>14}" for name, _ in backends)
          + ("{:>10}".format("speedup") if compiled else ""))

    for n in (200, 1000, 4000):
        x = feature_like_matrix(rng, n)
        y = np.ascontiguousarray(rng.integers(0, 2, n), dtype=np.int64)
        times = [bench_best_split(b, x, y) for _, b in backends]
        row = f"{'best_split (22 features)':<28}{n:>8}" + "".join(f"{t * 1e3:>12.2f}ms" for t in times)
        if compiled:
            row += f"{times[0] / times[1]:>9.1f}x"
        print(row)

    x_train = feature_like_matrix(rng, 1200)
    y_train = np.ascontiguousarray((x_train[:, 5] + x_train[:, 9] > 0.5).astype(np.int64))
    model = train_rf(x_train, y_train, ForestConfig(n_trees=100, seed=0))
    flat = model._flatten()
    for n in (100, 1000):
        probe = feature_like_matrix(rng, n)
        times = [bench_forest_predict(b, flat, probe) for _, b in backends]
        row = f"{'forest_predict (100 trees)':<28}{n:>8}" + "".join(f"{t * 1e3:>12.2f}ms" for t in times)
        if compiled:
            row += f"{times[0] / times[1]:>9.1f}x"
        print(row)

    full = timeit(lambda: train_rf(x_train, y_train, ForestConfig(n_trees=50, seed=1)), repeat=2)
    print(f"\nfull forest training (1200x22, 50 trees), selected backend: {full:.2f}s")


if __name__ == "__main__":
    main()
