"""Compare the compiled and numpy neighbour-search kernels.

Run with ``python benchmarks/bench_kernels.py [--n 2000] [--dim 28]``. Both
backends are checked for identical output before timing.
"""

import argparse
import timeit

import numpy as np

from noisyprach import _kernels_py

try:
    from noisyprach import _kernels_c
except ImportError:
    _kernels_c = None


def _cases(n, dim, k, seed=0):
    rng = np.random.default_rng(seed)
    pool = rng.normal(size=(n, dim))
    extra = rng.normal(size=(20, dim))
    cand_d, cand_i = _kernels_py.knn_search(pool, pool, 32, exclude_self=True)
    active = rng.random(n) > 0.3
    best_d, best_i = _kernels_py.knn_search(pool, pool[: n // 2], k)
    return {
        "knn_search(self, k=32)": lambda m: m.knn_search(pool, pool, 32, exclude_self=True),
        "knn_merge(20 new refs)": lambda m: m.knn_merge(best_d.copy(), best_i.copy(), pool,
                                                        extra, n),
        "active_knn_mean": lambda m: m.active_knn_mean(cand_d, cand_i, active, k),
    }


def _check(cases):
    for name, run in cases.items():
        a, b = run(_kernels_py), run(_kernels_c)
        if a is None:
            continue
        a = a if isinstance(a, tuple) else (a,)
        b = b if isinstance(b, tuple) else (b,)
        for x, y in zip(a, b):
            np.testing.assert_allclose(x, y, rtol=1e-12, atol=0, err_msg=name)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--dim", type=int, default=28)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--repeat", type=int, default=5)
    a = p.parse_args(argv)

    cases = _cases(a.n, a.dim, a.k)
    if _kernels_c is None:
        print("compiled backend not built; timing the numpy backend only")
    else:
        _check(cases)
    print(f"n={a.n} dim={a.dim} k={a.k}, best of {a.repeat}")
    print(f"{'kernel':28s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s}")
    for name, run in cases.items():
        t_py = min(timeit.repeat(lambda: run(_kernels_py), number=1, repeat=a.repeat))
        if _kernels_c is None:
            print(f"{name:28s} {t_py * 1e3:12.2f} {'-':>12s} {'-':>8s}")
            continue
        t_c = min(timeit.repeat(lambda: run(_kernels_c), number=1, repeat=a.repeat))
        print(f"{name:28s} {t_py * 1e3:12.2f} {t_c * 1e3:12.2f} {t_py / t_c:7.1f}x")


if __name__ == "__main__":
    main()
