"""Compare the compiled kernels with the numpy fallback.

Run with ``python3 benchmarks/bench_kernels.py [--repeat N]``.  Every kernel
is run on hypercubes and grids of growing size with both backends; the
outputs are checked for equality before the timings are reported.
"""
from __future__ import annotations

import argparse
import itertools
import time

import numpy as np

from mediankit import _pykernels
from mediankit.median_core import MedianGraph

try:
    from mediankit import _ckernels
except ImportError:  # pragma: no cover - depends on the build
    _ckernels = None


def hypercube(d: int) -> MedianGraph:
    verts = list(itertools.product((0, 1), repeat=d))
    edges = [(v, v[:i] + (1,) + v[i + 1:]) for v in verts for i in range(d) if v[i] == 0]
    return MedianGraph(verts, edges, validate=False)


def grid(a: int, b: int) -> MedianGraph:
    verts = list(itertools.product(range(a), range(b)))
    edges = [((i, j), (i + 1, j)) for i in range(a - 1) for j in range(b)]
    edges += [((i, j), (i, j + 1)) for i in range(a) for j in range(b - 1)]
    return MedianGraph(verts, edges, validate=False)


def csr(g: MedianGraph) -> tuple[np.ndarray, np.ndarray]:
    indptr = np.zeros(g.n + 1, dtype=np.int32)
    for i, nb in enumerate(g.neighbors):
        indptr[i + 1] = indptr[i] + len(nb)
    indices = np.array([j for nb in g.neighbors for j in nb], dtype=np.int32)
    return indptr, indices


def best_of(fn, repeat: int) -> tuple[float, object]:
    best, out = float("inf"), None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def same(a, b) -> bool:
    return np.array_equal(np.asarray(a), np.asarray(b))


def run(repeat: int) -> list[tuple]:
    rows = []
    graphs = [("Q4", hypercube(4)), ("Q6", hypercube(6)), ("grid 6x8", grid(6, 8)), ("grid 8x8", grid(8, 8))]
    for name, g in graphs:
        indptr, indices = csr(g)
        dist = g.dist
        masks = _pykernels.interval_masks(dist)
        seed = np.uint64(1 | 1 << (g.n - 1))
        cases = {
            "distance_matrix": lambda m: m.distance_matrix(g.n, indptr, indices),
            "median_table": lambda m: m.median_table(dist),
            "interval_masks": lambda m: m.interval_masks(dist),
            "hull_closure": lambda m: m.hull_closure(masks, seed),
        }
        for kernel, call in cases.items():
            t_py, out_py = best_of(lambda: call(_pykernels), repeat)
            if _ckernels is None:
                rows.append((name, kernel, t_py, None, None))
                continue
            t_c, out_c = best_of(lambda: call(_ckernels), repeat)
            if not same(out_py, out_c):
                raise AssertionError(f"{kernel} differs between backends on {name}")
            rows.append((name, kernel, t_py, t_c, t_py / t_c if t_c else float("inf")))
    return rows


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    rows = run(args.repeat)
    print(f"{'graph':<10} {'kernel':<16} {'python (ms)':>12} {'cython (ms)':>12} {'speedup':>8}")
    for name, kernel, t_py, t_c, ratio in rows:
        c = f"{1e3 * t_c:12.3f}" if t_c is not None else f"{'n/a':>12}"
        r = f"{ratio:8.1f}" if ratio is not None else f"{'n/a':>8}"
        print(f"{name:<10} {kernel:<16} {1e3 * t_py:12.3f} {c} {r}")


if __name__ == "__main__":
    main()
