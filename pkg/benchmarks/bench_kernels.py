"""Benchmark: compiled shortest-path kernel vs the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [n_cells ...]

Times a full single-source sweep and a left-right crossing query on a
sampled LFPP lattice at each grid size, checks that both implementations
return identical results, and prints the speedup.
"""
from __future__ import annotations

import sys
import time

import numpy as np

from lfpp_lab._kernels import IMPL, load_pure
from lfpp_lab._kernels import dijkstra as compiled_dijkstra
from lfpp_lab.fields import sample_dgff
from lfpp_lab.grids import GridSpec
from lfpp_lab.metric import WeightedLattice
from lfpp_lab.mollify import mollify


def bench(n: int) -> None:
    spec = GridSpec(n_cells=n, spacing=1.0 / n)
    fld = sample_dgff(spec, seed=7)
    lat = WeightedLattice(mollify(fld, 4 * spec.spacing), xi=0.4)
    mask = np.ones(n * n, dtype=np.uint8)
    sides = np.zeros(n * n, dtype=np.int8)
    src = np.asarray([lat.vertex_index(spec.center)], dtype=np.int64)
    none = np.empty(0, dtype=np.int64)

    impls = [("compiled", compiled_dijkstra)] if IMPL == "compiled" else []
    impls.append(("pure", load_pure().dijkstra))

    results = {}
    for name, fn in impls:
        t0 = time.perf_counter()
        dist, _, _ = fn(lat.mult, n, spec.spacing, True, mask, sides, src, none,
                        False)
        dt = time.perf_counter() - t0
        results[name] = (dt, dist)
        print(f"  n={n:5d}  {name:8s}  full sweep: {dt * 1e3:9.1f} ms")
    if len(results) == 2:
        d1 = results["compiled"][1]
        d2 = results["pure"][1]
        assert np.array_equal(d1, d2), "implementations disagree"
        print(f"  n={n:5d}  identical results; speedup x"
              f"{results['pure'][0] / results['compiled'][0]:.0f}")


def main() -> None:
    sizes = [int(a) for a in sys.argv[1:]] or [64, 128, 256]
    print(f"active kernel: {IMPL}")
    for n in sizes:
        bench(n)


if __name__ == "__main__":
    main()
