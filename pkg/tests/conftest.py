import math

import numpy as np
import pytest

from lfpp_lab.grids import FieldGrid, GridSpec
from lfpp_lab.metric import WeightedLattice
from lfpp_lab.mollify import MollifiedField


@pytest.fixture
def small_spec():
    return GridSpec(n_cells=32, spacing=1.0 / 32, padding_cells=4)


def make_lattice(values: np.ndarray, spacing: float = 1.0, xi: float = 0.4,
                 connectivity: str = "8-neighbor", origin=(0.0, 0.0),
                 padding_cells: int = 0) -> WeightedLattice:
    """Lattice over explicit (already 'mollified') values, for metric tests."""
    n = values.shape[0]
    spec = GridSpec(n_cells=n, spacing=spacing, origin=origin,
                    padding_cells=padding_cells)
    ring = np.zeros((n, n))
    fld = FieldGrid(spec, ring, seed=0)
    mf = MollifiedField(base=fld, epsilon=spacing, values=values.astype(float))
    return WeightedLattice(mf, xi=xi, connectivity=connectivity)


def neighbors(n: int, idx: int, eight: bool):
    i, j = divmod(idx, n)
    offs = [(-1, 0), (1, 0), (0, -1), (0, 1)]
    if eight:
        offs += [(-1, -1), (-1, 1), (1, -1), (1, 1)]
    for di, dj in offs:
        a, b = i + di, j + dj
        if 0 <= a < n and 0 <= b < n:
            yield a * n + b, math.sqrt(2.0) if di and dj else 1.0


def edge_weight(lat: WeightedLattice, u: int, v: int) -> float:
    n = lat.spec.n_cells
    du = abs(u // n - v // n)
    dv = abs(u % n - v % n)
    step = lat.spec.spacing * (math.sqrt(2.0) if du + dv == 2 else 1.0)
    return step * (lat.mult[u] * lat.mult[v])


def brute_force_distance(lat: WeightedLattice, sources, targets,
                         mask=None, forbidden_edges=frozenset()) -> float:
    """Exhaustive DFS over simple paths; exponential, for <= 49 vertices."""
    n = lat.spec.n_cells
    eight = lat.eight
    if mask is None:
        mask = np.ones(n * n, dtype=bool)
    else:
        mask = mask.astype(bool)
    targets = set(int(t) for t in targets)
    best = math.inf

    def dfs(u, cost, visited):
        nonlocal best
        if cost >= best:
            return
        if u in targets:
            best = cost
            return
        for v, step in neighbors(n, u, eight):
            if not mask[v] or v in visited:
                continue
            if (u, v) in forbidden_edges or (v, u) in forbidden_edges:
                continue
            w = lat.spec.spacing * step * (lat.mult[u] * lat.mult[v])
            visited.add(v)
            dfs(v, cost + w, visited)
            visited.remove(v)

    for s in sources:
        s = int(s)
        if not mask[s]:
            continue
        if s in targets:
            return 0.0
        dfs(s, 0.0, {s})
    return best


def brute_force_separating_cycle(lat: WeightedLattice, mask: np.ndarray,
                                 center) -> float:
    """Cheapest simple lattice cycle in the masked set with winding +-1
    about the center.  Exhaustive; usable only on tiny annuli."""
    n = lat.spec.n_cells
    eight = lat.eight
    mask = mask.astype(bool)
    verts = np.nonzero(mask)[0]
    best = math.inf

    def angle(u):
        x, y = lat.spec.vertex_xy(u // n, u % n)
        return math.atan2(y - center[1], x - center[0])

    def dfs(start, u, cost, visited, total_turn):
        nonlocal best
        if cost >= best:
            return
        for v, step in neighbors(n, u, eight):
            if not mask[v]:
                continue
            w = lat.spec.spacing * step * (lat.mult[u] * lat.mult[v])
            d = angle(v) - angle(u)
            d = (d + math.pi) % (2 * math.pi) - math.pi
            if v == start:
                if abs(round((total_turn + d) / (2 * math.pi))) >= 1:
                    best = min(best, cost + w)
                continue
            if v in visited or v < start:
                continue
            visited.add(v)
            dfs(start, v, cost + w, visited, total_turn + d)
            visited.remove(v)

    for s in verts:
        s = int(s)
        dfs(s, s, 0.0, {s}, 0.0)
    return best
