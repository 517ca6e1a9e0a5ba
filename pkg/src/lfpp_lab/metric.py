"""Lattice realization of the LFPP metric: shortest paths on the weighted grid.

Edge weights are |u-v| * exp(xi*(F(u)+F(v))/2) with F the mollified field
(trapezoidal endpoint average).  All distance queries are exact shortest
paths under a deterministic (distance, vertex index) tie rule, so repeated
runs return identical values and identical geodesics.

Adding a constant c to F multiplies every edge weight by exp(xi*c), hence
every distance by exactly the same factor while leaving argmin paths
unchanged: the lattice-exact form of the continuum Weyl scaling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import dijkstra
from .grids import GridError, GridSpec
from .mollify import MollifiedField

EIGHT = "8-neighbor"
FOUR = "4-neighbor"


@dataclass(frozen=True)
class AnnulusSpec:
    """Annulus A_z(r_inner, r_outer) for across/around queries."""

    center: tuple[float, float]
    r_inner: float
    r_outer: float

    def __post_init__(self):
        if not 0 < self.r_inner < self.r_outer:
            raise GridError(f"need 0 < r_inner < r_outer, got {self.r_inner}, {self.r_outer}")


@dataclass(frozen=True)
class DiskSpec:
    """Closed disk region for internal-metric queries."""

    center: tuple[float, float]
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise GridError("disk radius must be positive")


@dataclass
class DistanceResult:
    value: float
    kind: str  # point-point | set-set | across | around | internal
    path: list[tuple[float, float]] | None = None
    meta: dict = field(default_factory=dict)


class WeightedLattice:
    """Immutable weighted grid graph over a mollified field."""

    def __init__(self, source: MollifiedField, xi: float, connectivity: str = EIGHT):
        if xi <= 0:
            raise GridError("xi must be positive")
        if connectivity not in (EIGHT, FOUR):
            raise GridError(f"unknown connectivity {connectivity!r}")
        self.source = source
        self.spec: GridSpec = source.spec
        self.xi = xi
        self.connectivity = connectivity
        self.mult = np.exp(0.5 * xi * source.values).ravel().astype(np.float64)
        if not np.all(np.isfinite(self.mult)) or np.any(self.mult <= 0):
            raise GridError("edge multipliers must be positive finite")
        n = self.spec.n_cells
        self._all_mask = np.ones(n * n, dtype=np.uint8)
        self._no_sides = np.zeros(n * n, dtype=np.int8)

    @property
    def eight(self) -> bool:
        return self.connectivity == EIGHT

    def meta(self) -> dict:
        return {
            "xi": self.xi,
            "epsilon": self.source.epsilon,
            "seed": self.source.base.seed,
        }

    def with_shift(self, c: float) -> "WeightedLattice":
        """Lattice for the field F + c (same geometry, reweighted edges)."""
        shifted = MollifiedField(base=self.source.base, epsilon=self.source.epsilon,
                                 values=self.source.values + c)
        return WeightedLattice(shifted, self.xi, self.connectivity)

    # -- vertex geometry -----------------------------------------------------

    def _xy(self) -> tuple[np.ndarray, np.ndarray]:
        spec = self.spec
        ax = spec.axis_coords()
        return ax[:, None], ax[None, :]

    def _radii_from(self, center) -> np.ndarray:
        x, y = self._xy()
        return np.hypot(x - center[0], y - center[1])

    def vertex_index(self, p: tuple[float, float]) -> int:
        i, j = self.spec.nearest_vertex(p)
        return i * self.spec.n_cells + j

    def ring_indices(self, center, radius: float, within: np.ndarray | None = None) -> np.ndarray:
        """Vertices within half a lattice step of the circle."""
        d = self._radii_from(center).ravel()
        sel = np.abs(d - radius) <= self.spec.spacing / 2
        if within is not None:
            sel &= within.astype(bool)
        idx = np.nonzero(sel)[0]
        if idx.size == 0:
            raise GridError(f"no lattice vertices on circle r={radius:.3g}")
        return idx.astype(np.int64)

    def annulus_mask(self, ann: AnnulusSpec, closed: bool = True) -> np.ndarray:
        d = self._radii_from(ann.center).ravel()
        h = self.spec.spacing
        if closed:
            sel = (d >= ann.r_inner - h / 2) & (d <= ann.r_outer + h / 2)
        else:
            sel = (d > ann.r_inner) & (d < ann.r_outer)
        return sel.astype(np.uint8)

    def disk_mask(self, disk: DiskSpec) -> np.ndarray:
        d = self._radii_from(disk.center).ravel()
        return (d <= disk.radius + self.spec.spacing / 2).astype(np.uint8)

    def region_mask(self, region) -> np.ndarray:
        if isinstance(region, AnnulusSpec):
            return self.annulus_mask(region, closed=True)
        if isinstance(region, DiskSpec):
            return self.disk_mask(region)
        raise GridError(f"unsupported region {region!r}")

    # -- queries ---------------------------------------------------------------

    def _run(self, mask, sides, sources, targets, want_path):
        return dijkstra(self.mult, self.spec.n_cells, self.spec.spacing, self.eight,
                        mask, sides if sides is not None else self._no_sides,
                        np.asarray(sources, dtype=np.int64),
                        np.asarray(targets, dtype=np.int64), bool(want_path))

    def _extract_path(self, pred, start_set, end) -> list[int]:
        path = [end]
        seen = 0
        start_set = set(int(s) for s in start_set)
        while path[-1] not in start_set:
            p = int(pred[path[-1]])
            if p < 0 or seen > pred.shape[0]:
                raise GridError("broken predecessor chain")
            path.append(p)
            seen += 1
        path.reverse()
        return path

    def path_coords(self, idx_path: list[int]) -> list[tuple[float, float]]:
        n = self.spec.n_cells
        return [self.spec.vertex_xy(i // n, i % n) for i in idx_path]

    def path_weight(self, idx_path: list[int]) -> float:
        """Sum of edge weights along a vertex index path."""
        n = self.spec.n_cells
        h = self.spec.spacing
        total = 0.0
        for u, v in zip(idx_path[:-1], idx_path[1:]):
            du = abs(u // n - v // n)
            dv = abs(u % n - v % n)
            if max(du, dv) != 1 or (not self.eight and du + dv != 1):
                raise GridError("path uses a non-edge")
            step = h * math.sqrt(2.0) if du + dv == 2 else h
            total += step * (self.mult[u] * self.mult[v])
        return total


def distance(lat: WeightedLattice, z, w, want_path: bool = False) -> DistanceResult:
    """Exact lattice distance between the vertices nearest z and w."""
    for p in (z, w):
        if not lat.spec.contains_point(p):
            raise GridError(f"point {p} outside unpadded domain")
    src = lat.vertex_index(z)
    dst = lat.vertex_index(w)
    dist, pred, hit = lat._run(lat._all_mask, None, [src], [dst], want_path)
    if hit < 0 and src != dst:
        raise GridError("target unreachable on full lattice")
    value = 0.0 if src == dst else float(dist[dst])
    path = None
    if want_path:
        path = lat.path_coords(lat._extract_path(pred, [src], dst)) if src != dst \
            else [lat.path_coords([src])[0]]
    return DistanceResult(value=value, kind="point-point", path=path, meta=lat.meta())


def _set_to_set(lat: WeightedLattice, mask, sides, sources, targets, kind, want_path):
    overlap = np.intersect1d(sources, targets)
    if overlap.size:
        return DistanceResult(value=0.0, kind=kind,
                              path=[lat.path_coords([int(overlap[0])])[0]] if want_path else None,
                              meta=lat.meta())
    dist, pred, hit = lat._run(mask, sides, sources, targets, want_path)
    if hit < 0:
        return DistanceResult(value=math.inf, kind=kind, path=None, meta=lat.meta())
    path = lat.path_coords(lat._extract_path(pred, sources, hit)) if want_path else None
    return DistanceResult(value=float(dist[hit]), kind=kind, path=path, meta=lat.meta())


def distance_across(lat: WeightedLattice, ann: AnnulusSpec,
                    want_path: bool = False) -> DistanceResult:
    """Distance between the annulus boundary circles through the closed annulus."""
    h = lat.spec.spacing
    if ann.r_outer - ann.r_inner < h:
        raise GridError("annulus too thin to contain a full lattice ring")
    if not lat.spec.contains_circle(ann.center, ann.r_outer):
        raise GridError("annulus leaves the unpadded domain")
    mask = lat.annulus_mask(ann, closed=True)
    inner = lat.ring_indices(ann.center, ann.r_inner, within=mask)
    outer = lat.ring_indices(ann.center, ann.r_outer, within=mask)
    res = _set_to_set(lat, mask, None, inner, outer, "across", want_path)
    return res


def distance_around(lat: WeightedLattice, ann: AnnulusSpec,
                    want_path: bool = False) -> DistanceResult:
    """Minimal weight of a lattice cycle in the open annulus separating its
    boundaries.

    Cut-graph construction: sever all edges crossing the horizontal ray from
    the center through the annulus, then close the cheapest severed edge with
    a shortest path between its endpoints.  The returned cycle's winding
    number about the center is verified; a non-winding result is a hard error.
    """
    spec = lat.spec
    h = spec.spacing
    # r_inner floor keeps the cut-ray tip vertices inside the hole; the ring
    # itself is validated by the construction (no cycle -> error below)
    if ann.r_inner < 1.2 * h or ann.r_outer - ann.r_inner < 1.5 * h:
        raise GridError("no separating lattice cycle at this resolution")
    if not lat.spec.contains_circle(ann.center, ann.r_outer):
        raise GridError("annulus leaves the unpadded domain")
    mask = lat.annulus_mask(ann, closed=False)
    n = spec.n_cells
    cx, cy = ann.center

    # cut line between two vertex rows: pick the row pair first, then set the
    # line at the exact midpoint so the side classification cannot be flipped
    # by rounding in origin + j*h
    ax = spec.axis_coords()
    j0 = int(math.floor((cy - spec.origin[1]) / h))
    j0 = min(max(j0, 0), n - 2)
    y_cut = 0.5 * (ax[j0] + ax[j0 + 1])

    x, y = lat._xy()
    sides = np.zeros((n, n), dtype=np.int8)
    right = (x + 0 * y) >= cx
    above = (0 * x + y) > y_cut
    sides[right & above] = 1
    sides[right & ~above] = -1
    sides = sides.ravel()
    cut_edges: list[tuple[int, int, float]] = []
    deltas = [0, -1, 1] if lat.eight else [0]
    for i in range(n):
        if ax[i] < cx:
            continue
        u = i * n + j0
        if not mask[u]:
            continue
        for di in deltas:
            ii = i + di
            if not (0 <= ii < n) or ax[ii] < cx:
                continue
            v = ii * n + (j0 + 1)
            if not mask[v]:
                continue
            step = h if di == 0 else h * math.sqrt(2.0)
            cut_edges.append((u, v, step))
    if not cut_edges:
        raise GridError("no separating cycle exists at this resolution")

    by_source: dict[int, list[tuple[int, float]]] = {}
    for u, v, step in cut_edges:
        by_source.setdefault(v, []).append((u, step))

    best = math.inf
    best_cycle: list[int] | None = None
    for v in sorted(by_source):
        dist, pred, _ = lat._run(mask, sides, [v], [], True)
        for u, step in by_source[v]:
            w = step * (lat.mult[u] * lat.mult[v])
            if not np.isfinite(dist[u]):
                continue
            total = float(dist[u]) + w
            if total < best:
                best = total
                best_cycle = lat._extract_path(pred, [v], u) + [v]
    if best_cycle is None:
        raise GridError("no separating cycle exists at this resolution")

    if abs(winding_number(lat, best_cycle, ann.center)) < 1:
        raise GridError("around-cycle failed the winding check")
    path = lat.path_coords(best_cycle) if want_path else None
    res = DistanceResult(value=best, kind="around", path=path, meta=lat.meta())
    res.meta["cycle_indices"] = best_cycle
    return res


def winding_number(lat: WeightedLattice, cycle: list[int], center) -> int:
    """Signed winding of a closed vertex path about a point."""
    n = lat.spec.n_cells
    pts = np.asarray([lat.spec.vertex_xy(i // n, i % n) for i in cycle])
    ang = np.arctan2(pts[:, 1] - center[1], pts[:, 0] - center[0])
    d = np.diff(ang)
    d = (d + np.pi) % (2 * np.pi) - np.pi
    return int(round(d.sum() / (2 * np.pi)))


def internal_distance(lat: WeightedLattice, z, w, region) -> DistanceResult:
    """Shortest path restricted to a region; +inf when disconnected."""
    mask = lat.region_mask(region)
    src = lat.vertex_index(z)
    dst = lat.vertex_index(w)
    if not (mask[src] and mask[dst]):
        raise GridError("endpoint outside region")
    if src == dst:
        return DistanceResult(value=0.0, kind="internal", meta=lat.meta())
    dist, pred, hit = lat._run(mask, None, [src], [dst], False)
    value = float(dist[dst]) if hit >= 0 else math.inf
    return DistanceResult(value=value, kind="internal", meta=lat.meta())


def left_right_crossing_cost(lat: WeightedLattice, square: tuple[float, float, float],
                             want_path: bool = False) -> DistanceResult:
    """Cheapest left-to-right crossing of an axis-aligned square.

    square = (x0, y0, side); the path is restricted to the closed square.
    """
    x0, y0, side = square
    spec = lat.spec
    h = spec.spacing
    box = spec.unpadded_box()
    if not (box[0] <= x0 and x0 + side <= box[2] and box[1] <= y0 and y0 + side <= box[3]):
        raise GridError("square outside unpadded domain")
    # vertices within half a lattice step of the closed square, so the edge
    # vertex sets are nonempty at any alignment
    eps = h / 2 + 1e-9 * h
    x, y = lat._xy()
    inside = ((x >= x0 - eps) & (x <= x0 + side + eps)
              & (y >= y0 - eps) & (y <= y0 + side + eps))
    mask = inside.ravel().astype(np.uint8)
    xl = np.abs(x - x0) <= h / 2
    xr = np.abs(x - (x0 + side)) <= h / 2
    left = np.nonzero((xl & inside).ravel())[0].astype(np.int64)
    right = np.nonzero((xr & inside).ravel())[0].astype(np.int64)
    if left.size == 0 or right.size == 0:
        raise GridError("square too small for crossing query")
    return _set_to_set(lat, mask, None, left, right, "set-set", want_path)
