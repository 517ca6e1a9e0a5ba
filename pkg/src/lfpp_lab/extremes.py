"""Extreme-value statistics of circle averages on mesh refinements.

At scale n the statistic is the maximum of circle averages at radius e^{-n}
over the mesh (e^{-n-k} Z^2) intersected with a window U, recentered by
2n - (3/4) log n.  In the N = e^n dictionary the same recentering reads
2 log N - (3/4) log log N; both labels are carried on the run so the two
parameterizations cannot be confused.  The upper tail of the recentered
maximum decays at rate ~ exp(-2S) up to an S prefactor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fields import circle_average_batch, point_value, replicate_seed, sample_dgff
from .grids import FieldGrid, GridError, GridSpec

MESH_SPACING_PER_CELL = 4.0  # grid policy: spacing = mesh / 4


def recentering(n: int) -> float:
    """2n - (3/4) log n, the one-scale centering of the mesh maximum."""
    return 2.0 * n - 0.75 * math.log(n)


def mesh_points(window: tuple[float, float, float, float], mesh: float) -> np.ndarray:
    """Points of mesh*Z^2 inside the closed window (x0, y0, x1, y1)."""
    x0, y0, x1, y1 = window
    ax = np.arange(math.ceil(x0 / mesh - 1e-9), math.floor(x1 / mesh + 1e-9) + 1) * mesh
    ay = np.arange(math.ceil(y0 / mesh - 1e-9), math.floor(y1 / mesh + 1e-9) + 1) * mesh
    if ax.size == 0 or ay.size == 0:
        raise GridError("window contains no mesh points")
    gx, gy = np.meshgrid(ax, ay, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])


def maxstat_grid_spec(n: int, k: int, window, n_cap: int | None = None) -> GridSpec:
    """Grid resolving radius e^{-n} circles at every mesh point of the window."""
    radius = math.exp(-n)
    mesh = math.exp(-(n + k))
    spacing = mesh / MESH_SPACING_PER_CELL
    x0, y0, x1, y1 = window
    margin = radius + 12 * spacing
    core = max(x1 - x0, y1 - y0) + 2 * margin
    ncell = int(math.ceil(core / spacing)) + 3
    for _ in range(4):
        pad = ncell // 8
        need = int(math.ceil(core / spacing)) + 2 * pad + 1
        if need <= ncell:
            break
        ncell = need
    if n_cap is not None and ncell > n_cap:
        raise GridError(f"maxstat grid needs n_cells={ncell} > cap {n_cap}")
    cx, cy = (x0 + x1) / 2, (y0 + y1) / 2
    half = (ncell - 1) * spacing / 2
    return GridSpec(n_cells=ncell, spacing=spacing, origin=(cx - half, cy - half))


@dataclass
class MaxStatRun:
    """Per-(n, replicate) maxima of circle averages and their recentering."""

    n_list: list[int]
    lattice_offset_exp: int                 # the k of the mesh e^{-n-k}
    replicates: int
    max_samples: dict[int, np.ndarray] = field(default_factory=dict)
    recentered: dict[int, np.ndarray] = field(default_factory=dict)

    def add_scale(self, n: int, maxima: np.ndarray) -> None:
        if len(maxima) != self.replicates:
            raise ValueError("replicate count mismatch")
        if not np.all(np.isfinite(maxima)):
            raise ValueError("maxima must be finite")
        self.max_samples[n] = maxima
        self.recentered[n] = maxima - recentering(n)

    def n_dictionary(self, n: int) -> dict:
        """Both parameterizations of the centering at scale n (N = e^n)."""
        bigN = math.exp(n)
        return {"n": n, "N": bigN,
                "centering_n": recentering(n),
                "centering_N": 2 * math.log(bigN) - 0.75 * math.log(math.log(bigN))}

    def iqr(self, n: int) -> float:
        q1, q3 = np.percentile(self.recentered[n], [25, 75])
        return float(q3 - q1)


def max_circle_average_replicate(n: int, k: int, window, master_seed: int,
                                 replicate: int, n_cap: int | None = None) -> float:
    """Maximum of radius-e^{-n} circle averages over the mesh, one replicate."""
    spec = maxstat_grid_spec(n, k, window, n_cap)
    fld = sample_dgff(spec, replicate_seed(hash_scale(master_seed, n, k), replicate))
    pts = mesh_points(window, math.exp(-(n + k)))
    return float(np.max(circle_average_batch(fld, pts, math.exp(-n))))


def hash_scale(master_seed: int, n: int, k: int) -> int:
    ss = np.random.SeedSequence(entropy=(int(master_seed) & (2**64 - 1), 0x3A7, n, k))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def max_circle_average(n_list, k: int, window, replicates: int, master_seed: int = 0,
                       n_cap: int | None = None,
                       samples: dict[int, np.ndarray] | None = None) -> MaxStatRun:
    """Mesh-maximum statistics across scales; deterministic in master_seed."""
    run = MaxStatRun(n_list=list(n_list), lattice_offset_exp=k, replicates=replicates)
    for n in n_list:
        if samples is not None and n in samples:
            run.add_scale(n, np.asarray(samples[n], float))
            continue
        maxima = np.asarray([
            max_circle_average_replicate(n, k, window, master_seed, r, n_cap)
            for r in range(replicates)])
        run.add_scale(n, maxima)
    return run


@dataclass
class TailCurve:
    """Empirical exceedance curve of the recentered maximum."""

    S: np.ndarray
    prob: np.ndarray            # NaN where censored
    count_exceed: np.ndarray
    count_total: np.ndarray
    censored: np.ndarray        # True where no exceedances observed
    slope: float = math.nan     # fitted d log P / dS on the usable window
    slope_stderr: float = math.nan


def max_tail_estimate(run: MaxStatRun, S_grid) -> TailCurve:
    """Pooled upper-tail exceedance of recentered maxima across scales.

    Empty exceedance sets are censored, never reported as probability zero.
    The slope of log P against S is fitted where 0 < P < 1.
    """
    pooled = np.concatenate([run.recentered[n] for n in run.n_list])
    pooled = pooled - np.mean(pooled)  # single fitted constant across scales
    S = np.asarray(S_grid, float)
    total = pooled.size
    exceed = np.asarray([(pooled > s).sum() for s in S])
    prob = exceed / total
    censored = exceed == 0
    prob = np.where(censored, np.nan, prob)
    usable = (~censored) & (exceed < total)
    slope = slope_se = math.nan
    if usable.sum() >= 3:
        x = S[usable]
        y = np.log(prob[usable])
        xm = x - x.mean()
        sxx = float(xm @ xm)
        slope = float(xm @ y) / sxx
        resid = y - y.mean() - slope * xm
        slope_se = math.sqrt(float(resid @ resid) / max(len(x) - 2, 1) / sxx)
    return TailCurve(S=S, prob=prob, count_exceed=exceed,
                     count_total=np.full_like(exceed, total), censored=censored,
                     slope=slope, slope_stderr=slope_se)


@dataclass
class ThickPointReport:
    t_grid: np.ndarray
    flagged_fraction: np.ndarray   # per t, using the value h_{e^-t}(z)/t
    running_max: np.ndarray        # per mesh point, max over the t grid
    flagged_points: list
    q_ref: float
    margin: float


def thick_point_scan(field: FieldGrid, Q_ref: float, t_grid,
                     mesh_count: int = 12, margin: float = 0.5) -> ThickPointReport:
    """Scan mesh points for circle-average growth near the thickness bound.

    For each t the fraction of mesh points with h_{e^-t}(z)/t above
    Q_ref - margin is reported; the per-point running maximum over the grid
    is returned for flagging.  No alpha* estimate is produced.
    """
    spec = field.spec
    t_grid = np.sort(np.asarray(t_grid, float))
    r_max = math.exp(-t_grid[0])
    box = spec.unpadded_box()
    pad = r_max * 1.05
    xs = np.linspace(box[0] + pad, box[2] - pad, mesh_count)
    ys = np.linspace(box[1] + pad, box[3] - pad, mesh_count)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    ratios = np.empty((len(t_grid), len(pts)))
    for i, t in enumerate(t_grid):
        ratios[i] = circle_average_batch(field, pts, math.exp(-t)) / t
    running = np.maximum.accumulate(ratios, axis=0)[-1]
    frac = np.mean(ratios > Q_ref - margin, axis=1)
    flagged = [tuple(p) for p, v in zip(pts, running) if v > Q_ref - margin]
    return ThickPointReport(t_grid=t_grid, flagged_fraction=frac, running_max=running,
                            flagged_points=flagged, q_ref=Q_ref, margin=margin)


def inject_spike(field: FieldGrid, p: tuple[float, float], height: float = 10.0,
                 half_width_cells: int = 2) -> FieldGrid:
    """Positive control: a localized bump added at a point (interior only)."""
    i, j = field.spec.nearest_vertex(p)
    v = field.values.copy()
    n = field.spec.n_cells
    lo_i, hi_i = max(1, i - half_width_cells), min(n - 1, i + half_width_cells + 1)
    lo_j, hi_j = max(1, j - half_width_cells), min(n - 1, j + half_width_cells + 1)
    v[lo_i:hi_i, lo_j:hi_j] += height
    return FieldGrid(field.spec, v, field.seed)
