"""Crossing-cost normalization and the distance exponent.

The normalizer is the median cost of a cheapest left-right crossing of the
unit square at mollification scale eps; its log-log slope against eps gives
the exponent estimate Q_hat = (1 - slope)/xi.  Grids refine jointly with
eps (spacing = eps/4) so the mollifier stays resolvable while eps shrinks;
the domain geometry is fixed in units of the square, so zero-boundary and
lattice-anisotropy distortions enter every eps identically and cancel in
slope fits.

Reported uncertainties are statistical only.  The finite-eps drift of the
crossing exponent has an unknown rate and is not included in the intervals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fields import sample_dgff
from .grids import FieldGrid, GridError, GridSpec
from .metric import WeightedLattice, left_right_crossing_cost
from .mollify import mollify

SPACING_PER_EPS = 4.0  # grid policy: spacing = eps / 4
UNIT_SQUARE = (0.0, 0.0, 1.0)


class ResourceCapError(RuntimeError):
    """A run would exceed the configured n_cells cap."""


def crossing_grid_spec(epsilon: float, n_cap: int | None = None) -> GridSpec:
    """Grid holding the unit square plus mollifier margin and padding ring.

    The square is centered; the margin is max(5*eps, 6 spacings) so kernel
    support near the square never reaches the Dirichlet ring.
    """
    spacing = epsilon / SPACING_PER_EPS
    margin = max(5.0 * epsilon, 6.0 * spacing)
    core = 1.0 + 2.0 * margin
    n = int(math.ceil(core / spacing)) + 3
    for _ in range(4):  # padding depends on n; iterate to a fixed point
        pad = n // 8
        need = int(math.ceil(core / spacing)) + 2 * pad + 1
        if need <= n:
            break
        n = need
    if n_cap is not None and n > n_cap:
        raise ResourceCapError(f"crossing grid needs n_cells={n} > cap {n_cap}")
    half = (n - 1) * spacing / 2
    origin = (0.5 - half, 0.5 - half)
    spec = GridSpec(n_cells=n, spacing=spacing, origin=origin)
    box = spec.unpadded_box()
    if not (box[0] <= 0.0 and box[2] >= 1.0 and box[1] <= 0.0 and box[3] >= 1.0):
        raise GridError("crossing grid failed to contain the unit square")
    return spec


def field_seed(master_seed: int, epsilon: float, replicate: int) -> int:
    """Seed for one (eps, replicate) field, shared across xi for common
    random numbers."""
    eps_bits = int(np.float64(epsilon).view(np.uint64))
    ss = np.random.SeedSequence(
        entropy=(int(master_seed) & (2**64 - 1), 0xA5CA11, eps_bits, replicate))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def crossing_costs_for_replicate(xi_list, epsilon: float, master_seed: int,
                                 replicate: int, n_cap: int | None = None,
                                 zero_field: bool = False) -> list[float]:
    """Crossing cost of one fresh replicate, evaluated at every xi.

    One field sample and one mollification are shared by all xi values;
    only the edge reweighting differs.  Top-level and picklable so the
    harness can fan replicates out to worker processes.
    """
    spec = crossing_grid_spec(epsilon, n_cap)
    seed = field_seed(master_seed, epsilon, replicate)
    if zero_field:
        fld = FieldGrid(spec, np.zeros((spec.n_cells, spec.n_cells)), seed=seed)
    else:
        fld = sample_dgff(spec, seed)
    mf = mollify(fld, epsilon)
    out = []
    for xi in xi_list:
        lat = WeightedLattice(mf, xi=xi)
        out.append(left_right_crossing_cost(lat, UNIT_SQUARE).value)
    return out


def estimate_a_eps(xi: float, epsilon: float, replicates: int, master_seed: int = 0,
                   n_cap: int | None = None, zero_field: bool = False) -> float:
    """Sample median crossing cost over independent replicates (odd count)."""
    _check_replicates(replicates)
    costs = [crossing_costs_for_replicate([xi], epsilon, master_seed, r, n_cap,
                                          zero_field)[0]
             for r in range(replicates)]
    return float(np.median(costs))


def _check_replicates(replicates: int) -> None:
    if replicates < 30 or replicates % 2 == 0:
        raise ValueError("replicates must be >= 30 and odd for an exact median")


@dataclass
class ScalingRun:
    """One exponent fit: medians of the crossing cost across an eps grid."""

    xi: float
    eps_grid: np.ndarray          # descending
    replicates: int
    medians: np.ndarray
    q_hat: float
    q_stderr: float
    slope: float = 0.0
    intercept: float = 0.0
    costs: dict = field(default_factory=dict)  # eps -> per-replicate costs

    def __post_init__(self):
        if len(self.medians) != len(self.eps_grid):
            raise ValueError("medians/eps_grid length mismatch")
        if np.any(np.asarray(self.medians) <= 0):
            raise ValueError("medians must be positive")


def fit_q(xi: float, eps_grid, medians) -> tuple[float, float, float, float]:
    """OLS of log median on log eps; returns (q_hat, q_stderr, slope, intercept)."""
    eps_grid = np.asarray(eps_grid, float)
    medians = np.asarray(medians, float)
    if len(eps_grid) < 4:
        raise ValueError("need at least 4 eps grid points")
    x = np.log(eps_grid)
    if x.max() - x.min() < 2.0 - 1e-9:
        raise ValueError("eps grid must span at least 2 e-folds")
    y = np.log(medians)
    slope, intercept, se = _ols(x, y)
    return (1.0 - slope) / xi, se / xi, slope, intercept


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    n = len(x)
    xm = x - x.mean()
    sxx = float(xm @ xm)
    slope = float(xm @ y) / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = y - intercept - slope * x
    dof = max(n - 2, 1)
    se = math.sqrt(float(resid @ resid) / dof / sxx)
    return slope, intercept, se


def estimate_Q(xi: float, eps_grid, replicates: int, master_seed: int = 0,
               n_cap: int | None = None) -> ScalingRun:
    """Fit the crossing exponent for one xi over a descending eps grid."""
    runs = estimate_Q_multi([xi], eps_grid, replicates, master_seed, n_cap)
    return runs[xi]


def estimate_Q_multi(xi_list, eps_grid, replicates: int, master_seed: int = 0,
                     n_cap: int | None = None,
                     costs_by_eps: dict | None = None) -> dict[float, ScalingRun]:
    """Common-random-number exponent fits for several xi at once.

    costs_by_eps may carry precomputed per-replicate cost vectors (the
    harness's parallel path); otherwise replicates are run serially here.
    """
    _check_replicates(replicates)
    eps_grid = np.sort(np.asarray(eps_grid, float))[::-1]
    if costs_by_eps is None:
        costs_by_eps = {}
        for eps in eps_grid:
            rows = [crossing_costs_for_replicate(xi_list, eps, master_seed, r, n_cap)
                    for r in range(replicates)]
            costs_by_eps[float(eps)] = np.asarray(rows)
    out = {}
    for k, xi in enumerate(xi_list):
        medians = np.asarray([np.median(costs_by_eps[float(e)][:, k]) for e in eps_grid])
        q_hat, q_se, slope, intercept = fit_q(xi, eps_grid, medians)
        out[xi] = ScalingRun(
            xi=xi, eps_grid=eps_grid, replicates=replicates, medians=medians,
            q_hat=q_hat, q_stderr=q_se, slope=slope, intercept=intercept,
            costs={float(e): costs_by_eps[float(e)][:, k].copy() for e in eps_grid})
    return out


@dataclass
class SubcriticalReport:
    q_hat: float
    gamma_hat: float
    residual: float
    d_hat: float


def subcritical_consistency(xi: float, q_hat: float) -> SubcriticalReport:
    """Invert q = 2/gamma + gamma/2 for gamma in (0, 2].

    The defining quadratic gamma^2/2 - q*gamma + 2 = 0 has its subcritical
    root at gamma = q - sqrt(q^2 - 4).  d_hat = gamma/xi is reported as a
    diagnostic only; the dimension is not independently computable here.
    """
    if q_hat < 2:
        raise ValueError(f"q_hat={q_hat} is not in the subcritical regime (need >= 2)")
    gamma = q_hat - math.sqrt(q_hat * q_hat - 4.0)
    residual = abs(2.0 / gamma + gamma / 2.0 - q_hat)
    return SubcriticalReport(q_hat=q_hat, gamma_hat=gamma, residual=residual,
                             d_hat=gamma / xi)
