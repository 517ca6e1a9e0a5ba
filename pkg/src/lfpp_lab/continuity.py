"""End-to-end distance statistics: annulus tails, local regularity, modulus fits.

All normalized distance statistics divide by r^{xi*Q} e^{xi h_r(z)}, which
makes them exactly invariant under adding a constant to the field (the
exponential factor absorbs the shift that scales every edge weight).  Tail
curves are reported against the sample median so unknown lattice constants
drop out; censored tail bins are reported as censored, never as zero.

The modulus-of-continuity fit targets the worst pair at each separation:
per replicate and separation bin the maximum distance over a pair cloud is
recorded and log max is regressed on loglog(1/sep) (log-power model) or on
log(sep) (Euclidean-power model).  The pair cloud mixes quasi-random
placements with pairs centered on the replicate's highest circle-average
sites; the latter stratum is importance sampling of the spatial maximum the
modulus bound controls, not a change of estimand.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .fields import (circle_average, circle_average_batch, replicate_seed, sample_dgff)
from .grids import GridError, GridSpec
from .metric import (AnnulusSpec, WeightedLattice, distance, distance_across,
                     distance_around)
from .mollify import MollifiedField, mollify

A_PARALLEL_EFOLDS = 2.0  # lattice stand-in for the 100-e-fold shell


# ---------------------------------------------------------------------------
# model fitting


@dataclass
class ModulusFit:
    pair_separations: np.ndarray
    distances: np.ndarray
    theta_hat: float
    theta_stderr: float
    model: str                     # "log-power" | "euclid-power" (selected)
    chi_hat: float = math.nan
    chi_stderr: float = math.nan
    ssr_log_power: float = math.nan
    ssr_euclid_power: float = math.nan
    theta_intercept: float = math.nan
    chi_intercept: float = math.nan
    bin_table: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.any(self.distances <= 0):
            raise ValueError("distances must be positive for the log-power model")


def fit_modulus_models(separations, distances) -> dict:
    """OLS of log distance against both modulus models.

    log-power:    log D = a - theta * loglog(1/sep)
    euclid-power: log D = a + chi  * log(sep)
    Returns point estimates, standard errors, and residual sums of squares.
    """
    sep = np.asarray(separations, float)
    d = np.asarray(distances, float)
    if np.any(sep <= 0) or np.any(sep >= 1):
        raise ValueError("separations must lie in (0, 1)")
    y = np.log(d)
    x_log = np.log(np.log(1.0 / sep))
    x_euc = np.log(sep)
    th_slope, th_se, ssr_log = _ols_line(x_log, y)
    chi_slope, chi_se, ssr_euc = _ols_line(x_euc, y)
    return {
        "theta_hat": -th_slope, "theta_stderr": th_se, "ssr_log_power": ssr_log,
        "chi_hat": chi_slope, "chi_stderr": chi_se, "ssr_euclid_power": ssr_euc,
        "theta_intercept": float(y.mean() - th_slope * x_log.mean()),
        "chi_intercept": float(y.mean() - chi_slope * x_euc.mean()),
        "selected": "log-power" if ssr_log < ssr_euc else "euclid-power",
    }


def _ols_line(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    xm = x - x.mean()
    sxx = float(xm @ xm)
    if sxx <= 0:
        raise ValueError("degenerate regressor")
    slope = float(xm @ y) / sxx
    resid = y - y.mean() - slope * xm
    ssr = float(resid @ resid)
    se = math.sqrt(ssr / max(len(x) - 2, 1) / sxx)
    return slope, se, ssr


# ---------------------------------------------------------------------------
# annulus tail statistics


@dataclass
class AnnulusTailRun:
    r_list: np.ndarray
    S_grid: np.ndarray
    xi: float
    q_ref: float
    normalized: dict = field(default_factory=dict)   # (r, kind) -> samples
    exceedance: dict = field(default_factory=dict)   # (r, kind) -> dict of curves
    fits: dict = field(default_factory=dict)

    def __post_init__(self):
        for v in self.normalized.values():
            if np.any(np.asarray(v) <= 0):
                raise ValueError("normalized distances must be positive")


def tail_grid_spec(r: float, cells_per_radius: int = 32,
                   n_cap: int | None = None) -> GridSpec:
    spacing = r / cells_per_radius
    core = 2.0 * r * 1.1
    n = int(math.ceil(core / spacing)) + 3
    for _ in range(4):
        pad = n // 8
        need = int(math.ceil(core / spacing)) + 2 * pad + 1
        if need <= n:
            break
        n = need
    if n_cap is not None and n > n_cap:
        raise GridError(f"tail grid needs n_cells={n} > cap {n_cap}")
    half = (n - 1) * spacing / 2
    return GridSpec(n_cells=n, spacing=spacing, origin=(-half, -half))


def annulus_tail_replicate(xi: float, q_ref: float, r: float, master_seed: int,
                           replicate: int, inner_efold: float = 0.5,
                           n_cap: int | None = None,
                           shift: float = 0.0) -> tuple[float, float]:
    """Normalized (across, around) distances for one fresh field.

    shift applies the Weyl transform h -> h + c in its lattice-exact form
    (mollified field and circle averages both move by c); the normalized
    outputs must not depend on it.
    """
    spec = tail_grid_spec(r, n_cap=n_cap)
    fld = sample_dgff(spec, replicate_seed(hash_params(master_seed, r), replicate))
    eps = 4 * spec.spacing
    mf = mollify(fld, eps)
    if shift:
        mf = MollifiedField(base=mf.base, epsilon=mf.epsilon, values=mf.values + shift)
    lat = WeightedLattice(mf, xi=xi)
    z = (0.0, 0.0)
    ann = AnnulusSpec(center=z, r_inner=r * math.exp(-inner_efold), r_outer=r)
    h_r = circle_average(fld, z, r) + shift
    norm = r ** (xi * q_ref) * math.exp(xi * h_r)
    d_across = distance_across(lat, ann).value
    d_around = distance_around(lat, ann).value
    return d_across / norm, d_around / norm


def hash_params(master_seed: int, *vals) -> int:
    ent = [int(master_seed) & (2**64 - 1), 0xC0]
    for v in vals:
        ent.append(int(np.float64(v).view(np.uint64)))
    ss = np.random.SeedSequence(entropy=tuple(ent))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def annulus_tail_stats(xi: float, Q_ref: float, r_list, S_grid, replicates: int,
                       master_seed: int = 0, n_cap: int | None = None,
                       samples: dict | None = None) -> AnnulusTailRun:
    """Upper/lower tail curves of median-normalized annulus distances."""
    if replicates < 500 and samples is None:
        raise ValueError("need at least 500 replicates")
    r_list = np.asarray(r_list, float)
    S_grid = np.asarray(S_grid, float)
    run = AnnulusTailRun(r_list=r_list, S_grid=S_grid, xi=xi, q_ref=Q_ref)
    for r in r_list:
        if samples is not None:
            acr, arn = samples[float(r)]
        else:
            vals = [annulus_tail_replicate(xi, Q_ref, float(r), master_seed, i,
                                           n_cap=n_cap)
                    for i in range(replicates)]
            acr = np.asarray([v[0] for v in vals])
            arn = np.asarray([v[1] for v in vals])
        for kind, arr in (("across", acr), ("around", arn)):
            med = float(np.median(arr))
            rel = arr / med
            run.normalized[(float(r), kind)] = rel
            run.exceedance[(float(r), kind)] = _tail_curves(rel, S_grid)
            run.fits[(float(r), kind)] = _tail_fits(rel, S_grid)
    return run


def _tail_curves(rel: np.ndarray, S_grid: np.ndarray) -> dict:
    total = rel.size
    upper = np.asarray([(rel > s).sum() for s in S_grid])
    lower = np.asarray([(rel < 1.0 / s).sum() for s in S_grid])
    return {
        "S": S_grid,
        "upper_count": upper, "lower_count": lower, "total": total,
        "upper_prob": np.where(upper == 0, np.nan, upper / total),
        "lower_prob": np.where(lower == 0, np.nan, lower / total),
        "upper_censored": upper == 0, "lower_censored": lower == 0,
    }


def _tail_fits(rel: np.ndarray, S_grid: np.ndarray) -> dict:
    """Decay-rate fits for both tails.

    rate_logS2: slope of log P against (log S)^2 (negative when the tail is
    at most lognormal); loglog_slope: slope of log(-log P) against loglog S
    (about 2 for exp(-c (log S)^2) decay, smaller when a loglog correction
    slows the tail).
    """
    out = {}
    for side in ("upper", "lower"):
        if side == "upper":
            p = np.asarray([(rel > s).mean() for s in S_grid])
        else:
            p = np.asarray([(rel < 1.0 / s).mean() for s in S_grid])
        usable = (p > 0) & (p < 1) & (S_grid > 1.0)
        fit = {"rate_logS2": math.nan, "loglog_slope": math.nan,
               "points": int(usable.sum())}
        if usable.sum() >= 3:
            s = S_grid[usable]
            y = np.log(p[usable])
            fit["rate_logS2"], _, _ = _ols_line(np.log(s) ** 2, y)
            pos = y < 0
            if pos.sum() >= 3:
                fit["loglog_slope"], _, _ = _ols_line(
                    np.log(np.log(s[pos])), np.log(-y[pos]))
        out[side] = fit
    return out


# ---------------------------------------------------------------------------
# local regularity diagnostic (four-component maximum)


@dataclass
class MzReport:
    t: float
    xi: float
    q_ref: float
    m_samples: np.ndarray
    increments: np.ndarray
    correlation: float
    null_band: float
    passed: bool
    degenerate: bool
    replicates: int
    components: dict = field(default_factory=dict)


def mz_grid_spec(t: float, ring_cells: float = 2.2, base_efold: float = 0.15,
                 n_cap: int | None = None) -> GridSpec:
    """Grid resolving the thin ring annulus at scale t and the recentering
    circle at radius e^{-(t-base_efold)}.

    The ring thickness is about 0.6% of e^{-t}, so resolving it while also
    fitting the recentering circle pins the cell count near the desk cap;
    ring_cells and base_efold are chosen to stay just under it.
    """
    ring_thickness = math.exp(-t) * (math.exp(-0.5) - math.exp(-0.51))
    spacing = ring_thickness / ring_cells
    r_base = math.exp(-(t - base_efold))
    core = 2.05 * r_base
    n = int(math.ceil(core / spacing)) + 3
    for _ in range(4):
        pad = max(n // 16, 2)
        need = int(math.ceil(core / spacing)) + 2 * pad + 1
        if need <= n:
            break
        n = need
    if n_cap is not None and n > n_cap:
        raise GridError(f"mz grid needs n_cells={n} > cap {n_cap}")
    half = (n - 1) * spacing / 2
    return GridSpec(n_cells=n, spacing=spacing, origin=(-half, -half),
                    padding_cells=max(n // 16, 2))


def mz_replicate(xi: float, t: float, q_ref: float, master_seed: int, replicate: int,
                 base_efold: float = 0.2, n_cap: int | None = None,
                 dependent_control: bool = False) -> tuple[float, float, dict]:
    """One sample of the four-component maximum and the radial increment.

    With dependent_control=True the distance components skip the circle
    average recentering, which plants a dependence on the increment that the
    correlation test must flag.
    """
    spec = mz_grid_spec(t, base_efold=base_efold, n_cap=n_cap)
    fld = sample_dgff(spec, replicate_seed(hash_params(master_seed, t, xi), replicate))
    eps = 4 * spec.spacing
    mf = mollify(fld, eps)
    lat = WeightedLattice(mf, xi=xi)
    z = (0.0, 0.0)
    r_t = math.exp(-t)
    h_t = circle_average(fld, z, r_t)
    h_base = circle_average(fld, z, math.exp(-(t - base_efold)))
    increment = h_t - h_base

    recenter = 0.0 if dependent_control else h_t
    pref = math.exp(-xi * recenter + xi * q_ref * t)
    ring = AnnulusSpec(center=z, r_inner=r_t * math.exp(-0.51), r_outer=r_t * math.exp(-0.5))
    shell = AnnulusSpec(center=z, r_inner=r_t * math.exp(-A_PARALLEL_EFOLDS), r_outer=r_t)
    c1 = pref * distance_around(lat, ring).value
    c2 = pref * distance_across(lat, shell).value
    c3 = 1.0 / c2
    c4 = _oscillation_component(fld, z, t, r_t)
    comps = {"around_ring": c1, "across_shell": c2, "across_reciprocal": c3,
             "oscillation": c4}
    return max(comps.values()), increment, comps


def _oscillation_component(fld, z, t, r_t) -> float:
    """sup over (r, w) of exp|h_r(w) - h_{e^-t}(z)| on a coarse sample grid."""
    h_t = circle_average(fld, z, r_t)
    spacing = fld.spec.spacing
    best = 0.0
    for r in np.exp(-np.linspace(A_PARALLEL_EFOLDS, 0.0, 5)) * r_t:
        if r < 2 * spacing:
            continue
        room = r_t - r
        if room < spacing:
            pts = np.asarray([z])
        else:
            g = np.linspace(-room, room, 5)
            gx, gy = np.meshgrid(g, g, indexing="ij")
            keep = np.hypot(gx, gy) <= room
            pts = np.column_stack([z[0] + gx[keep], z[1] + gy[keep]])
        vals = circle_average_batch(fld, pts, r)
        best = max(best, float(np.max(np.abs(vals - h_t))))
    return math.exp(best)


def m_z_diagnostic(xi: float, t: float, replicates: int, master_seed: int = 0,
                   q_ref: float = 2.0, base_efold: float = 0.2,
                   n_cap: int | None = None, dependent_control: bool = False,
                   samples: tuple | None = None) -> MzReport:
    """Correlation test between the local-regularity maximum and the radial
    increment that the locality argument says it is independent of."""
    if samples is not None:
        m, incr = samples
    else:
        rows = [mz_replicate(xi, t, q_ref, master_seed, i, base_efold, n_cap,
                             dependent_control)
                for i in range(replicates)]
        m = np.asarray([r[0] for r in rows])
        incr = np.asarray([r[1] for r in rows])
    if np.std(m) == 0 or np.std(incr) == 0:
        return MzReport(t=t, xi=xi, q_ref=q_ref, m_samples=m, increments=incr,
                        correlation=math.nan, null_band=math.nan, passed=False,
                        degenerate=True, replicates=len(m))
    # correlate log M: strictly monotone in M, so independence is preserved
    # and the heavy tail of M does not starve the sample correlation
    lm = np.log(m)
    corr = float(np.corrcoef(lm, incr)[0, 1])
    band = 3.0 / math.sqrt(len(m))
    return MzReport(t=t, xi=xi, q_ref=q_ref, m_samples=m, increments=incr,
                    correlation=corr, null_band=band, passed=abs(corr) < band,
                    degenerate=False, replicates=len(m))


# ---------------------------------------------------------------------------
# modulus of continuity


def modulus_grid_spec(sep_max: float, sep_min: float, cells_per_sep_min: int = 12,
                      n_cap: int | None = None) -> GridSpec:
    spacing = sep_min / cells_per_sep_min
    core = 2.2 * sep_max
    n = int(math.ceil(core / spacing)) + 3
    for _ in range(4):
        pad = n // 8
        need = int(math.ceil(core / spacing)) + 2 * pad + 1
        if need <= n:
            break
        n = need
    if n_cap is not None and n > n_cap:
        raise GridError(f"modulus grid needs n_cells={n} > cap {n_cap}")
    half = (n - 1) * spacing / 2
    return GridSpec(n_cells=n, spacing=spacing, origin=(-half, -half))


HOT_MESH_CAP = 80


def modulus_pairs_replicate(xi: float, seps, pair_budget: int, master_seed: int,
                            replicate: int, hot_fraction: float = 0.75,
                            n_cap: int | None = None,
                            cells_per_sep: int = 12) -> dict[float, np.ndarray]:
    """Distances for the pair cloud of one replicate, keyed by separation.

    hot_fraction of the budget is centered on the highest circle-average
    sites of this replicate's own field, scored on a mesh refined with the
    separation (the bin max chases a spatial maximum, and quasi-random pairs
    alone undersample it badly); the rest is quasi-random.
    """
    seps = sorted(seps, reverse=True)
    spec = modulus_grid_spec(seps[0], seps[-1], cells_per_sep_min=cells_per_sep,
                             n_cap=n_cap)
    seed = replicate_seed(hash_params(master_seed, xi, 0x30D), replicate)
    fld = sample_dgff(spec, seed)
    mf = mollify(fld, 4 * spec.spacing)
    lat = WeightedLattice(mf, xi=xi)
    gen = rng.stream(seed, rng.PAIRS)
    box = spec.unpadded_box()
    out: dict[float, np.ndarray] = {}
    n_hot = int(round(pair_budget * hot_fraction))
    n_qr = pair_budget - n_hot
    for sep in seps:
        margin = sep / 2 + 2 * spec.spacing
        lo = (box[0] + margin, box[1] + margin)
        hi = (box[2] - margin, box[3] - margin)
        centers = np.column_stack([gen.uniform(lo[0], hi[0], n_qr),
                                   gen.uniform(lo[1], hi[1], n_qr)])
        if n_hot:
            m = min(HOT_MESH_CAP, max(12, int((hi[0] - lo[0]) / (sep / 2))))
            mesh = np.column_stack([g.ravel() for g in np.meshgrid(
                np.linspace(lo[0], hi[0], m), np.linspace(lo[1], hi[1], m),
                indexing="ij")])
            hvals = circle_average_batch(fld, mesh, max(sep / 2, 2 * spec.spacing))
            hot = mesh[np.argsort(hvals)[-n_hot:]]
            centers = np.vstack([centers, hot])
        angles = gen.uniform(0, 2 * np.pi, len(centers))
        offs = 0.5 * sep * np.column_stack([np.cos(angles), np.sin(angles)])
        dists = np.empty(len(centers))
        for i, (c, o) in enumerate(zip(centers, offs)):
            dists[i] = distance(lat, (c[0] - o[0], c[1] - o[1]),
                                (c[0] + o[0], c[1] + o[1])).value
        out[sep] = dists
    return out


def modulus_fit(xi: float, pair_budget: int = 64, scale_range=(0.4, 3.4),
                replicates: int = 12, master_seed: int = 0,
                bins_per_efold: float = 2.0, n_cap: int | None = None,
                cells_per_sep: int = 16,
                pair_samples: list | None = None) -> ModulusFit:
    """Worst-pair modulus fit across dyadic separation bins.

    Fits log(per-replicate bin max) against both models; the separations must
    span at least 3 e-folds.  Per-bin max/min/median over the quasi-random
    stratum are reported in bin_table for the interval diagnostics.
    """
    t0, t1 = scale_range
    if t1 - t0 < 3.0 - 1e-9:
        raise ValueError("separations must span at least 3 e-folds")
    ts = np.arange(t0, t1 + 1e-9, 1.0 / bins_per_efold)
    seps = list(np.exp(-ts))
    if pair_samples is None:
        pair_samples = [modulus_pairs_replicate(xi, seps, pair_budget, master_seed, r,
                                                n_cap=n_cap,
                                                cells_per_sep=cells_per_sep)
                        for r in range(replicates)]
    sep_fit, d_fit = [], []
    bin_table: dict[float, dict] = {}
    for sep in seps:
        per_rep = np.asarray([np.max(s[sep]) for s in pair_samples])
        pooled = np.concatenate([s[sep] for s in pair_samples])
        bin_table[sep] = {
            "max": float(pooled.max()), "min": float(pooled.min()),
            "median": float(np.median(pooled)),
            "rep_max": per_rep,
        }
        sep_fit.extend([sep] * len(per_rep))
        d_fit.extend(per_rep)
    sep_fit = np.asarray(sep_fit)
    d_fit = np.asarray(d_fit)
    fits = fit_modulus_models(sep_fit, d_fit)
    return ModulusFit(
        pair_separations=sep_fit, distances=d_fit,
        theta_hat=fits["theta_hat"], theta_stderr=fits["theta_stderr"],
        model=fits["selected"], chi_hat=fits["chi_hat"], chi_stderr=fits["chi_stderr"],
        ssr_log_power=fits["ssr_log_power"], ssr_euclid_power=fits["ssr_euclid_power"],
        theta_intercept=fits["theta_intercept"], chi_intercept=fits["chi_intercept"],
        bin_table=bin_table)


def modulus_interval_diagnostics(fit: ModulusFit, xi_c: float = 0.4162) -> dict:
    """Per-bin worst/best normalized distances against the theoretical
    exponent interval (theta <= xi_c/4 for the max, theta' >= 3 xi_c/4 for
    the min); reported as intervals, never asserted."""
    seps = np.asarray(sorted(fit.bin_table, reverse=True))
    mx = np.asarray([fit.bin_table[s]["max"] for s in seps])
    mn = np.asarray([fit.bin_table[s]["min"] for s in seps])
    th_max, _, _ = _ols_line(np.log(np.log(1 / seps)), np.log(mx))
    th_min, _, _ = _ols_line(np.log(np.log(1 / seps)), np.log(mn))
    return {
        "theta_from_bin_max": -th_max,
        "theta_from_bin_min": -th_min,
        "upper_reference": xi_c / 4,
        "lower_reference": 3 * xi_c / 4,
    }


# ---------------------------------------------------------------------------
# supercritical probe


@dataclass
class SupercritReport:
    xi: float
    n_list: list[int]
    ratio_by_n: dict
    replicates: int


def supercrit_grid_spec(r_max: float, r_min: float, mesh_spread: float = 1.2,
                        cells_per_radius: int = 12,
                        n_cap: int | None = None) -> GridSpec:
    """Domain holding a mesh of exit-distance probes: the mesh box has side
    mesh_spread * r_max and every probe's radius-r_max ball must fit."""
    spacing = r_min / cells_per_radius
    core = (mesh_spread + 2.2) * r_max
    n = int(math.ceil(core / spacing)) + 3
    for _ in range(4):
        pad = n // 8
        need = int(math.ceil(core / spacing)) + 2 * pad + 1
        if need <= n:
            break
        n = need
    if n_cap is not None and n > n_cap:
        raise GridError(f"supercrit grid needs n_cells={n} > cap {n_cap}")
    half = (n - 1) * spacing / 2
    return GridSpec(n_cells=n, spacing=spacing, origin=(-half, -half))


def supercritical_probe_replicate(xi: float, n_list, master_seed: int, replicate: int,
                                  mesh_count: int = 6, n_cap: int | None = None,
                                  cells_per_radius: int = 12,
                                  spike: tuple | None = None) -> dict[int, float]:
    """max/median over mesh of D(z, boundary of B_z(e^-n)), one replicate."""
    n_list = sorted(n_list)
    r_max = math.exp(-n_list[0])
    r_min = math.exp(-n_list[-1])
    spread = 1.2
    spec = supercrit_grid_spec(r_max, r_min, spread, cells_per_radius, n_cap)
    fld = sample_dgff(spec, replicate_seed(hash_params(master_seed, xi, 0x5C), replicate))
    if spike is not None:
        from .extremes import inject_spike

        # blob wide enough to survive mollification and cover the smallest
        # probe ball, so the spiked point's exit distance dominates
        fld = inject_spike(fld, spike,
                           half_width_cells=max(2, int(0.6 * r_min / spec.spacing)))
    lat = WeightedLattice(mollify(fld, 4 * spec.spacing), xi=xi)
    g = np.linspace(-spread * r_max / 2, spread * r_max / 2, mesh_count)
    out = {}
    for n in n_list:
        r = math.exp(-n)
        vals = []
        for zx in g:
            for zy in g:
                ring = lat.ring_indices((zx, zy), r)
                src = lat.vertex_index((zx, zy))
                dist, _, hit = lat._run(lat._all_mask, None, [src], ring, False)
                vals.append(float(dist[hit]))
        vals = np.asarray(vals)
        out[n] = float(vals.max() / np.median(vals))
    return out


def supercritical_discontinuity_probe(xi: float, n_list=(1, 2, 3), mesh_count: int = 6,
                                      replicates: int = 20, master_seed: int = 0,
                                      n_cap: int | None = None,
                                      cells_per_radius: int = 12,
                                      samples: list | None = None) -> SupercritReport:
    """Growth of the max/median ratio of small-ball exit distances.

    Heavy-tailed growth across n separates the supercritical phase from the
    bounded subcritical baseline.
    """
    if samples is None:
        samples = [supercritical_probe_replicate(xi, n_list, master_seed, r,
                                                 mesh_count, n_cap, cells_per_radius)
                   for r in range(replicates)]
    ratio_by_n = {n: np.asarray([s[n] for s in samples]) for n in sorted(n_list)}
    return SupercritReport(xi=xi, n_list=sorted(n_list), ratio_by_n=ratio_by_n,
                           replicates=len(samples))
