"""Experiment harness: validated configs in, deterministic artifacts out.

A run directory contains records.csv (one row per replicate statistic,
canonically sorted), summary.json (fits, standard errors, built-in check
outcomes), and manifest.json (config echo, schema version, code version,
timing, status).  Jobs are replicate-parallel; results are reduced after a
deterministic sort by job key, so records.csv is byte-identical no matter
how many workers ran or whether the run was interrupted and resumed.
Wall-clock timing never enters records.csv for the same reason.

Config files are TOML: top-level keys kind, master_seed, output_dir,
resource_profile, plus a [parameters] table whose entries are kind-specific
(see KIND_DEFAULTS).  CLI overrides use --set key=value with dotted keys for
parameters (e.g. --set parameters.replicates=31).
"""
from __future__ import annotations

import json
import math
import os
import time

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from concurrent.futures import FIRST_COMPLETED, ProcessPoolExecutor, wait
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, bridges, continuity, extremes, scaling
from . import fields as fields_mod
from .fields import circle_average, replicate_seed, sample_dgff
from .greens import GreensOracle
from .grids import GridSpec

SCHEMA_VERSION = 1
RECORD_COLUMNS = ["kind", "parameters", "replicate", "statistic", "value", "seed"]

EXIT_VALIDATION = 2
EXIT_RESOURCE = 3
EXIT_RUNTIME = 1


class ConfigError(ValueError):
    exit_code = EXIT_VALIDATION


class ResourceError(RuntimeError):
    exit_code = EXIT_RESOURCE


@dataclass(frozen=True)
class ResourceProfile:
    name: str
    n_cells_cap: int
    field_replicates_cap: int
    path_replicates_cap: int


PROFILES = {
    "smoke": ResourceProfile("smoke", 128, 1000, 20_000),
    "desk": ResourceProfile("desk", 1024, 5000, 2_000_000),
    "large": ResourceProfile("large", 4096, 100_000, 10_000_000),
}

KINDS = ("covariance", "scaling", "maxstats", "bridge", "tail", "modulus",
         "supercrit", "mz", "independence")


@dataclass
class ExperimentConfig:
    kind: str
    master_seed: int
    output_dir: str
    resource_profile: str = "desk"
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown kind {self.kind!r}; expected one of {KINDS}")
        if self.resource_profile not in PROFILES:
            raise ConfigError(f"unknown resource_profile {self.resource_profile!r}")
        self.master_seed = int(self.master_seed)

    @property
    def profile(self) -> ResourceProfile:
        return PROFILES[self.resource_profile]

    def as_dict(self) -> dict:
        return {"kind": self.kind, "master_seed": self.master_seed,
                "output_dir": self.output_dir,
                "resource_profile": self.resource_profile,
                "parameters": self.parameters}


@dataclass
class ExperimentRecord:
    kind: str
    parameters: dict
    replicate: int
    statistic: str
    value: float | str
    seed: int
    wall_ms: int = 0  # in-memory only; deliberately absent from records.csv

    def csv_row(self) -> list[str]:
        params = ";".join(f"{k}={_fmt(v)}" for k, v in sorted(self.parameters.items()))
        return [self.kind, params, str(self.replicate), self.statistic,
                _fmt(self.value), str(self.seed)]

    def sort_key(self):
        return (self.kind, self.csv_row()[1], self.statistic, self.replicate)


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    f = float(v)
    if math.isnan(f):
        return "censored"
    return repr(f)


# ---------------------------------------------------------------------------
# config loading


def load_config(path, overrides: list[str] | None = None) -> ExperimentConfig:
    with open(path, "rb") as f:
        raw = tomllib.load(f)
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, val = item.split("=", 1)
        _apply_override(raw, key.strip(), val.strip())
    return config_from_dict(raw)


def _apply_override(raw: dict, key: str, val: str) -> None:
    parts = key.split(".")
    tgt = raw
    for p in parts[:-1]:
        tgt = tgt.setdefault(p, {})
    try:
        parsed = json.loads(val)
    except json.JSONDecodeError:
        parsed = val
    tgt[parts[-1]] = parsed


def config_from_dict(raw: dict) -> ExperimentConfig:
    try:
        cfg = ExperimentConfig(
            kind=raw["kind"],
            master_seed=raw.get("master_seed", 0),
            output_dir=raw.get("output_dir", "results"),
            resource_profile=raw.get("resource_profile", "desk"),
            parameters=dict(raw.get("parameters", {})),
        )
    except KeyError as e:
        raise ConfigError(f"config missing required key {e}") from None
    merged = dict(KIND_DEFAULTS[cfg.kind])
    merged.update(cfg.parameters)
    cfg.parameters = merged
    VALIDATORS[cfg.kind](cfg.parameters, cfg.profile)
    return cfg


# ---------------------------------------------------------------------------
# kind implementations.  Each provides defaults, a validator, a job list,
# and a reducer.  Job functions are top-level so worker processes can
# unpickle them.

KIND_DEFAULTS: dict[str, dict] = {
    "covariance": {"n_cells": 256, "replicates": 2000, "n_pairs": 10},
    "scaling": {"xi_list": [0.2, 0.3, 0.4, 0.5], "eps_log_min": 2.0,
                "eps_log_max": 5.0, "eps_log_step": 0.5, "replicates": 31},
    "maxstats": {"n_list": [2, 3], "k": 1, "window": [0.0, 0.0, 1.0, 1.0],
                 "replicates": 500,
                 "S_grid": [-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0]},
    "bridge": {"T_list": [32.0, 64.0, 128.0], "alpha": 0.25, "beta": 2.5,
               "dt": 0.25, "replicates": 100_000},
    "tail": {"xi": 0.4162, "q_ref": 2.0, "r_list": [0.1353352832366127],
             "S_grid": [1.3, 1.6, 2.0, 2.5, 3.2, 4.0, 5.0, 6.5],
             "replicates": 500, "inner_efold": 0.5},
    "modulus": {"xi": 0.4162, "pair_budget": 64, "scale_range": [0.4, 3.4],
                "replicates": 12, "bins_per_efold": 2.0, "cells_per_sep": 16},
    "supercrit": {"xi_list": [0.2, 0.416, 0.6], "n_list": [1, 2, 3],
                  "mesh_count": 6, "replicates": 20, "cells_per_radius": 12},
    "mz": {"xi": 0.4162, "t": 1.0, "q_ref": 2.0, "base_efold": 0.15,
           "replicates": 2000, "control_replicates": 400},
    "independence": {"n_cells": 256, "replicates": 2000, "s": 0.5, "t": 1.5},
}


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


def _cap_fields(replicates: int, profile: ResourceProfile) -> None:
    if replicates > profile.field_replicates_cap:
        raise ResourceError(
            f"{replicates} field replicates exceed {profile.name} cap "
            f"{profile.field_replicates_cap}")


def _validate_covariance(p: dict, profile: ResourceProfile) -> None:
    _require(p["n_cells"] >= 16, "n_cells must be >= 16")
    _require(p["replicates"] >= 100, "covariance needs >= 100 replicates")
    _require(1 <= p["n_pairs"] <= 32, "n_pairs in [1, 32]")
    if p["n_cells"] > profile.n_cells_cap:
        raise ResourceError(f"n_cells {p['n_cells']} over {profile.name} cap")
    _cap_fields(p["replicates"], profile)


def _validate_scaling(p: dict, profile: ResourceProfile) -> None:
    _require(len(p["xi_list"]) >= 1 and all(x > 0 for x in p["xi_list"]),
             "xi_list must be positive")
    _require(p["replicates"] >= 31 and p["replicates"] % 2 == 1,
             "scaling replicates must be odd and >= 31")
    _require(p["eps_log_max"] - p["eps_log_min"] >= 2.0,
             "eps grid must span >= 2 e-folds")
    _require(p["eps_log_step"] > 0, "eps_log_step must be positive")
    n_pts = int(round((p["eps_log_max"] - p["eps_log_min"]) / p["eps_log_step"])) + 1
    _require(n_pts >= 4, "need >= 4 eps grid points")
    eps_min = math.exp(-p["eps_log_max"])
    spec = scaling.crossing_grid_spec(eps_min)  # raises nothing; check cap below
    if spec.n_cells > profile.n_cells_cap:
        raise ResourceError(
            f"finest eps grid needs n_cells={spec.n_cells} over {profile.name} cap")
    _cap_fields(p["replicates"], profile)


def _validate_maxstats(p: dict, profile: ResourceProfile) -> None:
    _require(all(n >= 1 for n in p["n_list"]), "n_list must be >= 1")
    _require(p["k"] >= 1, "k must be >= 1")
    _require(p["replicates"] >= 50, "maxstats needs >= 50 replicates")
    for n in p["n_list"]:
        spec = extremes.maxstat_grid_spec(n, p["k"], tuple(p["window"]))
        if spec.n_cells > profile.n_cells_cap:
            raise ResourceError(f"maxstats n={n} needs n_cells={spec.n_cells} over cap")
    _cap_fields(p["replicates"] * len(p["n_list"]), profile)


def _validate_bridge(p: dict, profile: ResourceProfile) -> None:
    _require(0 < p["dt"] <= 1, "dt in (0, 1]")
    _require(all(t >= 8 for t in p["T_list"]), "T >= 8")
    _require(p["beta"] >= p["alpha"] > 0, "need beta >= alpha > 0")
    if p["replicates"] > profile.path_replicates_cap:
        raise ResourceError(
            f"{p['replicates']} bridge paths exceed {profile.name} cap")


def _validate_tail(p: dict, profile: ResourceProfile) -> None:
    _require(p["xi"] > 0, "xi must be positive")
    _require(p["replicates"] >= 500, "tail needs >= 500 replicates")
    _require(all(r > 0 for r in p["r_list"]), "radii positive")
    for r in p["r_list"]:
        spec = continuity.tail_grid_spec(r)
        if spec.n_cells > profile.n_cells_cap:
            raise ResourceError(f"tail r={r} needs n_cells={spec.n_cells} over cap")
    _cap_fields(p["replicates"] * len(p["r_list"]), profile)


def _validate_modulus(p: dict, profile: ResourceProfile) -> None:
    _require(p["xi"] > 0, "xi must be positive")
    lo, hi = p["scale_range"]
    _require(hi - lo >= 3.0, "scale_range must span >= 3 e-folds")
    _require(p["pair_budget"] >= 8, "pair_budget >= 8")
    spec = continuity.modulus_grid_spec(math.exp(-lo), math.exp(-hi),
                                        cells_per_sep_min=p["cells_per_sep"])
    if spec.n_cells > profile.n_cells_cap:
        raise ResourceError(f"modulus needs n_cells={spec.n_cells} over cap")
    _cap_fields(p["replicates"], profile)


def _validate_supercrit(p: dict, profile: ResourceProfile) -> None:
    _require(all(x > 0 for x in p["xi_list"]), "xi must be positive")
    _require(p["replicates"] >= 5, "supercrit needs >= 5 replicates")
    ns = sorted(p["n_list"])
    spec = continuity.supercrit_grid_spec(math.exp(-ns[0]), math.exp(-ns[-1]),
                                          cells_per_radius=p["cells_per_radius"])
    if spec.n_cells > profile.n_cells_cap:
        raise ResourceError(f"supercrit needs n_cells={spec.n_cells} over cap")
    _cap_fields(p["replicates"] * len(p["xi_list"]), profile)


def _validate_mz(p: dict, profile: ResourceProfile) -> None:
    _require(p["xi"] > 0, "xi must be positive")
    _require(p["replicates"] >= 200, "mz needs >= 200 replicates")
    spec = continuity.mz_grid_spec(p["t"], base_efold=p["base_efold"])
    if spec.n_cells > profile.n_cells_cap:
        raise ResourceError(f"mz needs n_cells={spec.n_cells} over cap")
    _cap_fields(p["replicates"] + p["control_replicates"], profile)


def _validate_independence(p: dict, profile: ResourceProfile) -> None:
    _require(p["replicates"] >= 200, "independence needs >= 200 replicates")
    _require(0 < p["s"] < p["t"], "need 0 < s < t")
    if p["n_cells"] > profile.n_cells_cap:
        raise ResourceError(f"n_cells {p['n_cells']} over {profile.name} cap")
    _cap_fields(p["replicates"], profile)


VALIDATORS = {
    "covariance": _validate_covariance,
    "scaling": _validate_scaling,
    "maxstats": _validate_maxstats,
    "bridge": _validate_bridge,
    "tail": _validate_tail,
    "modulus": _validate_modulus,
    "supercrit": _validate_supercrit,
    "mz": _validate_mz,
    "independence": _validate_independence,
}


# -- job functions (top-level, picklable) -----------------------------------


def _covariance_pair_points(n_cells: int, n_pairs: int) -> list[tuple]:
    """Fixed interior vertex pairs, spread over the unpadded box; the last
    pair sits near the unpadded edge to exercise the padding choice."""
    pad = n_cells // 8
    lo, hi = pad + 1, n_cells - 2 - pad
    span = hi - lo
    rs = np.random.Generator(np.random.Philox(np.random.SeedSequence(0xC0FFEE)))
    pts = []
    for _ in range(n_pairs - 1):
        a = (lo + int(rs.integers(0, span)), lo + int(rs.integers(0, span)))
        b = (lo + int(rs.integers(0, span)), lo + int(rs.integers(0, span)))
        if a == b:
            b = (b[0] + 1, b[1])
        pts.append((a, b))
    edge = (lo, lo)
    pts.append((edge, (lo + max(2, span // 10), lo)))
    return pts


def _job_covariance(n_cells: int, n_pairs: int, master_seed: int,
                    block: int, block_size: int, replicates: int) -> list:
    spec = GridSpec(n_cells=n_cells, spacing=1.0 / n_cells)
    pairs = _covariance_pair_points(n_cells, n_pairs)
    out = []
    for r in range(block * block_size, min((block + 1) * block_size, replicates)):
        seed = replicate_seed(master_seed, r)
        fld = sample_dgff(spec, seed)
        prods = [float(fld.values[a] * fld.values[b]) for a, b in pairs]
        out.append((r, seed, prods))
    return out


def _job_scaling(xi_list, eps, master_seed, replicate, n_cap) -> list:
    costs = scaling.crossing_costs_for_replicate(xi_list, eps, master_seed,
                                                 replicate, n_cap)
    return [(replicate, scaling.field_seed(master_seed, eps, replicate), costs)]


def _job_maxstats(n, k, window, master_seed, replicate, n_cap) -> list:
    val = extremes.max_circle_average_replicate(n, k, tuple(window), master_seed,
                                                replicate, n_cap)
    seed = replicate_seed(extremes.hash_scale(master_seed, n, k), replicate)
    return [(replicate, seed, val)]


def _job_bridge(T, x, alpha, beta, dt, replicates, master_seed) -> list:
    run = bridges.simulate_bridge_occupation(T, x, alpha, beta, dt, replicates,
                                             master_seed)
    return [(run.occupation_samples.tolist(), run.acceptance_rate, run.attempted)]


def _job_tail(xi, q_ref, r, master_seed, replicate, inner_efold, n_cap) -> list:
    acr, arn = continuity.annulus_tail_replicate(xi, q_ref, r, master_seed, replicate,
                                                 inner_efold, n_cap)
    seed = replicate_seed(continuity.hash_params(master_seed, r), replicate)
    return [(replicate, seed, acr, arn)]


def _job_modulus(xi, seps, pair_budget, master_seed, replicate, n_cap,
                 cells_per_sep) -> list:
    res = continuity.modulus_pairs_replicate(xi, seps, pair_budget, master_seed,
                                             replicate, n_cap=n_cap,
                                             cells_per_sep=cells_per_sep)
    seed = replicate_seed(continuity.hash_params(master_seed, xi, 0x30D), replicate)
    return [(replicate, seed, {str(k): v.tolist() for k, v in res.items()})]


def _job_supercrit(xi, n_list, master_seed, replicate, mesh_count, n_cap,
                   cells_per_radius) -> list:
    res = continuity.supercritical_probe_replicate(xi, n_list, master_seed, replicate,
                                                   mesh_count, n_cap,
                                                   cells_per_radius)
    seed = replicate_seed(continuity.hash_params(master_seed, xi, 0x5C), replicate)
    return [(replicate, seed, {str(k): v for k, v in res.items()})]


def _job_mz(xi, t, q_ref, master_seed, replicate, base_efold, n_cap, control) -> list:
    m, incr, _ = continuity.mz_replicate(xi, t, q_ref, master_seed, replicate,
                                         base_efold, n_cap,
                                         dependent_control=control)
    seed = replicate_seed(continuity.hash_params(master_seed, t, xi), replicate)
    return [(replicate, seed, m, incr)]


def _job_independence(n_cells, s, t, master_seed, replicate) -> list:
    spec = GridSpec(n_cells=n_cells, spacing=2.2 / n_cells)
    fld = sample_dgff(spec, replicate_seed(master_seed, replicate))
    center = spec.center
    h_in = circle_average(fld, center, math.exp(-t))
    incr = circle_average(fld, center, math.exp(-s)) - h_in
    pts = np.asarray(center) + fields_mod.PROBE_OFFSETS * math.exp(-t)
    vals = fields_mod._bilinear(fld.values, spec, pts[:, 0], pts[:, 1])
    return [(replicate, replicate_seed(master_seed, replicate), incr,
             (vals - h_in).tolist())]


# -- job planning and reduction ----------------------------------------------


def plan_jobs(cfg: ExperimentConfig) -> list[tuple]:
    """(key, fn, kwargs) triples; keys are JSON-serializable and unique."""
    p = cfg.parameters
    seed = cfg.master_seed
    cap = cfg.profile.n_cells_cap
    jobs: list[tuple] = []
    if cfg.kind == "covariance":
        block_size = 100
        blocks = (p["replicates"] + block_size - 1) // block_size
        for b in range(blocks):
            jobs.append((["block", b], _job_covariance,
                         dict(n_cells=p["n_cells"], n_pairs=p["n_pairs"],
                              master_seed=seed, block=b, block_size=block_size,
                              replicates=p["replicates"])))
    elif cfg.kind == "scaling":
        eps_grid = _eps_grid(p)
        for ei, eps in enumerate(eps_grid):
            for r in range(p["replicates"]):
                jobs.append((["eps", ei, r], _job_scaling,
                             dict(xi_list=p["xi_list"], eps=eps, master_seed=seed,
                                  replicate=r, n_cap=cap)))
    elif cfg.kind == "maxstats":
        for n in p["n_list"]:
            for r in range(p["replicates"]):
                jobs.append((["n", n, r], _job_maxstats,
                             dict(n=n, k=p["k"], window=p["window"],
                                  master_seed=seed, replicate=r, n_cap=cap)))
    elif cfg.kind == "bridge":
        for T in p["T_list"]:
            x = p.get("x", p["beta"] * math.log(T))
            jobs.append((["T", T], _job_bridge,
                         dict(T=T, x=x, alpha=p["alpha"], beta=p["beta"], dt=p["dt"],
                              replicates=p["replicates"], master_seed=seed)))
    elif cfg.kind == "tail":
        for r_ in p["r_list"]:
            for r in range(p["replicates"]):
                jobs.append((["r", r_, r], _job_tail,
                             dict(xi=p["xi"], q_ref=p["q_ref"], r=r_, master_seed=seed,
                                  replicate=r, inner_efold=p["inner_efold"],
                                  n_cap=cap)))
    elif cfg.kind == "modulus":
        lo, hi = p["scale_range"]
        ts = np.arange(lo, hi + 1e-9, 1.0 / p["bins_per_efold"])
        seps = [float(s) for s in np.exp(-ts)]
        for r in range(p["replicates"]):
            jobs.append((["rep", r], _job_modulus,
                         dict(xi=p["xi"], seps=seps, pair_budget=p["pair_budget"],
                              master_seed=seed, replicate=r, n_cap=cap,
                              cells_per_sep=p["cells_per_sep"])))
    elif cfg.kind == "supercrit":
        for xi in p["xi_list"]:
            for r in range(p["replicates"]):
                jobs.append((["xi", xi, r], _job_supercrit,
                             dict(xi=xi, n_list=p["n_list"], master_seed=seed,
                                  replicate=r, mesh_count=p["mesh_count"], n_cap=cap,
                                  cells_per_radius=p["cells_per_radius"])))
    elif cfg.kind == "mz":
        for r in range(p["replicates"]):
            jobs.append((["rep", r, 0], _job_mz,
                         dict(xi=p["xi"], t=p["t"], q_ref=p["q_ref"], master_seed=seed,
                              replicate=r, base_efold=p["base_efold"], n_cap=cap,
                              control=False)))
        for r in range(p["control_replicates"]):
            jobs.append((["rep", r, 1], _job_mz,
                         dict(xi=p["xi"], t=p["t"], q_ref=p["q_ref"], master_seed=seed,
                              replicate=r, base_efold=p["base_efold"], n_cap=cap,
                              control=True)))
    elif cfg.kind == "independence":
        for r in range(p["replicates"]):
            jobs.append((["rep", r], _job_independence,
                         dict(n_cells=p["n_cells"], s=p["s"], t=p["t"],
                              master_seed=seed, replicate=r)))
    return jobs


def _eps_grid(p: dict) -> list[float]:
    ks = np.arange(p["eps_log_min"], p["eps_log_max"] + 1e-9, p["eps_log_step"])
    return [float(math.exp(-k)) for k in ks]


def reduce_results(cfg: ExperimentConfig, results: dict) -> tuple[list, dict]:
    """Turn the per-job outputs into sorted records plus the summary dict."""
    p = cfg.parameters
    records: list[ExperimentRecord] = []
    summary: dict = {"kind": cfg.kind, "master_seed": cfg.master_seed,
                     "parameters": _json_params(p)}
    if cfg.kind == "covariance":
        rows = [row for out in results.values() for row in out]
        rows.sort()
        pairs = _covariance_pair_points(p["n_cells"], p["n_pairs"])
        prods = np.asarray([r[2] for r in rows])
        spec = GridSpec(n_cells=p["n_cells"], spacing=1.0 / p["n_cells"])
        oracle = GreensOracle(spec)
        checks = []
        for i, (a, b) in enumerate(pairs):
            emp = prods[:, i].mean()
            se = prods[:, i].std(ddof=1) / math.sqrt(len(rows))
            exact = oracle.covariance(a, b)
            z = (emp - exact) / se
            checks.append({"pair": i, "empirical": emp, "exact": exact,
                           "stderr": se, "z": z, "pass": bool(abs(z) <= 4.0)})
        summary["pairs"] = checks
        summary["covariance_check"] = "pass" if all(c["pass"] for c in checks) else "fail"
        for r, seed, vals in rows:
            for i, v in enumerate(vals):
                records.append(ExperimentRecord(cfg.kind, {"pair": i}, r,
                                                "pair_product", v, seed))
    elif cfg.kind == "scaling":
        eps_grid = _eps_grid(p)
        costs_by_eps = {}
        for ei, eps in enumerate(eps_grid):
            rows = sorted(row for key, out in results.items()
                          if key[0] == "eps" and key[1] == ei for row in out)
            costs_by_eps[float(eps)] = np.asarray([r[2] for r in rows])
            for rep, seed, costs in rows:
                for xi, c in zip(p["xi_list"], costs):
                    records.append(ExperimentRecord(
                        cfg.kind, {"xi": xi, "epsilon": eps}, rep,
                        "crossing_cost", c, seed))
        runs = scaling.estimate_Q_multi(p["xi_list"], eps_grid, p["replicates"],
                                        cfg.master_seed, costs_by_eps=costs_by_eps)
        per_xi = {}
        for xi, run in runs.items():
            per_xi[str(xi)] = {"q_hat": run.q_hat, "q_stderr": run.q_stderr,
                               "slope": run.slope, "intercept": run.intercept,
                               "medians": run.medians.tolist(),
                               "eps_grid": run.eps_grid.tolist()}
        summary["fits"] = per_xi
        xis = sorted(p["xi_list"])
        qs = [runs[x].q_hat for x in xis]
        summary["q_monotone_nonincreasing"] = bool(
            all(qs[i] >= qs[i + 1] - 1e-12 for i in range(len(qs) - 1)))
    elif cfg.kind == "maxstats":
        run = extremes.MaxStatRun(n_list=list(p["n_list"]), lattice_offset_exp=p["k"],
                                  replicates=p["replicates"])
        for n in p["n_list"]:
            rows = sorted(row for key, out in results.items()
                          if key[0] == "n" and key[1] == n for row in out)
            vals = np.asarray([r[2] for r in rows])
            run.add_scale(n, vals)
            for rep, seed, v in rows:
                records.append(ExperimentRecord(cfg.kind, {"n": n}, rep,
                                                "max_circle_average", v, seed))
        tail = extremes.max_tail_estimate(run, p["S_grid"])
        means = {n: float(np.mean(run.recentered[n])) for n in p["n_list"]}
        c_hat = float(np.mean(list(means.values())))
        summary["recentered_mean"] = {str(n): m for n, m in means.items()}
        summary["fitted_constant"] = c_hat
        summary["band_pass"] = bool(all(abs(m - c_hat) <= 1.0 for m in means.values()))
        iqrs = [run.iqr(n) for n in sorted(p["n_list"])]
        summary["iqr"] = {str(n): run.iqr(n) for n in p["n_list"]}
        summary["iqr_nonincreasing"] = bool(
            all(iqrs[i] >= iqrs[i + 1] - 1e-12 for i in range(len(iqrs) - 1)))
        summary["tail_slope"] = tail.slope
        summary["tail_slope_stderr"] = tail.slope_stderr
        summary["tail_curve"] = {
            "S": tail.S.tolist(),
            "count_exceed": tail.count_exceed.tolist(),
            "count_total": tail.count_total.tolist(),
        }
        summary["centering"] = {str(n): run.n_dictionary(n) for n in p["n_list"]}
    elif cfg.kind == "bridge":
        fits = {}
        for T in p["T_list"]:
            occ, rate, attempted = results[("T", T)][0]
            occ = np.asarray(occ)
            x = p.get("x", p["beta"] * math.log(T))
            run = bridges.BridgeRun(T=T, x=x, alpha=p["alpha"], beta=p["beta"],
                                    dt=p["dt"], replicates=len(occ),
                                    occupation_samples=occ,
                                    acceptance_rate=rate, attempted=attempted)
            fit = bridges.occupation_tail_fit(run)
            fits[str(T)] = {"c1_hat": fit.c1_hat, "slope": fit.slope,
                            "slope_stderr": fit.slope_stderr,
                            "negative_z": fit.negative_at,
                            "acceptance_rate": rate}
            for i, v in enumerate(occ):
                records.append(ExperimentRecord(cfg.kind, {"T": T}, i,
                                                "occupation", float(v),
                                                cfg.master_seed))
        summary["fits"] = fits
        c1s = [f["c1_hat"] for f in fits.values()]
        summary["stability_ratio"] = float(max(c1s) / min(c1s))
        summary["all_negative_3sigma"] = bool(
            all(f["negative_z"] >= 3.0 for f in fits.values()))
    elif cfg.kind == "tail":
        samples = {}
        for r_ in p["r_list"]:
            rows = sorted(row for key, out in results.items()
                          if key[0] == "r" and key[1] == r_ for row in out)
            acr = np.asarray([x[2] for x in rows])
            arn = np.asarray([x[3] for x in rows])
            samples[float(r_)] = (acr, arn)
            for rep, seed, a, b in rows:
                records.append(ExperimentRecord(cfg.kind, {"r": r_, "set": "across"},
                                                rep, "normalized_distance", a, seed))
                records.append(ExperimentRecord(cfg.kind, {"r": r_, "set": "around"},
                                                rep, "normalized_distance", b, seed))
        run = continuity.annulus_tail_stats(p["xi"], p["q_ref"], p["r_list"],
                                            p["S_grid"], len(rows), samples=samples)
        summary["fits"] = {f"{k[0]}:{k[1]}": v for k, v in run.fits.items()}
        summary["exceedance"] = {
            f"{k[0]}:{k[1]}": {kk: (vv.tolist() if isinstance(vv, np.ndarray) else vv)
                               for kk, vv in v.items()}
            for k, v in run.exceedance.items()}
    elif cfg.kind == "modulus":
        pair_samples = []
        rows = sorted(row for out in results.values() for row in out)
        for rep, seed, dists in rows:
            sample = {float(k): np.asarray(v) for k, v in dists.items()}
            pair_samples.append(sample)
            for sep, arr in sorted(sample.items(), reverse=True):
                for i, d in enumerate(arr):
                    records.append(ExperimentRecord(
                        cfg.kind, {"xi": p["xi"], "separation": sep, "pair": i},
                        rep, "pair_distance", float(d), seed))
        fit = continuity.modulus_fit(p["xi"], p["pair_budget"],
                                     tuple(p["scale_range"]), len(pair_samples),
                                     cfg.master_seed, p["bins_per_efold"],
                                     pair_samples=pair_samples)
        summary["theta_hat"] = fit.theta_hat
        summary["theta_stderr"] = fit.theta_stderr
        summary["chi_hat"] = fit.chi_hat
        summary["chi_stderr"] = fit.chi_stderr
        summary["ssr_log_power"] = fit.ssr_log_power
        summary["ssr_euclid_power"] = fit.ssr_euclid_power
        summary["theta_intercept"] = fit.theta_intercept
        summary["chi_intercept"] = fit.chi_intercept
        summary["model_selected"] = fit.model
        summary["interval_diagnostics"] = continuity.modulus_interval_diagnostics(fit)
        summary["bin_table"] = {
            repr(s): {k: (v.tolist() if isinstance(v, np.ndarray) else v)
                      for k, v in tbl.items()}
            for s, tbl in fit.bin_table.items()}
    elif cfg.kind == "supercrit":
        per_xi = {}
        for xi in p["xi_list"]:
            rows = sorted(row for key, out in results.items()
                          if key[0] == "xi" and key[1] == xi for row in out)
            samples = [{int(k): v for k, v in x[2].items()} for x in rows]
            rep_ = continuity.SupercritReport(xi=xi, n_list=sorted(p["n_list"]),
                                              ratio_by_n={n: np.asarray(
                                                  [s[n] for s in samples])
                                                  for n in sorted(p["n_list"])},
                                              replicates=len(samples))
            med = {str(n): float(np.median(rep_.ratio_by_n[n])) for n in rep_.n_list}
            per_xi[str(xi)] = {"median_ratio_by_n": med}
            for rep, seed, d in rows:
                for n_str, v in sorted(d.items()):
                    records.append(ExperimentRecord(
                        cfg.kind, {"xi": xi, "n": int(n_str)}, rep,
                        "max_median_ratio", float(v), seed))
        summary["per_xi"] = per_xi
    elif cfg.kind == "mz":
        for control in (0, 1):
            rows = sorted(row for key, out in results.items()
                          if key[2] == control for row in out)
            if not rows:
                continue
            m = np.asarray([x[2] for x in rows])
            incr = np.asarray([x[3] for x in rows])
            rep_ = continuity.m_z_diagnostic(p["xi"], p["t"], len(rows),
                                             q_ref=p["q_ref"], samples=(m, incr))
            label = "control" if control else "main"
            summary[label] = {"correlation": rep_.correlation,
                              "null_band": rep_.null_band,
                              "passed": rep_.passed,
                              "degenerate": rep_.degenerate,
                              "replicates": rep_.replicates}
            for rep, seed, mv, iv in rows:
                prm = {"control": control}
                records.append(ExperimentRecord(cfg.kind, prm, rep, "mz_max",
                                                float(mv), seed))
                records.append(ExperimentRecord(cfg.kind, prm, rep,
                                                "radial_increment", float(iv), seed))
        summary["independence_ok"] = bool(
            summary.get("main", {}).get("passed", False)
            and not summary.get("control", {}).get("passed", True))
    elif cfg.kind == "independence":
        rows = sorted(row for out in results.values() for row in out)
        incr = np.asarray([x[2] for x in rows])
        probes = np.asarray([x[3] for x in rows])
        rep_ = fields_mod.correlation_report(incr, probes)
        summary["correlations"] = rep_.correlations.tolist()
        summary["max_abs_correlation"] = rep_.max_abs_correlation
        summary["null_band"] = rep_.null_band
        summary["passed"] = rep_.passed
        for rep, seed, iv, pv in rows:
            records.append(ExperimentRecord(cfg.kind, {}, rep, "radial_increment",
                                            float(iv), seed))
            for i, v in enumerate(pv):
                records.append(ExperimentRecord(cfg.kind, {}, rep, f"probe{i}",
                                                float(v), seed))
    records.sort(key=lambda r: r.sort_key())
    return records, summary


def _json_params(p: dict) -> dict:
    return json.loads(json.dumps(p))


# ---------------------------------------------------------------------------
# execution, persistence, resume


def _atomic_write(path: Path, data: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(data)
    os.replace(tmp, path)


def write_records_csv(path: Path, records: list[ExperimentRecord]) -> None:
    lines = [",".join(RECORD_COLUMNS)]
    for r in records:
        lines.append(",".join(r.csv_row()))
    _atomic_write(path, "\n".join(lines) + "\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o)}")


def _sanitize(obj):
    """Strict-JSON form: censored/non-finite floats become null."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _sanitize(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    return obj


def _key_tag(key: list) -> str:
    return json.dumps(key, sort_keys=True)


def execute_jobs(jobs: list[tuple], jobs_width: int, partial_path: Path,
                 done: dict | None = None) -> dict:
    """Run jobs, appending one JSON line per completed job to partial_path.

    Completion order does not matter: the reduce sorts by job key.
    """
    results = dict(done or {})
    todo = [(key, fn, kw) for key, fn, kw in jobs if _key_tag(key) not in
            {_key_tag(list(k)) for k in results}]
    if not todo:
        return results

    def record(key, out):
        results[tuple(key)] = out
        with open(partial_path, "a") as f:
            f.write(json.dumps({"key": key, "out": out}, default=_json_default) + "\n")
            f.flush()

    if jobs_width <= 1:
        for key, fn, kw in todo:
            record(key, fn(**kw))
        return results
    with ProcessPoolExecutor(max_workers=jobs_width) as pool:
        pending = {}
        for key, fn, kw in todo:
            fut = pool.submit(fn, **kw)
            pending[fut] = key
        while pending:
            done_set, _ = wait(list(pending), return_when=FIRST_COMPLETED)
            for fut in done_set:
                key = pending.pop(fut)
                record(key, fut.result())
    return results


def _normalize_loaded(out):
    """JSON round-trips tuples to lists; restore the tuple rows jobs emit."""
    return [tuple(row) if isinstance(row, list) else row for row in out]


def load_partial(path: Path) -> dict:
    results = {}
    if not path.exists():
        return results
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            continue  # interrupted mid-write; recompute that job
        results[tuple(obj["key"])] = _normalize_loaded(obj["out"])
    return results


def run(config: ExperimentConfig | str | Path, jobs: int = 1,
        overrides: list[str] | None = None) -> Path:
    """Execute a campaign; returns the results directory."""
    if not isinstance(config, ExperimentConfig):
        config = load_config(config, overrides)
    t0 = time.monotonic()
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "code_version": __version__,
        "status": "partial",
        "config": config.as_dict(),
    }
    _atomic_write(out_dir / "manifest.json", json.dumps(manifest, indent=2,
                                                        default=_json_default))
    partial = out_dir / "records.partial.jsonl"
    job_list = plan_jobs(config)
    results = execute_jobs(job_list, jobs, partial, load_partial(partial))
    records, summary = reduce_results(config, results)
    write_records_csv(out_dir / "records.csv", records)
    _atomic_write(out_dir / "summary.json",
                  json.dumps(_sanitize(summary), indent=2, sort_keys=True,
                             allow_nan=False))
    manifest["status"] = "complete"
    manifest["wall_seconds"] = time.monotonic() - t0
    manifest["n_jobs"] = len(job_list)
    manifest["n_records"] = len(records)
    _atomic_write(out_dir / "manifest.json", json.dumps(manifest, indent=2,
                                                        default=_json_default))
    partial.unlink(missing_ok=True)
    return out_dir


def resume(results_dir: str | Path, jobs: int = 1) -> Path:
    """Complete the missing replicates of an interrupted run."""
    out_dir = Path(results_dir)
    mpath = out_dir / "manifest.json"
    if not mpath.exists():
        raise ConfigError(f"no manifest in {out_dir}")
    manifest = json.loads(mpath.read_text())
    if manifest.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError("manifest schema version mismatch")
    cfg = config_from_dict(manifest["config"])
    cfg.output_dir = str(out_dir)
    if manifest.get("status") == "complete":
        return out_dir
    return run(cfg, jobs=jobs)


def report(results_dir: str | Path) -> str:
    """Human-readable summary of a completed run."""
    out_dir = Path(results_dir)
    spath = out_dir / "summary.json"
    if not spath.exists():
        raise ConfigError(f"no summary.json in {out_dir}")
    s = json.loads(spath.read_text())
    lines = [f"kind: {s.get('kind')}  seed: {s.get('master_seed')}"]
    if s["kind"] == "scaling":
        lines.append(f"{'xi':>8} {'Q_hat':>9} {'stderr':>8}")
        for xi, fit in sorted(s["fits"].items(), key=lambda kv: float(kv[0])):
            lines.append(f"{float(xi):>8.4f} {fit['q_hat']:>9.4f} "
                         f"{fit['q_stderr']:>8.4f}")
        lines.append(f"monotone non-increasing: {s['q_monotone_nonincreasing']}")
    elif s["kind"] == "modulus":
        lines.append(f"theta_hat (log-power): {s['theta_hat']:.4f} "
                     f"+- {s['theta_stderr']:.4f}")
        lines.append(f"chi_hat (euclid-power): {s['chi_hat']:.4f} "
                     f"+- {s['chi_stderr']:.4f}")
        lines.append(f"SSR log-power {s['ssr_log_power']:.4f} vs euclid "
                     f"{s['ssr_euclid_power']:.4f} -> selected {s['model_selected']}")
    elif s["kind"] == "covariance":
        lines.append(f"covariance_check: {s['covariance_check']}")
        for c in s["pairs"]:
            lines.append(f"  pair {c['pair']}: emp {c['empirical']:.4f} "
                         f"exact {c['exact']:.4f} z {c['z']:+.2f}")
    elif s["kind"] == "bridge":
        for T, fit in sorted(s["fits"].items(), key=lambda kv: float(kv[0])):
            lines.append(f"T={float(T):>6.0f}: c1_hat {fit['c1_hat']:.3f} "
                         f"(z = {fit['negative_z']:.1f}), accept "
                         f"{fit['acceptance_rate']:.3f}")
        lines.append(f"stability ratio: {s['stability_ratio']:.2f}")
    elif s["kind"] == "maxstats":
        for n, m in sorted(s["recentered_mean"].items(), key=lambda kv: int(kv[0])):
            lines.append(f"n={n}: recentered mean {m:+.3f} IQR {s['iqr'][n]:.3f}")
        lines.append(f"tail slope {s['tail_slope']:.2f} "
                     f"+- {s['tail_slope_stderr']:.2f}")
    else:
        lines.append(json.dumps({k: v for k, v in s.items()
                                 if k not in ("parameters",)}, indent=2)[:2000])
    return "\n".join(lines)
