import math

import numpy as np
import pytest

from lfpp_lab.continuity import (AnnulusTailRun, annulus_tail_replicate,
                                 annulus_tail_stats, fit_modulus_models,
                                 m_z_diagnostic, modulus_fit,
                                 modulus_interval_diagnostics,
                                 modulus_pairs_replicate, mz_replicate,
                                 supercritical_probe_replicate)


# ---------------------------------------------------------------------------
# model fits: synthetic exact recovery


def test_log_power_model_exact_recovery():
    seps = np.exp(-np.asarray([1.0, 1.5, 2.0, 2.5, 3.0, 4.0]))
    d = (np.log(1.0 / seps)) ** (-0.2)
    fit = fit_modulus_models(seps, d)
    assert fit["theta_hat"] == pytest.approx(0.2, abs=1e-10)
    assert fit["ssr_log_power"] < 1e-20
    assert fit["selected"] == "log-power"


def test_euclid_power_model_exact_recovery():
    seps = np.exp(-np.asarray([1.0, 1.5, 2.0, 2.5, 3.0, 4.0]))
    d = 3.0 * seps**0.45
    fit = fit_modulus_models(seps, d)
    assert fit["chi_hat"] == pytest.approx(0.45, abs=1e-10)
    assert fit["ssr_euclid_power"] < 1e-20
    assert fit["selected"] == "euclid-power"


def test_model_fit_rejects_bad_separations():
    with pytest.raises(ValueError):
        fit_modulus_models([0.5, 1.5], [1.0, 2.0])


def test_modulus_fit_requires_three_efolds():
    with pytest.raises(ValueError):
        modulus_fit(0.4, scale_range=(1.0, 3.5), replicates=2, pair_samples=[])


def test_modulus_fit_on_synthetic_pair_samples():
    seps = list(np.exp(-np.arange(1.0, 4.5, 0.5)))
    theta = 0.3
    samples = []
    for rep in range(3):
        samples.append({s: np.full(4, (math.log(1 / s)) ** (-theta)) for s in seps})
    fit = modulus_fit(0.4, scale_range=(1.0, 4.0), pair_samples=samples)
    assert fit.theta_hat == pytest.approx(theta, abs=1e-8)
    assert fit.model == "log-power"
    diag = modulus_interval_diagnostics(fit)
    assert diag["theta_from_bin_max"] == pytest.approx(theta, abs=1e-8)
    assert diag["theta_from_bin_min"] == pytest.approx(theta, abs=1e-8)


# ---------------------------------------------------------------------------
# annulus tails


def test_tail_weyl_shift_invariance_exact():
    r = math.exp(-2)
    base = annulus_tail_replicate(0.4162, 2.0, r, master_seed=3, replicate=1)
    shifted = annulus_tail_replicate(0.4162, 2.0, r, master_seed=3, replicate=1,
                                     shift=2.3)
    assert shifted[0] == pytest.approx(base[0], rel=1e-12)
    assert shifted[1] == pytest.approx(base[1], rel=1e-12)


def test_tail_run_curves_and_censoring():
    rng = np.random.default_rng(1)
    samples = {0.1: (rng.lognormal(0, 0.5, 600), rng.lognormal(0, 0.5, 600))}
    run = annulus_tail_stats(0.4, 2.0, [0.1], [1.2, 2.0, 1e6], 600,
                             samples=samples)
    for kind in ("across", "around"):
        curves = run.exceedance[(0.1, kind)]
        assert curves["upper_censored"][2]
        assert curves["lower_censored"][2]
        # S = 1.2: both tails populated for a median-normalized lognormal
        assert 0 < curves["upper_prob"][0] < 1
        assert 0 < curves["lower_prob"][0] < 1
    with pytest.raises(ValueError):
        annulus_tail_stats(0.4, 2.0, [0.1], [2.0], 100)  # too few replicates


def test_tail_median_normalization():
    rng = np.random.default_rng(2)
    arr = rng.lognormal(3.0, 1.0, 501)
    samples = {0.2: (arr, arr)}
    run = annulus_tail_stats(0.4, 2.0, [0.2], [2.0], 501, samples=samples)
    rel = run.normalized[(0.2, "across")]
    assert np.median(rel) == pytest.approx(1.0, abs=1e-12)


# ---------------------------------------------------------------------------
# m_z diagnostic


def test_mz_degenerate_on_constant_samples():
    rep = m_z_diagnostic(0.4, 1.0, 100, samples=(np.ones(100), np.ones(100)))
    assert rep.degenerate
    assert not rep.passed


def test_mz_correlation_machinery():
    rng = np.random.default_rng(3)
    incr = rng.normal(0, 1, 3000)
    m_ind = np.exp(rng.normal(0, 1, 3000))
    rep = m_z_diagnostic(0.4, 1.0, 3000, samples=(m_ind, incr))
    assert rep.passed
    m_dep = np.exp(0.4 * incr + 0.3 * rng.normal(0, 1, 3000))
    rep2 = m_z_diagnostic(0.4, 1.0, 3000, samples=(m_dep, incr))
    assert not rep2.passed


def test_mz_replicate_components_positive_and_control_differs():
    m, incr, comps = mz_replicate(0.4162, 1.0, 2.0, master_seed=21, replicate=0)
    assert m >= max(comps.values()) - 1e-12
    assert all(v > 0 for v in comps.values())
    m2, incr2, comps2 = mz_replicate(0.4162, 1.0, 2.0, master_seed=21, replicate=0,
                                     dependent_control=True)
    assert incr2 == incr  # same field
    assert comps2["across_shell"] != comps["across_shell"]  # no recentering


# ---------------------------------------------------------------------------
# pair sampling and supercritical probe


def test_modulus_pairs_structure():
    seps = list(np.exp(-np.asarray([0.5, 1.5, 2.5, 3.5])))
    out = modulus_pairs_replicate(0.3, seps, pair_budget=8, master_seed=5,
                                  replicate=0, cells_per_sep=2)
    assert set(out) == set(seps)
    for sep, dists in out.items():
        assert dists.shape == (8,)
        assert np.all(dists > 0)


def test_supercritical_spike_control():
    r_max = math.exp(-1)
    g = np.linspace(-1.2 * r_max / 2, 1.2 * r_max / 2, 4)
    mesh_pt = (g[1], g[2])  # an actual probe location
    ratios = supercritical_probe_replicate(0.6, [1, 2], master_seed=7, replicate=0,
                                           mesh_count=4)
    spiked = supercritical_probe_replicate(0.6, [1, 2], master_seed=7, replicate=0,
                                           mesh_count=4, spike=mesh_pt)
    # the spiked probe's exit distance dominates the ensemble
    assert spiked[2] > ratios[2] * 2
