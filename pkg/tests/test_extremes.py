import math

import numpy as np
import pytest

from lfpp_lab.extremes import (MaxStatRun, inject_spike, max_circle_average,
                               max_circle_average_replicate, max_tail_estimate,
                               maxstat_grid_spec, mesh_points, recentering,
                               thick_point_scan)
from lfpp_lab.fields import sample_dgff
from lfpp_lab.grids import FieldGrid, GridSpec


def test_mesh_points_anchored_at_absolute_lattice():
    pts = mesh_points((0.0, 0.0, 1.0, 1.0), 0.25)
    assert len(pts) == 25
    assert (0.0, 0.0) in {tuple(p) for p in pts}
    assert (1.0, 1.0) in {tuple(p) for p in pts}


def test_recentering_both_dictionaries():
    run = MaxStatRun(n_list=[3], lattice_offset_exp=1, replicates=2)
    run.add_scale(3, np.asarray([5.0, 6.0]))
    d = run.n_dictionary(3)
    assert d["centering_n"] == pytest.approx(2 * 3 - 0.75 * math.log(3))
    assert d["centering_N"] == pytest.approx(d["centering_n"])  # N = e^n exactly
    assert np.allclose(run.recentered[3],
                       np.asarray([5.0, 6.0]) - (6 - 0.75 * math.log(3)))


def test_singleton_window_returns_that_circle_average():
    # window so small it contains one mesh point
    n, k = 2, 1
    mesh = math.exp(-(n + k))
    window = (-mesh / 4, -mesh / 4, mesh / 4, mesh / 4)
    spec = maxstat_grid_spec(n, k, window)
    from lfpp_lab.fields import circle_average, replicate_seed

    val = max_circle_average_replicate(n, k, window, master_seed=5, replicate=0)
    from lfpp_lab.extremes import hash_scale

    fld = sample_dgff(spec, replicate_seed(hash_scale(5, n, k), 0))
    direct = circle_average(fld, (0.0, 0.0), math.exp(-n))
    assert val == pytest.approx(direct, rel=1e-12)


def test_shared_seed_reproducible():
    window = (0.0, 0.0, 0.5, 0.5)
    a = max_circle_average([2], 1, window, 5, master_seed=11)
    b = max_circle_average([2], 1, window, 5, master_seed=11)
    assert np.array_equal(a.max_samples[2], b.max_samples[2])


def test_tail_censoring_and_trivial_probabilities():
    run = MaxStatRun(n_list=[2], lattice_offset_exp=1, replicates=100)
    rng = np.random.default_rng(0)
    run.add_scale(2, recentering(2) + rng.normal(0, 1.0, 100))
    curve = max_tail_estimate(run, S_grid=[-10.0, 0.0, 50.0])
    assert curve.prob[0] == 1.0            # below sample minimum
    assert curve.censored[2]               # above sample maximum
    assert np.isnan(curve.prob[2])
    assert curve.count_total[0] == 100


def test_iqr():
    run = MaxStatRun(n_list=[2], lattice_offset_exp=1, replicates=5)
    run.add_scale(2, np.asarray([1.0, 2.0, 3.0, 4.0, 5.0]) + recentering(2))
    assert run.iqr(2) == pytest.approx(2.0)


def test_thick_points_zero_field_no_flags():
    spec = GridSpec(n_cells=128, spacing=1.5 / 128)
    zero = FieldGrid(spec, np.zeros((128, 128)), seed=0)
    rep = thick_point_scan(zero, Q_ref=2.0, t_grid=[1.0, 1.5, 2.0], mesh_count=6)
    assert len(rep.flagged_points) == 0
    assert np.all(rep.flagged_fraction == 0.0)


def test_thick_points_spike_flagged():
    spec = GridSpec(n_cells=128, spacing=1.5 / 128)
    zero = FieldGrid(spec, np.zeros((128, 128)), seed=0)
    spiked = inject_spike(zero, spec.center, height=40.0, half_width_cells=6)
    rep = thick_point_scan(spiked, Q_ref=2.0, t_grid=[2.0, 2.5], mesh_count=7)
    assert len(rep.flagged_points) >= 1
    center_dist = min(np.hypot(p[0] - spec.center[0], p[1] - spec.center[1])
                      for p in rep.flagged_points)
    assert center_dist < 0.2


def test_thick_point_fraction_decreases_in_t():
    # P[h_{e^-t}(z)/t > q] = Phi-bar(q sqrt(t)) falls in t; check the Monte
    # Carlo trend on pooled mesh fractions
    spec = GridSpec(n_cells=160, spacing=1.6 / 160)
    t_grid = [1.0, 1.6, 2.2]
    fracs = np.zeros(len(t_grid))
    reps = 40
    for i in range(reps):
        fld = sample_dgff(spec, 1000 + i)
        rep = thick_point_scan(fld, Q_ref=1.0, t_grid=t_grid, mesh_count=6,
                               margin=0.0)
        fracs += rep.flagged_fraction
    fracs /= reps
    assert fracs[0] > fracs[-1], fracs
