"""Reflected paths: grids, local time, exact half-line scheme, dt ladders."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from elastic_switch.geometry import Disk, HalfLine, Interval, Rectangle
from elastic_switch.rbm import (
    DiffusionPath,
    build_grid,
    projection_dt_ladder,
    simulate_halfline_exact,
    simulate_halfline_exact_batch,
    simulate_rbm,
    simulate_rbm_batch,
)
from elastic_switch.rng import derive_stream

# Closed forms computed by hand before any simulator ran.
MEAN_ABS_NORMAL = 0.7978845608028654  # E|N(0,1)| = sqrt(2/pi)
ELASTIC_HALFLINE_1_1 = 0.5231565837302466  # E[e^{-L_1}], x0=0: e^{1/2} erfc(1/sqrt 2)
ELASTIC_HALFLINE_1_Q = 0.6992376694407961  # same at t=1/4: e^{1/8} erfc(sqrt(1/8))


def test_build_grid_inserts_splits_as_nodes():
    grid = build_grid(0.0, 1.0, 0.3, split_times=[0.5])
    assert grid[0] == 0.0 and grid[-1] == 1.0
    assert 0.5 in grid
    assert np.all(np.diff(grid) > 0.0)
    assert np.max(np.diff(grid)) <= 0.3 + 1e-12


def test_build_grid_merges_nearby_base_points():
    # A split within merge tolerance of a base node replaces it.
    grid = build_grid(0.0, 1.0, 0.25, split_times=[0.25 + 1e-12])
    assert np.all(np.diff(grid) > 1e-11)
    assert np.any(np.abs(grid - 0.25) < 1e-11)


def test_build_grid_validation():
    with pytest.raises(ValueError):
        build_grid(1.0, 1.0, 0.1)
    with pytest.raises(ValueError):
        build_grid(0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        build_grid(0.0, 1.0, 0.1, split_times=[2.0])


@given(
    t1=st.floats(0.1, 5.0),
    dt=st.floats(1e-3, 0.5),
    splits=st.lists(st.floats(0.01, 0.99), max_size=4),
)
def test_build_grid_properties(t1, dt, splits):
    grid = build_grid(0.0, t1, dt, split_times=[s * t1 for s in splits])
    assert grid[0] == 0.0
    assert grid[-1] == t1
    assert np.all(np.diff(grid) > 0.0)
    assert np.max(np.diff(grid)) <= dt * (1.0 + 1e-6)
    for s in splits:
        assert np.min(np.abs(grid - s * t1)) <= dt * 1e-6


def test_diffusion_path_validation_and_local_time():
    times = np.array([0.0, 0.5, 1.0])
    pos = np.array([[0.0], [0.2], [0.1]])
    path = DiffusionPath(times=times, positions=pos, dL=np.array([0.3, 0.0]), scheme="projection")
    np.testing.assert_array_equal(path.local_time_grid, [0.0, 0.3, 0.3])
    assert path.local_time(0.25) == pytest.approx(0.15)
    assert path.local_time(1.0) == 0.3
    np.testing.assert_array_equal(path.position(0.5), [0.2])
    with pytest.raises(ValueError):
        path.position(0.3)
    with pytest.raises(ValueError):
        path.local_time(2.0)
    with pytest.raises(ValueError):
        DiffusionPath(times=times, positions=pos, dL=np.array([-0.1, 0.0]), scheme="projection")
    with pytest.raises(ValueError):
        DiffusionPath(times=times[::-1], positions=pos, dL=np.array([0.0, 0.0]), scheme="projection")


def test_batch_simulation_is_deterministic_and_sliceable():
    dom = Interval(0.0, 1.0)
    a = simulate_rbm_batch(dom, [0.5], 0.5, 0.05, derive_stream(3, "diffusion", 0), 16)
    b = simulate_rbm_batch(dom, [0.5], 0.5, 0.05, derive_stream(3, "diffusion", 0), 16)
    np.testing.assert_array_equal(a.positions, b.positions)
    np.testing.assert_array_equal(a.dL, b.dL)
    p = a.path(3)
    np.testing.assert_array_equal(p.positions, a.positions[3])
    np.testing.assert_array_equal(a.local_time_grid()[3], p.local_time_grid)


@pytest.mark.parametrize(
    "dom,x0",
    [
        (Interval(0.0, 1.0), [0.1]),
        (HalfLine(), [0.05]),
        (Rectangle(0.0, 1.0, 0.0, 1.0), [0.1, 0.9]),
        (Disk(0.0, 0.0, 1.0), [0.8, 0.0]),
    ],
    ids=lambda v: getattr(v, "kind", ""),
)
def test_projection_paths_obey_reflection_contract(dom, x0):
    batch = simulate_rbm_batch(dom, x0, 0.5, 0.02, derive_stream(0, "diffusion", 0), 32)
    assert batch.scheme == "projection"
    for i in range(batch.n_paths):
        batch.path(i).check_invariants(dom)


def test_exact_halfline_paths_obey_reflection_contract():
    batch = simulate_halfline_exact_batch(0.0, 1.0, 0.1, derive_stream(0, "diffusion", 0), 64)
    assert batch.scheme == "halfline_exact"
    assert np.all(batch.positions >= 0.0)
    assert np.all(batch.dL >= 0.0)
    for i in range(8):
        batch.path(i).check_invariants(HalfLine())


def test_start_far_from_boundary_collects_no_local_time():
    # From distance 0.5 over t = 0.01, boundary contact has probability
    # ~exp(-12.5) per path; with this frozen seed none occurs.
    batch = simulate_rbm_batch(
        Interval(0.0, 1.0), [0.5], 0.01, 1e-3, derive_stream(42, "diffusion", 0), 256
    )
    assert np.all(batch.dL == 0.0)


def test_exact_scheme_far_start_tracks_free_path():
    batch = simulate_halfline_exact_batch(5.0, 0.25, 0.05, derive_stream(7, "diffusion", 0), 256)
    assert np.all(batch.dL == 0.0)


def test_start_outside_domain_rejected():
    with pytest.raises(ValueError):
        simulate_rbm(Interval(0.0, 1.0), [1.5], 0.5, 0.1, derive_stream(0, "d"))
    with pytest.raises(ValueError):
        simulate_halfline_exact(-0.1, 0.5, 0.1, derive_stream(0, "d"))


def test_exact_scheme_local_time_matches_levy_identity():
    # L_1 from x0 = 0 has the law of |N(0,1)|; the scheme is exact at grid
    # times for any step size, so 4 coarse steps suffice.
    batch = simulate_halfline_exact_batch(0.0, 1.0, 0.25, derive_stream(11, "diffusion", 0), 50_000)
    lt = batch.local_time_grid()[:, -1]
    se = lt.std(ddof=1) / np.sqrt(lt.size)
    assert abs(lt.mean() - MEAN_ABS_NORMAL) < 4.0 * se

    x1 = batch.positions[:, -1, 0]
    ks = stats.kstest(x1, stats.halfnorm.cdf)
    assert ks.pvalue > 0.01


def test_exact_scheme_hits_elastic_closed_form():
    batch = simulate_halfline_exact_batch(0.0, 1.0, 0.125, derive_stream(2, "diffusion", 0), 50_000)
    vals = np.exp(-batch.local_time_grid()[:, -1])
    se = vals.std(ddof=1) / np.sqrt(vals.size)
    assert abs(vals.mean() - ELASTIC_HALFLINE_1_1) < 4.0 * se


def test_projection_ladder_bias_shrinks_monotonically():
    # Shared base increments make level differences nearly noise-free: the
    # projection scheme undercounts local time, so the estimate sits above
    # the closed form and descends toward it as dt shrinks.
    levels = projection_dt_ladder(
        HalfLine(), [0.0], 0.25, [4e-2, 1e-2, 2.5e-3], n=20_000, seed=0, kappa=1.0
    )
    assert [lev.stride for lev in levels] == [16, 4, 1]
    means = [lev.mean for lev in levels]
    errs = [abs(m - ELASTIC_HALFLINE_1_Q) for m in means]
    assert means[0] > means[1] > means[2]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 3.0 * levels[2].stderr + 2e-2


def test_projection_ladder_validation():
    dom = HalfLine()
    with pytest.raises(ValueError, match="decreasing"):
        projection_dt_ladder(dom, [0.0], 0.25, [1e-2, 1e-2], n=10, seed=0)
    with pytest.raises(ValueError, match="commensurate"):
        projection_dt_ladder(dom, [0.0], 0.25, [1e-2, np.pi * 1e-3], n=10, seed=0)
    # Commensurate but pathological pairs are rejected by the base-step cap.
    with pytest.raises(ValueError, match="base steps"):
        projection_dt_ladder(dom, [0.0], 1.0, [1 / 999979, 1 / 999983], n=10, seed=0)


def test_schemes_differ_pathwise_but_share_grid():
    proj = simulate_rbm(HalfLine(), [0.0], 0.5, 0.05, derive_stream(1, "diffusion", 0))
    exact = simulate_halfline_exact(0.0, 0.5, 0.05, derive_stream(1, "diffusion", 0))
    np.testing.assert_array_equal(proj.times, exact.times)
    # The exact scheme consumes bridge uniforms, so trajectories diverge.
    assert not np.array_equal(proj.positions, exact.positions)
