"""Finite-difference solvers: conservation, accuracy, and coupling checks."""
from __future__ import annotations

import math

import numpy as np
import pytest

from elastic_switch.chain import ChainPath, GeneratorMatrix, two_state_gate
from elastic_switch.pde import (
    PdeSolution,
    SpaceGrid,
    robin_laplacian,
    solve_constant_robin,
    solve_coupled_robin,
    solve_quenched_robin,
    trapezoid_mass,
)

NEUMANN_COS = 0.26354424025464895  # e^{-pi^2/10} cos(pi/4), by hand

GRID = SpaceGrid(99)


def ones(x):
    return np.ones(x.shape[0])


def cos_pi(x):
    return np.cos(np.pi * x[:, 0])


def test_space_grid():
    g = SpaceGrid(399)
    assert g.dx == pytest.approx(1.0 / 400.0)
    assert g.nodes.shape == (401,)
    assert g.nodes[0] == 0.0 and g.nodes[-1] == 1.0
    with pytest.raises(ValueError):
        SpaceGrid(2)
    with pytest.raises(ValueError):
        SpaceGrid(100_001)


def test_robin_laplacian_rows():
    g = SpaceGrid(3)
    a = robin_laplacian(g, 2.0).toarray()
    scale = 0.5 / g.dx**2
    # Ghost closure folds the reactivity into the boundary diagonal.
    assert a[0, 0] == pytest.approx(scale * (-2.0 - 2.0 * g.dx * 2.0))
    assert a[0, 1] == pytest.approx(scale * 2.0)
    assert a[2, 1] == a[2, 3] == pytest.approx(scale)
    with pytest.raises(ValueError):
        robin_laplacian(g, -0.5)
    with pytest.raises(ValueError):
        robin_laplacian(g, float("nan"))


def test_neumann_constant_is_invariant():
    sol = solve_constant_robin(GRID, 0.0, ones, 0.5, dt_pde=1e-3)
    np.testing.assert_allclose(sol.at(0.5), 1.0, atol=1e-10)


def test_neumann_eigenfunction_decay():
    sol = solve_constant_robin(SpaceGrid(399), 0.0, cos_pi, 0.2, dt_pde=1e-4)
    assert sol.at(0.2, 0.25) == pytest.approx(NEUMANN_COS, abs=5e-6)


def test_neumann_mass_conserved_and_robin_mass_dissipates():
    f = lambda x: 1.0 + 0.5 * np.cos(np.pi * x[:, 0])
    free = solve_constant_robin(GRID, 0.0, f, 0.4, dt_pde=1e-3, t_record=[0.2, 0.4])
    m0 = trapezoid_mass(f(GRID.nodes[:, None]), GRID.dx)
    for t in (0.2, 0.4):
        assert trapezoid_mass(free.at(t), GRID.dx) == pytest.approx(m0, abs=1e-8)

    leaky = solve_constant_robin(GRID, 1.0, f, 0.4, dt_pde=1e-3, t_record=[0.2, 0.4])
    m1 = trapezoid_mass(leaky.at(0.2), GRID.dx)
    m2 = trapezoid_mass(leaky.at(0.4), GRID.dx)
    assert m1 < m0 and m2 < m1


def test_large_reactivity_approaches_absorption():
    sol = solve_constant_robin(SpaceGrid(399), 1e4, ones, 0.1, dt_pde=1e-4)
    assert abs(sol.at(0.1, 0.0)) < 1e-2
    assert sol.at(0.1, 0.5) > 0.5  # interior survives


def test_sup_norm_never_grows():
    f = lambda x: np.cos(3.0 * np.pi * x[:, 0])
    sol = solve_constant_robin(GRID, 0.7, f, 0.3, dt_pde=1e-3, t_record=[0.1, 0.2, 0.3])
    sups = [np.max(np.abs(sol.at(t))) for t in (0.1, 0.2, 0.3)]
    assert sups[0] <= 1.0 + 1e-10
    assert sups[0] > sups[1] > sups[2]


def test_validation_of_horizon_datum_and_records():
    with pytest.raises(ValueError, match="horizon"):
        solve_constant_robin(GRID, 1.0, ones, 0.0)
    with pytest.raises(ValueError, match="shape"):
        solve_constant_robin(GRID, 1.0, lambda x: np.ones(3), 0.5)
    with pytest.raises(ValueError, match="finite"):
        solve_constant_robin(GRID, 1.0, lambda x: np.full(x.shape[0], np.nan), 0.5)
    with pytest.raises(ValueError, match="record"):
        solve_constant_robin(GRID, 1.0, ones, 0.5, t_record=[0.6])
    with pytest.raises(ValueError, match="record"):
        solve_constant_robin(GRID, 1.0, ones, 0.5, t_record=[0.0])


def test_solution_lookup_errors():
    sol = solve_constant_robin(GRID, 1.0, ones, 0.5, dt_pde=1e-3, t_record=[0.5])
    with pytest.raises(ValueError, match="not recorded"):
        sol.at(0.25)
    with pytest.raises(ValueError, match="no states"):
        sol.at(0.5, 0.5, state=0)
    with pytest.raises(ValueError, match="outside"):
        sol.at(0.5, 1.5)


def test_coupled_with_frozen_chain_reduces_to_scalar():
    # Zero switching rates decouple the blocks; with equal reactivities each
    # block must reproduce the scalar solve up to solver round-off.
    g = GeneratorMatrix(("a", "b"), (1.5, 1.5), np.zeros((2, 2)))
    coupled = solve_coupled_robin(GRID, g, cos_pi, 0.3, dt_pde=1e-3)
    scalar = solve_constant_robin(GRID, 1.5, cos_pi, 0.3, dt_pde=1e-3)
    for s in ("a", "b"):
        np.testing.assert_allclose(coupled.at(0.3, state=s), scalar.at(0.3), atol=1e-12)


def test_coupled_neumann_constant_invariant():
    g = two_state_gate(0.0, 1.0, 3.0)
    sol = solve_coupled_robin(GRID, g, ones, 0.4, dt_pde=1e-3)
    assert sol.is_coupled
    for s in g.labels:
        np.testing.assert_allclose(sol.at(0.4, state=s), 1.0, atol=1e-10)


def test_coupled_needs_state_and_per_state_data():
    g = two_state_gate(2.0, 1.0, 3.0)
    sol = solve_coupled_robin(GRID, g, [ones, cos_pi], 0.2, dt_pde=1e-3)
    with pytest.raises(ValueError, match="needs a state"):
        sol.at(0.2, 0.5)
    assert sol.at(0.2, 0.5, state="open") == sol.at(0.2, 0.5, state=1)
    with pytest.raises(ValueError, match="one initial datum per state"):
        solve_coupled_robin(GRID, g, [ones], 0.2, dt_pde=1e-3)


def test_coupled_second_order_in_space():
    # Richardson triple: halving dx shrinks the sup-norm difference about
    # fourfold. The coarse nodes are shared by every finer grid, so the
    # differences are exact node values, not interpolants.
    g = two_state_gate(2.0, 1.0, 3.0)
    sols = [solve_coupled_robin(SpaceGrid(n), g, cos_pi, 0.25, dt_pde=1e-4) for n in (49, 99, 199)]
    coarse = sols[0].nodes
    for s in range(2):
        u = [np.interp(coarse, sol.nodes, sol.values[0][s]) for sol in sols]
        d1 = np.max(np.abs(u[0] - u[1]))
        d2 = np.max(np.abs(u[1] - u[2]))
        assert 3.5 < d1 / d2 < 4.5


def test_quenched_equal_reactivity_path_matches_constant():
    # Two jumps that never change the reactivity must be invisible.
    path = ChainPath(0.5, ("a", "b"), (1.0, 1.0), (0, 1, 0), np.array([0.1, 0.3]))
    quenched = solve_quenched_robin(GRID, path, cos_pi, 0.5, dt_pde=1e-3, t_record=[0.5])
    const = solve_constant_robin(GRID, 1.0, cos_pi, 0.5, dt_pde=1e-3, t_record=[0.5])
    np.testing.assert_allclose(quenched.at(0.5), const.at(0.5), atol=1e-12)


def test_quenched_before_first_jump_is_pure_first_segment():
    path = ChainPath(0.5, ("off", "on"), (0.0, 2.0), (0, 1), np.array([0.2]))
    quenched = solve_quenched_robin(GRID, path, cos_pi, 0.5, dt_pde=1e-3, t_record=[0.15, 0.5])
    free = solve_constant_robin(GRID, 0.0, cos_pi, 0.15, dt_pde=1e-3)
    np.testing.assert_allclose(quenched.at(0.15), free.at(0.15), atol=1e-12)
    # After the switch the boundary starts leaking: values drop near x = 0.
    assert quenched.at(0.5, 0.05) < free.at(0.15, 0.05)


def test_quenched_segment_order_is_substantive():
    # Robin semigroups with different coefficients do not commute, so
    # reversing the occupation order must change the answer.
    fwd = ChainPath(0.4, ("off", "on"), (0.0, 5.0), (0, 1), np.array([0.2]))
    rev = ChainPath(0.4, ("off", "on"), (0.0, 5.0), (1, 0), np.array([0.2]))
    f = lambda x: x[:, 0]
    a = solve_quenched_robin(GRID, fwd, f, 0.4, dt_pde=1e-3).at(0.4, 0.25)
    b = solve_quenched_robin(GRID, rev, f, 0.4, dt_pde=1e-3).at(0.4, 0.25)
    assert abs(a - b) > 1e-3


def test_quenched_step_refinement_converges():
    path = ChainPath(0.4, ("off", "on"), (0.0, 2.0), (0, 1), np.array([0.15]))
    coarse = solve_quenched_robin(GRID, path, cos_pi, 0.4, dt_pde=1e-3).at(0.4, 0.3)
    fine = solve_quenched_robin(GRID, path, cos_pi, 0.4, dt_pde=2.5e-4).at(0.4, 0.3)
    assert abs(coarse - fine) < 1e-5


def test_quenched_requires_covering_path():
    path = ChainPath(0.3, ("a",), (1.0,), (0,), np.empty(0))
    with pytest.raises(ValueError, match="shorter"):
        solve_quenched_robin(GRID, path, ones, 0.5)


def test_trapezoid_mass_hand_value():
    assert trapezoid_mass(np.array([1.0, 2.0, 3.0]), 0.5) == pytest.approx(2.0)


def test_solution_dataclass_shape_flags():
    sol = solve_constant_robin(GRID, 0.0, ones, 0.1, dt_pde=1e-2)
    assert not sol.is_coupled
    assert isinstance(sol, PdeSolution)
    assert sol.method == "crank_nicolson"
    assert sol.values.shape == (1, GRID.n_interior + 2)
