"""Markov chain generators, stationary laws, sampling, rescaling."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from elastic_switch.chain import (
    ChainPath,
    GeneratorMatrix,
    constant_chain_path,
    rescale,
    sample_chain_path,
    stationary_distribution,
    two_state_gate,
)
from elastic_switch.rng import derive_stream


def gate():
    return two_state_gate(2.0, 1.0, 3.0)


def test_generator_validation():
    with pytest.raises(ValueError, match="sum to 0"):
        GeneratorMatrix(("a", "b"), (0.0, 0.0), np.array([[-1.0, 1.0], [1.0, -2.0]]))
    with pytest.raises(ValueError, match="off-diagonal"):
        GeneratorMatrix(("a", "b"), (0.0, 0.0), np.array([[1.0, -1.0], [-1.0, 1.0]]))
    with pytest.raises(ValueError, match="distinct"):
        GeneratorMatrix(("a", "a"), (0.0, 0.0), np.zeros((2, 2)))
    with pytest.raises(ValueError, match=">= 0"):
        GeneratorMatrix(("a",), (-1.0,), np.zeros((1, 1)))
    with pytest.raises(ValueError, match="2x2"):
        GeneratorMatrix(("a", "b"), (0.0, 0.0), np.zeros((3, 3)))


def test_two_state_gate_structure():
    g = gate()
    assert g.labels == ("closed", "open")
    assert g.kappas == (0.0, 2.0)
    np.testing.assert_array_equal(g.q, [[-1.0, 1.0], [3.0, -3.0]])
    assert g.index("open") == 1
    with pytest.raises(ValueError):
        g.index("ajar")
    with pytest.raises(ValueError):
        two_state_gate(2.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        two_state_gate(-1.0, 1.0, 1.0)


def test_gate_stationary_distribution_closed_form():
    # Occupations are (lam_off, lam_on) / (lam_on + lam_off).
    pi = stationary_distribution(gate())
    np.testing.assert_allclose(pi, [0.75, 0.25], atol=1e-12)
    assert float(pi @ np.asarray(gate().kappas)) == pytest.approx(0.5, abs=1e-12)


def test_stationary_distribution_properties():
    q = np.array([[-2.0, 1.5, 0.5], [1.0, -1.0, 0.0], [0.25, 0.25, -0.5]])
    g = GeneratorMatrix(("a", "b", "c"), (0.0, 1.0, 2.0), q)
    pi = stationary_distribution(g)
    assert pi.sum() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(pi @ q, 0.0, atol=1e-12)

    single = GeneratorMatrix(("only",), (0.5,), np.zeros((1, 1)))
    np.testing.assert_array_equal(stationary_distribution(single), [1.0])

    # Two disconnected states have no unique stationary law.
    reducible = GeneratorMatrix(("a", "b"), (0.0, 0.0), np.zeros((2, 2)))
    assert not reducible.is_irreducible()
    with pytest.raises(ValueError):
        stationary_distribution(reducible)


def test_rescale_preserves_jump_skeleton():
    # Holding times come from inverse CDFs, so speeding the clock by 1/eps
    # under the same stream scales every jump time by eps and keeps the
    # visited-state sequence identical.
    g = gate()
    slow = sample_chain_path(g, "closed", 8.0, derive_stream(5, "chain", 0))
    fast = sample_chain_path(rescale(g, 0.25), "closed", 2.0, derive_stream(5, "chain", 0))
    assert slow.n_jumps > 0
    assert fast.states == slow.states
    np.testing.assert_allclose(fast.jump_times, 0.25 * slow.jump_times, rtol=1e-12)
    with pytest.raises(ValueError):
        rescale(g, 0.0)


def test_rescale_keeps_stationary_law_and_reactivities():
    g = gate()
    for eps in (1.0, 0.1, 0.01):
        r = rescale(g, eps)
        assert r.kappas == g.kappas
        np.testing.assert_allclose(
            stationary_distribution(r), stationary_distribution(g), atol=1e-12
        )


def test_chain_path_validation():
    with pytest.raises(ValueError, match="one more state"):
        ChainPath(1.0, ("a", "b"), (0.0, 1.0), (0, 1), np.array([0.2, 0.6]))
    with pytest.raises(ValueError, match="strictly increasing"):
        ChainPath(1.0, ("a", "b"), (0.0, 1.0), (0, 1, 0), np.array([0.6, 0.2]))
    with pytest.raises(ValueError, match="consecutive"):
        ChainPath(1.0, ("a", "b"), (0.0, 1.0), (0, 0), np.array([0.5]))
    with pytest.raises(ValueError, match="0, horizon"):
        ChainPath(1.0, ("a", "b"), (0.0, 1.0), (0, 1), np.array([1.5]))


def test_chain_path_queries_are_right_continuous():
    path = ChainPath(1.0, ("a", "b"), (0.5, 2.0), (0, 1, 0), np.array([0.25, 0.75]))
    assert path.state_at(0.0) == 0
    assert path.state_at(0.25) == 1  # value at the jump is the post-jump state
    assert path.state_at(0.74999) == 1
    assert path.state_at(0.75) == 0
    assert path.kappa_at(0.5) == 2.0
    assert path.label_at(0.9) == "a"
    np.testing.assert_array_equal(path.state_at(np.array([0.0, 0.3, 0.8])), [0, 1, 0])
    with pytest.raises(ValueError):
        path.state_at(1.5)
    segs = path.segments()
    assert segs == [(0.0, 0.25, 0), (0.25, 0.75, 1), (0.75, 1.0, 0)]


def test_constant_chain_path():
    path = constant_chain_path(2.0, 0.7)
    assert path.n_jumps == 0
    assert path.kappa_at(1.3) == 0.7
    assert path.segments() == [(0.0, 2.0, 0)]


def test_sample_chain_path_determinism_and_bounds():
    g = gate()
    a = sample_chain_path(g, "closed", 5.0, derive_stream(9, "chain", 3))
    b = sample_chain_path(g, "closed", 5.0, derive_stream(9, "chain", 3))
    assert a.states == b.states
    np.testing.assert_array_equal(a.jump_times, b.jump_times)
    assert a.n_jumps > 0
    assert a.jump_times[0] > 0.0 and a.jump_times[-1] <= 5.0
    # Initial state accepted by index as well.
    c = sample_chain_path(g, 0, 5.0, derive_stream(9, "chain", 3))
    assert c.states == a.states


def test_sample_chain_path_absorbing_state_holds_forever():
    q = np.array([[-1.0, 1.0], [0.0, 0.0]])  # state b is absorbing
    g = GeneratorMatrix(("a", "b"), (0.0, 1.0), q)
    path = sample_chain_path(g, "a", 50.0, derive_stream(1, "chain", 0))
    assert path.n_jumps <= 1
    if path.n_jumps == 1:
        assert path.state_at(50.0) == 1


def test_sample_chain_path_validation():
    g = gate()
    with pytest.raises(ValueError):
        sample_chain_path(g, "closed", 0.0, derive_stream(0, "chain", 0))
    with pytest.raises(ValueError):
        sample_chain_path(g, 7, 1.0, derive_stream(0, "chain", 0))


@given(
    lam_on=st.floats(0.1, 10.0),
    lam_off=st.floats(0.1, 10.0),
    seed=st.integers(0, 1000),
)
def test_sampled_paths_satisfy_the_path_contract(lam_on, lam_off, seed):
    g = two_state_gate(1.0, lam_on, lam_off)
    # ChainPath.__post_init__ enforces ordering/alternation; construction
    # succeeding is the assertion.
    path = sample_chain_path(g, "closed", 3.0, derive_stream(seed, "chain", 0))
    assert path.state_at(0.0) == 0
    assert path.horizon == 3.0
