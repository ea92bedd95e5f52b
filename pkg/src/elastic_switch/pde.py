"""Finite-difference solvers for the switched-Robin heat equation on [0, 1].

Three Crank-Nicolson solvers share one ghost-node spatial discretization:
a constant-coefficient Robin problem, the state-coupled backward system for
fresh switching, and the piecewise-constant-in-time problem for one frozen
switching realization. All use the generator (1/2) * Laplacian.

The Robin condition ties the normal derivative to the boundary value,
``du/dn + kappa * u = 0``. At x = 0 the outward normal points left, so the
centered ghost closure reads ``-(u_1 - u_{-1})/(2 dx) + kappa u_0 = 0``; at
x = 1 it mirrors with the opposite sign. Eliminating the ghost values keeps
the stencil second-order accurate up to the boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import block_diag, csc_matrix, diags, identity, kron
from scipy.sparse.linalg import splu

from .chain import ChainPath, GeneratorMatrix

#: Record times must match solver time levels within this tolerance.
_TOL_LEVEL = 1e-9

#: Slack for the discrete maximum principle; pure round-off, not scheme error.
_MAXNORM_SLACK = 1e-10


class NumericalError(RuntimeError):
    """A solver produced an unusable result (instability, singular system)."""


@dataclass(frozen=True)
class SpaceGrid:
    """Uniform nodes on [0, 1]: n_interior points plus the two endpoints."""

    n_interior: int = 399

    def __post_init__(self) -> None:
        if not 3 <= self.n_interior <= 100_000:
            raise ValueError(f"interior node count must lie in [3, 1e5], got {self.n_interior}")

    @property
    def dx(self) -> float:
        return 1.0 / (self.n_interior + 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_interior + 2)


@dataclass(frozen=True)
class PdeSolution:
    """Recorded time levels of a solve.

    ``values`` has shape (levels, nodes) for scalar problems and
    (levels, states, nodes) for the coupled system.
    """

    times: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    nodes: np.ndarray = field(repr=False)
    dx: float
    dt_pde: float
    method: str
    state_labels: tuple[str, ...] | None = None

    @property
    def is_coupled(self) -> bool:
        return self.values.ndim == 3

    def _level(self, t: float) -> int:
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > _TOL_LEVEL:
            raise ValueError(f"time {t} was not recorded; levels are {self.times}")
        return k

    def at(self, t: float, x: float | None = None, state: int | str | None = None):
        """Value at a recorded time: full vector, or interpolated at x.

        For the coupled system a state (index or label) selects the component.
        """
        k = self._level(t)
        v = self.values[k]
        if self.is_coupled:
            if state is None:
                raise ValueError("the coupled solution needs a state to evaluate")
            s = self.state_labels.index(state) if isinstance(state, str) else int(state)
            v = v[s]
        elif state is not None:
            raise ValueError("scalar solution has no states")
        if x is None:
            return v
        if not 0.0 <= x <= 1.0:
            raise ValueError(f"query point {x} outside [0, 1]")
        return float(np.interp(x, self.nodes, v))


def robin_laplacian(grid: SpaceGrid, kappa: float) -> csc_matrix:
    """Sparse 1/2-Laplacian on the node vector with Robin ghost closure.

    Boundary rows use the ghost elimination ``u_ghost = u_inner - 2 dx kappa
    u_boundary``, giving second-order accuracy and, for kappa = 0, a stencil
    whose trapezoid mass is conserved exactly (the flux terms telescope).
    """
    if kappa < 0.0 or not np.isfinite(kappa):
        raise ValueError(f"reactivity must be finite and >= 0, got {kappa}")
    n = grid.n_interior + 2
    dx = grid.dx
    main = np.full(n, -2.0)
    upper = np.ones(n - 1)
    lower = np.ones(n - 1)
    main[0] = -2.0 - 2.0 * dx * kappa
    upper[0] = 2.0
    main[-1] = -2.0 - 2.0 * dx * kappa
    lower[-1] = 2.0
    scale = 0.5 / (dx * dx)
    return csc_matrix(
        diags([scale * lower, scale * main, scale * upper], offsets=[-1, 0, 1], shape=(n, n))
    )


def _evaluate_on_nodes(f, nodes: np.ndarray) -> np.ndarray:
    vals = np.asarray(f(nodes[:, None]), dtype=float)
    if vals.shape != nodes.shape:
        raise ValueError(f"initial datum returned shape {vals.shape}, expected {nodes.shape}")
    if not np.all(np.isfinite(vals)):
        raise ValueError("initial datum must be finite on the grid")
    return vals


def _record_times(t1: float, t_record) -> np.ndarray:
    rec = np.asarray(sorted({float(t) for t in (t_record if t_record is not None else [t1])}))
    if rec.size == 0:
        raise ValueError("need at least one record time")
    if rec[0] <= 0.0 or rec[-1] > t1 + _TOL_LEVEL:
        raise ValueError(f"record times must lie in (0, {t1}]")
    return rec


class _CrankNicolson:
    """CN stepper with an LU cache keyed by (coefficient key, step size)."""

    def __init__(self, dt_pde: float, sup0: float) -> None:
        if dt_pde <= 0.0 or not np.isfinite(dt_pde):
            raise ValueError(f"solver step must be positive, got {dt_pde}")
        self.dt = dt_pde
        self.sup0 = sup0
        self._cache: dict = {}

    def march(self, u: np.ndarray, a_mat, key, span: float) -> np.ndarray:
        """Advance u by span under generator a_mat, hitting span exactly."""
        if span <= 0.0:
            return u
        k = max(1, int(math.ceil(span / self.dt - 1e-12)))
        h = span / k
        ck = (key, round(h, 15))
        if ck not in self._cache:
            n = a_mat.shape[0]
            eye = identity(n, format="csc")
            try:
                lhs = splu(csc_matrix(eye - (0.5 * h) * a_mat))
            except RuntimeError as exc:
                raise NumericalError(f"time-step system could not be factorized: {exc}") from exc
            rhs = csc_matrix(eye + (0.5 * h) * a_mat)
            self._cache[ck] = (lhs, rhs)
        lhs, rhs = self._cache[ck]
        for _ in range(k):
            u = lhs.solve(rhs @ u)
            sup = float(np.max(np.abs(u)))
            if not np.isfinite(sup):
                raise NumericalError("solution blew up to a non-finite value")
            if sup > self.sup0 * (1.0 + _MAXNORM_SLACK) + 1e-14:
                raise NumericalError(
                    f"discrete maximum principle violated: sup {sup} exceeds initial {self.sup0}"
                )
        return u


def solve_constant_robin(
    grid: SpaceGrid,
    kappa: float,
    f,
    t1: float,
    dt_pde: float = 1e-4,
    t_record=None,
) -> PdeSolution:
    """Heat semigroup with a fixed Robin coefficient on both endpoints."""
    if t1 <= 0.0 or not np.isfinite(t1):
        raise ValueError(f"horizon must be positive, got {t1}")
    nodes = grid.nodes
    u = _evaluate_on_nodes(f, nodes)
    rec = _record_times(t1, t_record)
    stepper = _CrankNicolson(dt_pde, float(np.max(np.abs(u))))
    a_mat = robin_laplacian(grid, kappa)
    out = np.empty((rec.size, nodes.size))
    t_now = 0.0
    for i, t in enumerate(rec):
        u = stepper.march(u, a_mat, kappa, t - t_now)
        t_now = t
        out[i] = u
    return PdeSolution(
        times=rec, values=out, nodes=nodes, dx=grid.dx, dt_pde=dt_pde, method="crank_nicolson"
    )


def solve_coupled_robin(
    grid: SpaceGrid,
    g: GeneratorMatrix,
    phi,
    t1: float,
    dt_pde: float = 1e-4,
    t_record=None,
) -> PdeSolution:
    """Backward system for fresh switching: one Robin block per chain state.

    Each state block carries its own Robin coefficient; the chain generator
    couples the blocks and is treated implicitly inside the same linear solve.
    ``phi`` is either a single payoff applied to every state or a sequence of
    per-state payoffs.
    """
    if t1 <= 0.0 or not np.isfinite(t1):
        raise ValueError(f"horizon must be positive, got {t1}")
    nodes = grid.nodes
    n_states = g.n_states
    comps = phi if isinstance(phi, (list, tuple)) else [phi] * n_states
    if len(comps) != n_states:
        raise ValueError(f"need one initial datum per state, got {len(comps)} for {n_states}")
    u0 = np.stack([_evaluate_on_nodes(c, nodes) for c in comps])
    rec = _record_times(t1, t_record)
    stepper = _CrankNicolson(dt_pde, float(np.max(np.abs(u0))))

    n = nodes.size
    blocks = [robin_laplacian(grid, k) for k in g.kappas]
    big = csc_matrix(
        block_diag(blocks, format="csc") + kron(csc_matrix(g.q), identity(n, format="csc"))
    )

    u = u0.reshape(-1)
    out = np.empty((rec.size, n_states, n))
    t_now = 0.0
    for i, t in enumerate(rec):
        u = stepper.march(u, big, "coupled", t - t_now)
        t_now = t
        out[i] = u.reshape(n_states, n)
    return PdeSolution(
        times=rec,
        values=out,
        nodes=nodes,
        dx=grid.dx,
        dt_pde=dt_pde,
        method="crank_nicolson",
        state_labels=g.labels,
    )


def solve_quenched_robin(
    grid: SpaceGrid,
    chain_path: ChainPath,
    f,
    t1: float,
    dt_pde: float = 1e-4,
    t_record=None,
) -> PdeSolution:
    """Evolution family for one frozen switching realization.

    The recorded value at time t is the functional started at time 0 and run
    to t. It solves the backward problem in the start variable, so the
    switching intervals act on the terminal datum latest-first: the level for
    t is built by marching f through the chain's segments on [0, t] in
    reverse chronological order, each with its own Robin coefficient and with
    segment endpoints hit exactly. Robin semigroups with different
    coefficients do not commute, so the ordering is substantive, not a
    convention.
    """
    if t1 <= 0.0 or not np.isfinite(t1):
        raise ValueError(f"horizon must be positive, got {t1}")
    if chain_path.horizon < t1 - _TOL_LEVEL:
        raise ValueError("switching path is shorter than the solve horizon")
    nodes = grid.nodes
    u0 = _evaluate_on_nodes(f, nodes)
    rec = _record_times(t1, t_record)
    stepper = _CrankNicolson(dt_pde, float(np.max(np.abs(u0))))
    mats = {k: robin_laplacian(grid, k) for k in set(chain_path.kappas)}

    out = np.empty((rec.size, nodes.size))
    for i, t in enumerate(rec):
        u = u0.copy()
        for lo, hi, sidx in reversed(chain_path.segments()):
            if lo >= t:
                continue
            kap = chain_path.kappas[sidx]
            u = stepper.march(u, mats[kap], kap, min(hi, t) - lo)
        out[i] = u
    return PdeSolution(
        times=rec, values=out, nodes=nodes, dx=grid.dx, dt_pde=dt_pde, method="crank_nicolson"
    )


def trapezoid_mass(values: np.ndarray, dx: float) -> float:
    """Discrete integral over [0, 1] with trapezoid endpoint weights."""
    return float(dx * (0.5 * values[0] + values[1:-1].sum() + 0.5 * values[-1]))
