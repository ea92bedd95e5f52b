"""Continuous-time Markov chains driving the boundary-condition switches.

A chain is specified by labeled states, each carrying a reactivity
coefficient, and a generator matrix of transition rates. Sampled realizations
are piecewise-constant right-continuous paths stored as jump times plus the
visited state sequence.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rng import exponentials, uniforms

#: Generator rows must sum to zero within this tolerance.
TOL_ROWSUM = 1e-12


@dataclass(frozen=True)
class GeneratorMatrix:
    """Rate matrix of a finite-state chain, with per-state reactivities.

    ``q[i][j]`` is the jump rate from state i to state j for i != j; diagonal
    entries make each row sum to zero. ``kappas[i]`` is the boundary
    reactivity the chain applies while in state i.
    """

    labels: tuple[str, ...]
    kappas: tuple[float, ...]
    q: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        q = np.asarray(self.q, dtype=float)
        n = len(self.labels)
        if n == 0:
            raise ValueError("a chain needs at least one state")
        if len(set(self.labels)) != n:
            raise ValueError(f"state labels must be distinct, got {self.labels}")
        if len(self.kappas) != n:
            raise ValueError("one reactivity per state is required")
        if any(not np.isfinite(k) or k < 0.0 for k in self.kappas):
            raise ValueError(f"reactivities must be finite and >= 0, got {self.kappas}")
        if q.shape != (n, n):
            raise ValueError(f"generator must be {n}x{n}, got {q.shape}")
        if not np.all(np.isfinite(q)):
            raise ValueError("generator entries must be finite")
        off = q.copy()
        np.fill_diagonal(off, 0.0)
        if np.any(off < 0.0):
            raise ValueError("off-diagonal rates must be >= 0")
        rowsums = q.sum(axis=1)
        if np.any(np.abs(rowsums) > TOL_ROWSUM):
            raise ValueError(f"generator rows must sum to 0 within {TOL_ROWSUM}, got {rowsums}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "kappas", tuple(float(k) for k in self.kappas))

    @property
    def n_states(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValueError(f"unknown state {label!r}; states are {self.labels}") from None

    def is_irreducible(self) -> bool:
        """Breadth-first search on the directed rate graph, both directions."""
        n = self.n_states
        adj = self.q > 0.0
        for seed_dir in (adj, adj.T):
            seen = np.zeros(n, dtype=bool)
            seen[0] = True
            frontier = [0]
            while frontier:
                nxt = []
                for i in frontier:
                    for j in np.nonzero(seed_dir[i])[0]:
                        if not seen[j]:
                            seen[j] = True
                            nxt.append(int(j))
                frontier = nxt
            if not seen.all():
                return False
        return True


def stationary_distribution(g: GeneratorMatrix) -> np.ndarray:
    """Solve pi @ q = 0 with pi summing to one.

    One balance equation is redundant, so the last column is replaced by the
    normalization constraint before solving. Requires an irreducible chain.
    """
    n = g.n_states
    if n == 1:
        return np.array([1.0])
    if not g.is_irreducible():
        raise ValueError("stationary distribution needs an irreducible chain")
    a = g.q.T.copy()
    a[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    pi = np.linalg.solve(a, rhs)
    # Small negative round-off is clipped; anything material is a logic error.
    if np.any(pi < -1e-12):
        raise ArithmeticError(f"stationary solve produced negative mass: {pi}")
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def rescale(g: GeneratorMatrix, eps: float) -> GeneratorMatrix:
    """Speed the chain up by 1/eps, leaving states and reactivities alone."""
    if eps <= 0.0:
        raise ValueError(f"time-scale parameter must be positive, got {eps}")
    return GeneratorMatrix(labels=g.labels, kappas=g.kappas, q=g.q / eps)


def two_state_gate(kappa: float, lam_on: float, lam_off: float) -> GeneratorMatrix:
    """Closed/open gate: absorbing coefficient kappa while open, zero while closed.

    ``lam_on`` is the closed-to-open rate, ``lam_off`` the open-to-closed rate.
    """
    if kappa < 0.0:
        raise ValueError(f"gate reactivity must be >= 0, got {kappa}")
    if lam_on <= 0.0 or lam_off <= 0.0:
        raise ValueError("gate switching rates must be positive")
    q = np.array([[-lam_on, lam_on], [lam_off, -lam_off]])
    return GeneratorMatrix(labels=("closed", "open"), kappas=(0.0, float(kappa)), q=q)


@dataclass(frozen=True)
class ChainPath:
    """One right-continuous realization on [0, horizon].

    ``states[0]`` holds on [0, jump_times[0]), ``states[m]`` from
    ``jump_times[m-1]`` (inclusive) onward. Jump times are strictly
    increasing, lie in (0, horizon], and consecutive states differ.
    """

    horizon: float
    labels: tuple[str, ...]
    kappas: tuple[float, ...]
    states: tuple[int, ...]
    jump_times: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        jt = np.asarray(self.jump_times, dtype=float)
        object.__setattr__(self, "jump_times", jt)
        object.__setattr__(self, "states", tuple(int(s) for s in self.states))
        if self.horizon <= 0.0 or not np.isfinite(self.horizon):
            raise ValueError(f"horizon must be positive and finite, got {self.horizon}")
        if len(self.states) != len(jt) + 1:
            raise ValueError("need exactly one more state than jump times")
        if any(not 0 <= s < len(self.labels) for s in self.states):
            raise ValueError("state indices out of range")
        if jt.size:
            if not (jt[0] > 0.0 and jt[-1] <= self.horizon):
                raise ValueError("jump times must lie in (0, horizon]")
            if np.any(np.diff(jt) <= 0.0):
                raise ValueError("jump times must be strictly increasing")
        for a, b in zip(self.states, self.states[1:]):
            if a == b:
                raise ValueError("consecutive states must differ")

    @property
    def n_jumps(self) -> int:
        return int(self.jump_times.size)

    def state_at(self, t) -> np.ndarray | int:
        """State index at time t, right-continuous at jumps."""
        tt = np.asarray(t, dtype=float)
        if np.any(tt < 0.0) or np.any(tt > self.horizon):
            raise ValueError(f"query times must lie in [0, {self.horizon}]")
        idx = np.searchsorted(self.jump_times, tt, side="right")
        out = np.asarray(self.states)[idx]
        return out if tt.ndim else int(out)

    def kappa_at(self, t) -> np.ndarray | float:
        """Reactivity in force at time t."""
        idx = self.state_at(t)
        kap = np.asarray(self.kappas)[idx]
        return kap if np.ndim(t) else float(kap)

    def label_at(self, t: float) -> str:
        return self.labels[int(self.state_at(float(t)))]

    def segments(self) -> list[tuple[float, float, int]]:
        """(start, end, state index) pieces covering [0, horizon]."""
        edges = np.concatenate(([0.0], self.jump_times, [self.horizon]))
        return [
            (float(edges[m]), float(edges[m + 1]), self.states[m])
            for m in range(len(self.states))
            if edges[m] < edges[m + 1]
        ]


def constant_chain_path(horizon: float, kappa: float, label: str = "fixed") -> ChainPath:
    """Degenerate one-state path holding a single reactivity."""
    return ChainPath(
        horizon=horizon,
        labels=(label,),
        kappas=(float(kappa),),
        states=(0,),
        jump_times=np.empty(0),
    )


def sample_chain_path(
    g: GeneratorMatrix,
    initial: int | str,
    horizon: float,
    stream: np.random.Generator,
) -> ChainPath:
    """Draw one realization by the holding-time construction.

    In each state the chain waits an exponential time with the state's exit
    rate, then moves according to the embedded jump probabilities. Holding
    times and jump choices both come from inverse CDFs of stream uniforms, so
    speeding the generator up by 1/eps under the same stream reproduces the
    same jump skeleton with all jump times multiplied by eps.
    """
    if horizon <= 0.0 or not np.isfinite(horizon):
        raise ValueError(f"horizon must be positive and finite, got {horizon}")
    k = g.index(initial) if isinstance(initial, str) else int(initial)
    if not 0 <= k < g.n_states:
        raise ValueError(f"initial state index {k} out of range")

    exit_rates = -np.diag(g.q)
    jumps: list[float] = []
    states = [k]
    t = 0.0
    while True:
        rate = float(exit_rates[states[-1]])
        if rate <= 0.0:
            break  # absorbing state: holds forever
        t += float(exponentials(stream, rate))
        if t > horizon:
            break
        row = g.q[states[-1]].copy()
        row[states[-1]] = 0.0
        probs = row / rate
        u = float(uniforms(stream, ()))
        nxt = int(np.searchsorted(np.cumsum(probs), u, side="right"))
        nxt = min(nxt, g.n_states - 1)
        jumps.append(t)
        states.append(nxt)

    return ChainPath(
        horizon=horizon,
        labels=g.labels,
        kappas=g.kappas,
        states=tuple(states),
        jump_times=np.asarray(jumps),
    )
