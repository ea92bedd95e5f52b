"""Reflected Brownian motion with boundary local time.

Two discretizations are provided. The projection scheme takes a free Gaussian
step and projects back onto the domain closure; the distance moved by the
projection accumulates as the local-time increment. It works on every
supported domain and converges at order 1/2 in the step size. The half-line
scheme is exact at grid times: it simulates the free path, samples each
step's Brownian-bridge minimum, and applies the reflection map
``X = A + max(0, -min A)``, so its grid-time law has no time-discretization
error at any step size.

Batched simulators advance whole blocks of paths per step; the per-path entry
points are one-lane batches, so every consumer sees the same draw discipline.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .geometry import TOL_BOUNDARY, Domain, HalfLine
from .rng import BLOCK_SIZE, derive_stream, standard_normals, uniforms

#: Grid points closer than this (relative to dt) merge into one node.
_MERGE_REL = 1e-9


def build_grid(t0: float, t1: float, dt: float, split_times=()) -> np.ndarray:
    """Time grid on [t0, t1]: uniform spacing dt with split times inserted.

    Split times (chain jumps, record times) become exact grid nodes; base
    points within a relative tolerance of a split are dropped rather than
    duplicated, so no step exceeds dt by more than the merge slack and the
    state in force on each step can be read off the left endpoint exactly.
    """
    if not (np.isfinite(t0) and np.isfinite(t1)) or t1 <= t0:
        raise ValueError(f"need t0 < t1, got [{t0}, {t1}]")
    if dt <= 0.0 or not np.isfinite(dt):
        raise ValueError(f"step size must be positive, got {dt}")
    tol = dt * _MERGE_REL
    splits = np.asarray(sorted({float(s) for s in split_times}), dtype=float)
    if splits.size and (splits[0] < t0 - tol or splits[-1] > t1 + tol):
        raise ValueError("split times must lie within [t0, t1]")
    splits = splits[(splits > t0 + tol) & (splits < t1 - tol)]

    n_steps = max(1, int(math.ceil((t1 - t0) / dt - 1e-12)))
    base = t0 + dt * np.arange(1, n_steps)
    anchors = np.concatenate((splits, [t0, t1]))
    anchors.sort()
    if base.size and anchors.size:
        pos = np.searchsorted(anchors, base)
        d_right = np.where(pos < anchors.size, anchors[np.minimum(pos, anchors.size - 1)] - base, np.inf)
        d_left = np.where(pos > 0, base - anchors[np.maximum(pos - 1, 0)], np.inf)
        base = base[np.minimum(d_left, d_right) > tol]

    grid = np.concatenate(([t0], splits, base, [t1]))
    grid.sort()
    if np.any(np.diff(grid) <= 0.0):
        raise AssertionError("grid construction produced a non-increasing grid")
    return grid


@dataclass(frozen=True)
class DiffusionPath:
    """One reflected path sampled on a time grid.

    ``positions[m]`` is the location at ``times[m]``; ``dL[m]`` is the
    local time picked up on step m, so ``local_time_grid`` is its running sum
    with a leading zero.
    """

    times: np.ndarray = field(repr=False)
    positions: np.ndarray = field(repr=False)
    dL: np.ndarray = field(repr=False)
    scheme: str

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=float)
        x = np.asarray(self.positions, dtype=float)
        dl = np.asarray(self.dL, dtype=float)
        if x.ndim != 2 or x.shape[0] != t.size or dl.shape != (t.size - 1,):
            raise ValueError(
                f"inconsistent path shapes: times {t.shape}, positions {x.shape}, dL {dl.shape}"
            )
        if np.any(np.diff(t) <= 0.0):
            raise ValueError("path times must be strictly increasing")
        if np.any(dl < 0.0):
            raise ValueError("local-time increments must be >= 0")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "positions", x)
        object.__setattr__(self, "dL", dl)

    @property
    def dim(self) -> int:
        return int(self.positions.shape[1])

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def local_time_grid(self) -> np.ndarray:
        return np.concatenate(([0.0], np.cumsum(self.dL)))

    def local_time(self, t: float) -> float:
        """Accumulated local time at t, linearly interpolated between nodes."""
        if t < self.times[0] - 1e-12 or t > self.horizon + 1e-12:
            raise ValueError(f"time {t} outside the simulated window")
        return float(np.interp(t, self.times, self.local_time_grid))

    def position(self, t: float) -> np.ndarray:
        """Recorded position at grid time t (must match a node)."""
        m = int(np.searchsorted(self.times, t))
        for cand in (m, m - 1, m + 1):
            if 0 <= cand < self.times.size and abs(self.times[cand] - t) <= 1e-12:
                return self.positions[cand]
        raise ValueError(f"time {t} is not a grid node of this path")

    def check_invariants(self, domain: Domain, tol: float = TOL_BOUNDARY) -> None:
        """Raise if the path violates the reflected-dynamics contract.

        Positions must stay in the closure and local time must only grow. For
        the projection scheme a positive increment also implies the post-step
        point sits on the boundary; the exact half-line scheme can pick up
        local time from a within-step excursion and end the step inside, so
        that clause is scheme-conditional.
        """
        for m in range(self.times.size):
            if not domain.contains(self.positions[m], tol=tol):
                raise AssertionError(f"position at step {m} left the closure: {self.positions[m]}")
        if self.scheme == "projection":
            hits = np.nonzero(self.dL > 0.0)[0]
            for m in hits:
                if domain.boundary_distance(self.positions[m + 1]) > tol:
                    raise AssertionError(
                        f"local time grew on step {m} but the path ended in the interior"
                    )


@dataclass(frozen=True)
class BatchPaths:
    """A block of paths advanced on one shared grid."""

    times: np.ndarray = field(repr=False)
    positions: np.ndarray = field(repr=False)  # (n, M+1, dim)
    dL: np.ndarray = field(repr=False)  # (n, M)
    scheme: str

    @property
    def n_paths(self) -> int:
        return int(self.positions.shape[0])

    def path(self, i: int) -> DiffusionPath:
        return DiffusionPath(
            times=self.times,
            positions=self.positions[i],
            dL=self.dL[i],
            scheme=self.scheme,
        )

    def local_time_grid(self) -> np.ndarray:
        out = np.zeros((self.n_paths, self.times.size))
        np.cumsum(self.dL, axis=1, out=out[:, 1:])
        return out


def _apply_projection_increment(domain: Domain, x: np.ndarray, dw: np.ndarray):
    """One batched projection step from the given free increments."""
    free = x + dw
    return domain.project_batch(free)


def _advance_projection(domain: Domain, x: np.ndarray, h, stream: np.random.Generator):
    """Draw Gaussian increments of variance h and project back to the closure.

    h may be scalar or per-lane; returns (new positions, local-time push).
    """
    xi = standard_normals(stream, x.shape)
    scale = np.sqrt(h)
    if np.ndim(scale):
        scale = scale[:, None]
    return _apply_projection_increment(domain, x, scale * xi)


def _advance_halfline_exact(a: np.ndarray, runmin: np.ndarray, h, stream: np.random.Generator):
    """Advance the free path and fold in each step's bridge minimum.

    ``a`` is the free (unreflected) level, ``runmin`` its running minimum
    including within-step excursions. Conditional on the endpoints the step
    minimum is sampled from the Brownian-bridge law, which keeps the grid-time
    joint law of (path, minimum) exact for any step size.
    """
    xi = standard_normals(stream, a.shape)
    b = a + np.sqrt(h) * xi
    u = uniforms(stream, a.shape)
    gap = b - a
    step_min = 0.5 * (a + b - np.sqrt(gap * gap - 2.0 * h * np.log(u)))
    return b, np.minimum(runmin, step_min)


def _halfline_state(a: np.ndarray, runmin: np.ndarray):
    """Reflected position and local time from the free-path state."""
    local = np.maximum(0.0, -runmin)
    return a + local, local


def simulate_rbm_batch(
    domain: Domain,
    x0,
    t1: float,
    dt: float,
    stream: np.random.Generator,
    n: int,
    t0: float = 0.0,
    split_times=(),
) -> BatchPaths:
    """Projection-scheme paths with full trajectories retained.

    Intended for diagnostics and invariant checks; the expectation kernels
    stream over steps without storing trajectories.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0.shape != (domain.dim,):
        raise ValueError(f"start point must have dimension {domain.dim}")
    if not domain.contains(x0):
        raise ValueError(f"start point {x0} lies outside the domain closure")
    if n < 1:
        raise ValueError("need at least one path")
    grid = build_grid(t0, t1, dt, split_times)
    m_steps = grid.size - 1
    pos = np.empty((n, grid.size, domain.dim))
    dl = np.empty((n, m_steps))
    pos[:, 0, :] = x0
    x = np.broadcast_to(x0, (n, domain.dim)).copy()
    for m in range(m_steps):
        x, push = _advance_projection(domain, x, grid[m + 1] - grid[m], stream)
        pos[:, m + 1, :] = x
        dl[:, m] = push
    return BatchPaths(times=grid, positions=pos, dL=dl, scheme="projection")


def simulate_rbm(
    domain: Domain,
    x0,
    t1: float,
    dt: float,
    stream: np.random.Generator,
    t0: float = 0.0,
    split_times=(),
) -> DiffusionPath:
    """One projection-scheme path (a one-lane batch, same draw discipline)."""
    return simulate_rbm_batch(domain, x0, t1, dt, stream, 1, t0=t0, split_times=split_times).path(0)


def simulate_halfline_exact_batch(
    x0: float,
    t1: float,
    dt: float,
    stream: np.random.Generator,
    n: int,
    t0: float = 0.0,
    split_times=(),
) -> BatchPaths:
    """Exact-scheme paths on the half line with trajectories retained."""
    x0 = float(np.atleast_1d(np.asarray(x0, dtype=float))[0])
    if x0 < 0.0:
        raise ValueError(f"start point {x0} lies outside [0, inf)")
    if n < 1:
        raise ValueError("need at least one path")
    grid = build_grid(t0, t1, dt, split_times)
    m_steps = grid.size - 1
    pos = np.empty((n, grid.size, 1))
    dl = np.empty((n, m_steps))
    pos[:, 0, 0] = x0
    a = np.full(n, x0)
    runmin = np.full(n, x0)
    local_prev = np.zeros(n)
    for m in range(m_steps):
        a, runmin = _advance_halfline_exact(a, runmin, grid[m + 1] - grid[m], stream)
        x, local = _halfline_state(a, runmin)
        pos[:, m + 1, 0] = x
        dl[:, m] = local - local_prev
        local_prev = local
    return BatchPaths(times=grid, positions=pos, dL=dl, scheme="halfline_exact")


def simulate_halfline_exact(
    x0: float,
    t1: float,
    dt: float,
    stream: np.random.Generator,
    t0: float = 0.0,
    split_times=(),
) -> DiffusionPath:
    """One exact-scheme path on the half line."""
    return simulate_halfline_exact_batch(x0, t1, dt, stream, 1, t0=t0, split_times=split_times).path(0)


@dataclass(frozen=True)
class LadderLevel:
    """One step size of a refinement ladder, with its estimate."""

    dt: float
    stride: int
    mean: float
    stderr: float
    n_paths: int


def _commensurate(values: list[float]) -> list[Fraction]:
    # Exactness against the small-denominator candidate matters: every float
    # is rational, and loose tolerances would accept any value via deep
    # continued-fraction convergents, silently exploding the base grid.
    out = []
    for v in values:
        fr = Fraction(v).limit_denominator(10**6)
        if float(fr) != v:
            raise ValueError(
                f"value {v} is not a small-denominator rational; "
                "refinement ladders need commensurate steps"
            )
        out.append(fr)
    return out


def projection_dt_ladder(
    domain: Domain,
    x0,
    t1: float,
    dts: list[float],
    n: int,
    seed: int,
    kappa: float = 0.0,
    payoff=None,
) -> list[LadderLevel]:
    """Estimate E[f(X_T) exp(-kappa L_T)] at several step sizes jointly.

    All step sizes are driven by one shared set of base increments on their
    common refinement, so each level's marginal law is exactly the projection
    scheme at its own dt while level-to-level differences carry almost no
    Monte Carlo noise. Discretization-bias comparisons between levels are then
    deterministic at practical path counts instead of coin flips.
    """
    if len(dts) < 2 or any(b >= a for a, b in zip(dts, dts[1:])):
        raise ValueError("need at least two strictly decreasing step sizes")
    fracs = _commensurate(list(dts) + [t1])
    t_frac = fracs[-1]
    du_frac = fracs[0]
    for fr in fracs[1:-1]:
        du_frac = Fraction(
            math.gcd(du_frac.numerator * fr.denominator, fr.numerator * du_frac.denominator),
            du_frac.denominator * fr.denominator,
        )
    strides = [fr / du_frac for fr in fracs[:-1]]
    k_base = t_frac / du_frac
    if any(s.denominator != 1 for s in strides) or k_base.denominator != 1:
        raise ValueError("step sizes and horizon must share a common refinement")
    strides = [int(s) for s in strides]
    k_base = int(k_base)
    if k_base > 10**8:
        raise ValueError(
            f"common refinement needs {k_base} base steps; choose commensurate "
            "step sizes with a coarser shared grid"
        )
    du = float(du_frac)
    sqrt_du = math.sqrt(du)

    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if not domain.contains(x0):
        raise ValueError(f"start point {x0} lies outside the domain closure")
    n_levels = len(strides)
    sums = np.zeros(n_levels)
    sumsq = np.zeros(n_levels)

    lo = 0
    blk = 0
    while lo < n:
        hi = min(lo + BLOCK_SIZE, n)
        b = hi - lo
        stream = derive_stream(seed, "diffusion", blk)
        x = [np.broadcast_to(x0, (b, domain.dim)).copy() for _ in range(n_levels)]
        local = [np.zeros(b) for _ in range(n_levels)]
        acc = [np.zeros((b, domain.dim)) for _ in range(n_levels)]
        for j in range(1, k_base + 1):
            xi = standard_normals(stream, (b, domain.dim))
            for lev, s in enumerate(strides):
                acc[lev] += xi
                if j % s == 0:
                    x[lev], push = _apply_projection_increment(domain, x[lev], sqrt_du * acc[lev])
                    local[lev] += push
                    acc[lev][:] = 0.0
        for lev in range(n_levels):
            vals = np.exp(-kappa * local[lev])
            if payoff is not None:
                vals *= payoff(x[lev])
            sums[lev] += vals.sum()
            sumsq[lev] += np.square(vals).sum()
        lo = hi
        blk += 1

    out = []
    for lev, s in enumerate(strides):
        mean = sums[lev] / n
        var = max(0.0, sumsq[lev] / n - mean * mean)
        out.append(
            LadderLevel(
                dt=float(dts[lev]),
                stride=s,
                mean=float(mean),
                stderr=float(math.sqrt(var / n)),
                n_paths=n,
            )
        )
    return out
