"""Path-functional estimators: boundary exposure and switched absorption.

The quantity of interest is the expectation of a terminal payoff discounted by
the exponential of the reactivity-weighted boundary local time,

    payoff(X_t) * exp(-integral of kappa(state at s) dL_s).

Three averaging modes share the same step mechanics. Annealed draws a fresh
switching path per sample; quenched holds one switching realization fixed;
averaged replaces the switch by its stationary effective reactivity. The
quenched and averaged kernels also support a paired control run at constant
effective reactivity on the identical driving noise, which is what makes
small averaging gaps resolvable without enormous sample counts.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .chain import (
    ChainPath,
    GeneratorMatrix,
    constant_chain_path,
    sample_chain_path,
    stationary_distribution,
)
from .geometry import Disk, Domain, HalfLine, Interval, Rectangle
from .rbm import (
    DiffusionPath,
    _advance_halfline_exact,
    _apply_projection_increment,
    _halfline_state,
    build_grid,
)
from .rng import derive_stream, iter_blocks, standard_normals, uniforms

SCHEMES = ("projection", "halfline_exact")

#: Record times must land on grid nodes within this tolerance.
_TOL_NODE = 1e-9


@dataclass(frozen=True)
class SimParams:
    """Monte Carlo run parameters shared across estimator calls."""

    dt: float = 1e-4
    paths: int = 100_000
    seed: int = 0
    scheme: str = "projection"
    threads: int = 1
    antithetic: bool = False

    def __post_init__(self) -> None:
        if not 0.0 < self.dt <= 0.1:
            raise ValueError(f"dt must lie in (0, 0.1], got {self.dt}")
        if not 1 <= self.paths <= 10**9:
            raise ValueError(f"paths must lie in [1, 1e9], got {self.paths}")
        if not 0 <= self.seed < 2**63:
            raise ValueError(f"seed must be a nonnegative 63-bit integer, got {self.seed}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not 1 <= self.threads <= 4096:
            raise ValueError(f"threads must lie in [1, 4096], got {self.threads}")


@dataclass(frozen=True)
class Payoff:
    """Terminal payoff with a declared sup bound.

    ``fn`` maps an (n, dim) array of positions to (n,) values. The bound is
    used by contraction diagnostics; float("inf") marks an undeclared bound.
    """

    name: str
    fn: object
    bound: float
    params: dict = field(default_factory=dict)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(x), dtype=float)


@dataclass(frozen=True)
class SwitchedPayoff:
    """State-dependent terminal payoff, one component per chain state."""

    labels: tuple[str, ...]
    components: tuple[Payoff, ...]

    def __post_init__(self) -> None:
        if len(self.labels) != len(self.components):
            raise ValueError("need exactly one payoff component per state")

    @property
    def bound(self) -> float:
        return max(c.bound for c in self.components)

    def for_state(self, idx: int) -> Payoff:
        return self.components[idx]


def as_payoff(f, bound: float = math.inf, name: str = "custom") -> Payoff:
    """Wrap a raw callable; Payoff instances pass through unchanged."""
    if isinstance(f, Payoff):
        return f
    if not callable(f):
        raise TypeError(f"payoff must be callable, got {type(f).__name__}")
    return Payoff(name=name, fn=f, bound=float(bound))


def as_switched_payoff(phi, labels: tuple[str, ...]) -> SwitchedPayoff:
    """Broadcast a single payoff to all states, or validate a switched one."""
    if isinstance(phi, SwitchedPayoff):
        if phi.labels != tuple(labels):
            raise ValueError(f"payoff states {phi.labels} do not match chain states {tuple(labels)}")
        return phi
    p = as_payoff(phi)
    return SwitchedPayoff(labels=tuple(labels), components=tuple(p for _ in labels))


def _coordinate_bound(domain: Domain, axis: int) -> float:
    if isinstance(domain, Interval):
        lims = (domain.a, domain.b)
    elif isinstance(domain, Rectangle):
        lims = (domain.a, domain.b) if axis == 0 else (domain.c, domain.d)
    elif isinstance(domain, Disk):
        c = domain.cx if axis == 0 else domain.cy
        lims = (c - domain.r, c + domain.r)
    else:
        raise ValueError("coordinate payoff needs a bounded domain; the half line has none")
    return max(abs(lims[0]), abs(lims[1]))


def make_payoff(name: str, domain: Domain | None = None, **params) -> Payoff:
    """Build a registered payoff by name.

    constant(value), coordinate(axis), cos_pi_x, tabulated(xs, ys). The
    coordinate payoff requires a bounded domain so its sup bound is honest.
    """
    if name == "constant":
        value = float(params.pop("value", 1.0))
        _reject_extra(name, params)
        return Payoff(name=name, fn=lambda x: np.full(x.shape[0], value), bound=abs(value), params={"value": value})
    if name == "coordinate":
        axis = int(params.pop("axis", 0))
        _reject_extra(name, params)
        if domain is None:
            raise ValueError("coordinate payoff needs the domain to declare its bound")
        if not 0 <= axis < domain.dim:
            raise ValueError(f"axis {axis} out of range for a {domain.dim}-d domain")
        bound = _coordinate_bound(domain, axis)
        return Payoff(name=name, fn=lambda x: x[:, axis].copy(), bound=bound, params={"axis": axis})
    if name == "cos_pi_x":
        _reject_extra(name, params)
        return Payoff(name=name, fn=lambda x: np.cos(np.pi * x[:, 0]), bound=1.0, params={})
    if name == "tabulated":
        xs = np.asarray(params.pop("xs", ()), dtype=float)
        ys = np.asarray(params.pop("ys", ()), dtype=float)
        _reject_extra(name, params)
        if xs.size < 2 or xs.shape != ys.shape:
            raise ValueError("tabulated payoff needs matching xs/ys with at least two knots")
        if np.any(np.diff(xs) <= 0.0):
            raise ValueError("tabulated payoff knots must be strictly increasing")
        bound = float(np.max(np.abs(ys)))
        return Payoff(
            name=name,
            fn=lambda x: np.interp(x[:, 0], xs, ys),
            bound=bound,
            params={"xs": xs.tolist(), "ys": ys.tolist()},
        )
    raise ValueError(f"unknown payoff {name!r}; expected constant, coordinate, cos_pi_x or tabulated")


def _reject_extra(name: str, params: dict) -> None:
    if params:
        raise ValueError(f"unexpected parameters for payoff {name!r}: {sorted(params)}")


def effective_reactivity(g: GeneratorMatrix) -> float:
    """Stationary average of the per-state reactivities."""
    return float(stationary_distribution(g) @ np.asarray(g.kappas))


@dataclass(frozen=True)
class ExposurePath:
    """Reactivity-weighted local time along one path, with its contraction."""

    times: np.ndarray = field(repr=False)
    exposure: np.ndarray = field(repr=False)  # running integral of kappa dL
    contraction: np.ndarray = field(repr=False)  # exp(-exposure)


def exposure_integral(path: DiffusionPath, chain: ChainPath) -> ExposurePath:
    """Accumulate the switching-weighted local-time integral along a path.

    The path grid must resolve every chain jump as a node; the reactivity on
    each step is then read off the step's left endpoint, which matches the
    right-continuity of the switching path exactly.
    """
    if chain.horizon < path.horizon - 1e-12:
        raise ValueError("chain horizon is shorter than the path horizon")
    jumps = chain.jump_times
    inside = jumps[(jumps > path.times[0]) & (jumps < path.times[-1])]
    if inside.size:
        pos = np.searchsorted(path.times, inside)
        near = np.minimum(
            np.abs(path.times[np.clip(pos, 0, path.times.size - 1)] - inside),
            np.abs(path.times[np.clip(pos - 1, 0, path.times.size - 1)] - inside),
        )
        if np.any(near > _TOL_NODE):
            raise ValueError("path grid does not resolve the chain's jump times")
    kap = np.asarray(chain.kappa_at(path.times[:-1]), dtype=float)
    j = np.concatenate(([0.0], np.cumsum(kap * path.dL)))
    return ExposurePath(times=path.times, exposure=j, contraction=np.exp(-j))


def exposure_error(path: DiffusionPath, chain: ChainPath, abar: float, t1: float | None = None) -> float:
    """Sup over grid nodes of |exposure - abar * local time| up to t1."""
    expo = exposure_integral(path, chain)
    lt = path.local_time_grid
    gap = np.abs(expo.exposure - abar * lt)
    if t1 is not None:
        gap = gap[path.times <= t1 + 1e-12]
    return float(np.max(gap))


@dataclass(frozen=True)
class CurveResult:
    """Estimates of one estimator over a grid of record times."""

    t_grid: np.ndarray
    means: np.ndarray
    stderrs: np.ndarray
    n_paths: int
    ref_means: np.ndarray | None = None  # paired constant-reactivity control
    diff_means: np.ndarray | None = None
    diff_stderrs: np.ndarray | None = None
    expo_mean: float | None = None  # mean sup |exposure - abar * L|
    expo_stderr: float | None = None
    dumps: tuple = ()


@dataclass(frozen=True)
class EstimatorResult:
    """One scalar estimate with its uncertainty and provenance."""

    mode: str
    mean: float
    stderr: float
    n_paths: int
    t: float
    x: tuple[float, ...]
    state: str | None
    dt: float
    scheme: str
    seed: int
    extra: dict = field(default_factory=dict)

    @property
    def ci95(self) -> tuple[float, float]:
        half = 1.96 * self.stderr
        return (self.mean - half, self.mean + half)


class _Accumulator:
    """Per-block running sums for means, paired differences and exposure."""

    def __init__(self, n_blocks: int, n_rec: int, paired: bool, expo: bool) -> None:
        self.count = np.zeros(n_blocks)
        self.s1 = np.zeros((n_blocks, n_rec))
        self.s2 = np.zeros((n_blocks, n_rec))
        self.r1 = np.zeros((n_blocks, n_rec)) if paired else None
        self.d1 = np.zeros((n_blocks, n_rec)) if paired else None
        self.d2 = np.zeros((n_blocks, n_rec)) if paired else None
        self.e1 = np.zeros(n_blocks) if expo else None
        self.e2 = np.zeros(n_blocks) if expo else None

    def add(self, blk: int, vals: np.ndarray, ref: np.ndarray | None, expo: np.ndarray | None) -> None:
        self.count[blk] += vals.shape[0]
        self.s1[blk] += vals.sum(axis=0)
        self.s2[blk] += np.square(vals).sum(axis=0)
        if ref is not None:
            diff = vals - ref
            self.r1[blk] += ref.sum(axis=0)
            self.d1[blk] += diff.sum(axis=0)
            self.d2[blk] += np.square(diff).sum(axis=0)
        if expo is not None:
            self.e1[blk] += expo.sum()
            self.e2[blk] += np.square(expo).sum()

    @staticmethod
    def _mean_stderr(s1: np.ndarray, s2: np.ndarray, n: float):
        mean = s1 / n
        var = np.maximum(0.0, s2 / n - mean * mean)
        return mean, np.sqrt(var / n)

    def reduce(self) -> dict:
        n = float(self.count.sum())
        means, stderrs = self._mean_stderr(self.s1.sum(axis=0), self.s2.sum(axis=0), n)
        out = {"n": int(n), "means": means, "stderrs": stderrs}
        if self.r1 is not None:
            dm, ds = self._mean_stderr(self.d1.sum(axis=0), self.d2.sum(axis=0), n)
            out.update(ref_means=self.r1.sum(axis=0) / n, diff_means=dm, diff_stderrs=ds)
        if self.e1 is not None:
            em, es = self._mean_stderr(self.e1.sum(), self.e2.sum(), n)
            out.update(expo_mean=float(em), expo_stderr=float(es))
        return out


def _draw_normals(stream, shape: tuple[int, ...], antithetic: bool) -> np.ndarray:
    if not antithetic:
        return standard_normals(stream, shape)
    half = shape[0] // 2
    xi = standard_normals(stream, (half,) + shape[1:])
    return np.concatenate((xi, -xi), axis=0)


def _draw_uniforms(stream, count: int, antithetic: bool) -> np.ndarray:
    # Mirrored lanes share the bridge uniforms; (xi, u) and (-xi, u) have the
    # same law, so each lane's marginal scheme is untouched.
    if not antithetic:
        return uniforms(stream, count)
    u = uniforms(stream, count // 2)
    return np.concatenate((u, u))


def _resolve_record_indices(grid: np.ndarray, t_record: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(grid, t_record)
    idx = np.clip(idx, 0, grid.size - 1)
    left = np.clip(idx - 1, 0, grid.size - 1)
    use_left = np.abs(grid[left] - t_record) < np.abs(grid[idx] - t_record)
    idx = np.where(use_left, left, idx)
    if np.any(np.abs(grid[idx] - t_record) > _TOL_NODE):
        raise AssertionError("record times failed to land on grid nodes")
    if np.any(idx == 0):
        raise ValueError("record times must lie strictly after the start time")
    return idx.astype(np.int64)


def _check_antithetic(sim: SimParams, n: int) -> None:
    if sim.antithetic and n % 2:
        raise ValueError("antithetic sampling needs an even path count")


def _run_blocks(n: int, threads: int, worker) -> int:
    blocks = list(iter_blocks(n))
    if threads <= 1 or len(blocks) == 1:
        for blk, lo, hi in blocks:
            worker(blk, lo, hi)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda args: worker(*args), blocks))
    return len(blocks)


def scalar_kappa_curve(
    domain: Domain,
    f,
    x0,
    s: float,
    t_grid,
    chain: ChainPath,
    sim: SimParams,
    n: int | None = None,
    seed: int | None = None,
    abar: float | None = None,
    dump_n: int = 0,
) -> CurveResult:
    """Fixed-switching estimator over a grid of record times.

    Runs E[f(X_t) exp(-integral kappa dL)] for the given switching
    realization, recording every time in t_grid from the same paths. When
    ``abar`` is supplied, a constant-reactivity control functional is
    evaluated on the identical driving noise and the per-path sup gap between
    the running exposure and abar * L is tracked at every step.
    """
    n = sim.paths if n is None else int(n)
    seed = sim.seed if seed is None else int(seed)
    _check_antithetic(sim, n)
    payoff = as_payoff(f)
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if not domain.contains(x0):
        raise ValueError(f"start point {x0} lies outside the domain closure")
    if sim.scheme == "halfline_exact" and not isinstance(domain, HalfLine):
        raise ValueError("the exact scheme is specific to the half line")
    t_grid = np.asarray(sorted(float(t) for t in t_grid))
    if t_grid.size == 0 or t_grid[0] <= s + 1e-15:
        raise ValueError("record times must be strictly after the start time")
    if np.any(np.diff(t_grid) <= 0.0):
        raise ValueError("record times must be distinct")
    t_end = float(t_grid[-1])
    if s < 0.0:
        raise ValueError(f"start time must be >= 0, got {s}")
    if chain.horizon < t_end - 1e-12:
        raise ValueError("switching path is shorter than the last record time")

    jumps = chain.jump_times
    splits = np.concatenate((jumps[(jumps > s) & (jumps < t_end)], t_grid[:-1]))
    grid = build_grid(s, t_end, sim.dt, split_times=splits)
    rec_idx = _resolve_record_indices(grid, t_grid)
    if np.unique(rec_idx).size != rec_idx.size:
        raise ValueError("record times are too close together for the step size to resolve")
    kappa_steps = np.asarray(chain.kappa_at(grid[:-1]), dtype=float)
    steps_h = np.diff(grid)
    n_rec = t_grid.size
    n_blocks = len(list(iter_blocks(n)))
    acc = _Accumulator(n_blocks, n_rec, paired=abar is not None, expo=abar is not None)
    dumps: list[DiffusionPath] = []

    rec_of_step = np.full(grid.size, -1, dtype=np.int64)
    rec_of_step[rec_idx] = np.arange(n_rec)

    def worker(blk: int, lo: int, hi: int) -> None:
        b = hi - lo
        stream = derive_stream(seed, "diffusion", blk)
        halfline = sim.scheme == "halfline_exact"
        if halfline:
            a = np.full(b, x0[0])
            runmin = np.full(b, x0[0])
            local_prev = np.zeros(b)
            x = np.full((b, 1), x0[0])
        else:
            x = np.broadcast_to(x0, (b, domain.dim)).copy()
        expo = np.zeros(b)
        local = np.zeros(b)
        gap_sup = np.zeros(b) if abar is not None else None
        vals = np.empty((b, n_rec))
        ref = np.empty((b, n_rec)) if abar is not None else None
        dump_lanes = min(dump_n, b) if blk == 0 else 0
        dump_rows: list[list[tuple]] = [[] for _ in range(dump_lanes)]

        for m in range(grid.size - 1):
            h = steps_h[m]
            if halfline:
                xi = _draw_normals(stream, (b,), sim.antithetic)
                bb = a + math.sqrt(h) * xi
                u = _draw_uniforms(stream, b, sim.antithetic)
                gap_step = bb - a
                step_min = 0.5 * (a + bb - np.sqrt(gap_step * gap_step - 2.0 * h * np.log(u)))
                a = bb
                runmin = np.minimum(runmin, step_min)
                xr, lt = _halfline_state(a, runmin)
                push = lt - local_prev
                local_prev = lt
                x[:, 0] = xr
            else:
                xi = _draw_normals(stream, (b, domain.dim), sim.antithetic)
                x, push = _apply_projection_increment(domain, x, math.sqrt(h) * xi)
            expo += kappa_steps[m] * push
            local += push
            if gap_sup is not None:
                np.maximum(gap_sup, np.abs(expo - abar * local), out=gap_sup)
            col = rec_of_step[m + 1]
            if col >= 0:
                fx = payoff(x)
                vals[:, col] = fx * np.exp(-expo)
                if ref is not None:
                    ref[:, col] = fx * np.exp(-abar * local)
            for i in range(dump_lanes):
                dump_rows[i].append((grid[m + 1], x[i].copy(), float(push[i]), float(local[i])))

        if sim.antithetic:
            half = b // 2
            vals = 0.5 * (vals[:half] + vals[half:])
            if ref is not None:
                ref = 0.5 * (ref[:half] + ref[half:])
            if gap_sup is not None:
                gap_sup = 0.5 * (gap_sup[:half] + gap_sup[half:])
        acc.add(blk, vals, ref, gap_sup)
        for i in range(dump_lanes):
            rows = dump_rows[i]
            times = np.concatenate(([s], [r[0] for r in rows]))
            pos = np.vstack([x0[None, :]] + [[r[1]] for r in rows])
            dl = np.asarray([r[2] for r in rows])
            dumps.append(DiffusionPath(times=times, positions=pos, dL=dl, scheme=sim.scheme))

    _run_blocks(n, sim.threads, worker)
    red = acc.reduce()
    return CurveResult(
        t_grid=t_grid,
        means=red["means"],
        stderrs=red["stderrs"],
        n_paths=n,
        ref_means=red.get("ref_means"),
        diff_means=red.get("diff_means"),
        diff_stderrs=red.get("diff_stderrs"),
        expo_mean=red.get("expo_mean"),
        expo_stderr=red.get("expo_stderr"),
        dumps=tuple(dumps),
    )


def annealed_curve(
    domain: Domain,
    phi,
    x0,
    initial_state: int | str,
    t_grid,
    g: GeneratorMatrix,
    sim: SimParams,
    n: int | None = None,
    seed: int | None = None,
    dump_n: int = 0,
) -> CurveResult:
    """Fresh-switching estimator over a grid of record times.

    Each path carries its own switching realization, sampled from a stream
    keyed by the global path index. Between grid nodes a path sub-steps at its
    own jump times, so the reactivity applied to each local-time increment is
    the one actually in force and recorded states are right-continuous.
    """
    n = sim.paths if n is None else int(n)
    seed = sim.seed if seed is None else int(seed)
    if sim.antithetic:
        raise ValueError("antithetic lanes are not defined for per-path switching")
    switched = as_switched_payoff(phi, g.labels)
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if not domain.contains(x0):
        raise ValueError(f"start point {x0} lies outside the domain closure")
    if sim.scheme == "halfline_exact" and not isinstance(domain, HalfLine):
        raise ValueError("the exact scheme is specific to the half line")
    k0 = g.index(initial_state) if isinstance(initial_state, str) else int(initial_state)
    if not 0 <= k0 < g.n_states:
        raise ValueError(f"initial state index {k0} out of range")
    t_grid = np.asarray(sorted(float(t) for t in t_grid))
    if t_grid.size == 0 or t_grid[0] <= 1e-15:
        raise ValueError("record times must be positive")
    t_end = float(t_grid[-1])

    grid = build_grid(0.0, t_end, sim.dt, split_times=t_grid[:-1])
    rec_idx = _resolve_record_indices(grid, t_grid)
    n_rec = t_grid.size
    kappas = np.asarray(g.kappas)
    n_blocks = len(list(iter_blocks(n)))
    acc = _Accumulator(n_blocks, n_rec, paired=False, expo=False)
    dumps: list[DiffusionPath] = []
    rec_of_step = np.full(grid.size, -1, dtype=np.int64)
    rec_of_step[rec_idx] = np.arange(n_rec)
    halfline = sim.scheme == "halfline_exact"
    dim = domain.dim

    def worker(blk: int, lo: int, hi: int) -> None:
        b = hi - lo
        dstream = derive_stream(seed, "diffusion", blk)
        chains = [
            sample_chain_path(g, k0, t_end, derive_stream(seed, "chain", p))
            for p in range(lo, hi)
        ]
        # Padded flat layout: one +inf sentinel jump per lane, state and
        # reactivity sequences of length n_jumps + 1 indexed by a pointer.
        cnt = np.asarray([c.n_jumps for c in chains], dtype=np.int64)
        base = np.concatenate(([0], np.cumsum(cnt + 1)))[:-1]
        jt_flat = np.concatenate([np.append(c.jump_times, np.inf) for c in chains])
        sid_flat = np.concatenate([np.asarray(c.states, dtype=np.int64) for c in chains])
        kap_flat = kappas[sid_flat]
        ptr = np.zeros(b, dtype=np.int64)

        if halfline:
            a = np.full(b, x0[0])
            runmin = np.full(b, x0[0])
            local_prev = np.zeros(b)
            x = np.full((b, 1), x0[0])
        else:
            x = np.broadcast_to(x0, (b, dim)).copy()
        expo = np.zeros(b)
        local = np.zeros(b)
        vals = np.empty((b, n_rec))
        sub = np.empty(b)
        dump_lanes = min(dump_n, b) if blk == 0 else 0
        dump_rows: list[list[tuple]] = [[] for _ in range(dump_lanes)]

        for m in range(grid.size - 1):
            t1 = grid[m + 1]
            sub[:] = grid[m]
            first = True
            while True:
                nj = jt_flat[base + ptr]
                target = np.minimum(nj, t1)
                h = target - sub
                if first:
                    idx = np.arange(b)
                else:
                    idx = np.nonzero(sub < t1)[0]
                    if idx.size == 0:
                        break
                ha = h[idx]
                if halfline:
                    xi = standard_normals(dstream, idx.size)
                    bb = a[idx] + np.sqrt(ha) * xi
                    u = uniforms(dstream, idx.size)
                    gap_step = bb - a[idx]
                    step_min = 0.5 * (a[idx] + bb - np.sqrt(gap_step * gap_step - 2.0 * ha * np.log(u)))
                    a[idx] = bb
                    runmin[idx] = np.minimum(runmin[idx], step_min)
                    lt = np.maximum(0.0, -runmin[idx])
                    push = lt - local_prev[idx]
                    local_prev[idx] = lt
                    x[idx, 0] = a[idx] + lt
                else:
                    xi = standard_normals(dstream, (idx.size, dim))
                    xn, push = _apply_projection_increment(domain, x[idx], np.sqrt(ha)[:, None] * xi)
                    x[idx] = xn
                kap_now = kap_flat[(base + ptr)[idx]]
                expo[idx] += kap_now * push
                local[idx] += push
                sub[idx] = target[idx]
                for d in range(dump_lanes):
                    w = np.nonzero(idx == d)[0]
                    if w.size:
                        k = int(w[0])
                        dump_rows[d].append((float(target[d]), x[d].copy(), float(push[k]), float(local[d])))
                jumped = idx[nj[idx] <= t1]
                ptr[jumped] += 1
                first = False
                if not np.any(sub < t1):
                    break
            col = rec_of_step[m + 1]
            if col >= 0:
                sid_now = sid_flat[base + ptr]
                fx = np.empty(b)
                for s_idx in np.unique(sid_now):
                    mask = sid_now == s_idx
                    fx[mask] = switched.for_state(int(s_idx))(x[mask])
                vals[:, col] = fx * np.exp(-expo)

        acc.add(blk, vals, None, None)
        for d in range(dump_lanes):
            rows = dump_rows[d]
            times = np.concatenate(([0.0], [r[0] for r in rows]))
            pos = np.vstack([x0[None, :]] + [[r[1]] for r in rows])
            dl = np.asarray([r[2] for r in rows])
            dumps.append(DiffusionPath(times=times, positions=pos, dL=dl, scheme=sim.scheme))

    _run_blocks(n, sim.threads, worker)
    red = acc.reduce()
    return CurveResult(
        t_grid=t_grid,
        means=red["means"],
        stderrs=red["stderrs"],
        n_paths=n,
        dumps=tuple(dumps),
    )


def quenched_estimate(
    domain: Domain,
    f,
    x,
    s: float,
    t: float,
    chain: ChainPath,
    sim: SimParams,
    n: int | None = None,
    seed: int | None = None,
) -> EstimatorResult:
    """E[f(X_t) exp(-integral_s^t kappa dL)] for one fixed switching path."""
    seed_used = sim.seed if seed is None else int(seed)
    x_pt = np.atleast_1d(np.asarray(x, dtype=float))
    if t < s:
        raise ValueError(f"need t >= s, got s={s}, t={t}")
    if abs(t - s) <= 1e-15:
        if not domain.contains(x_pt):
            raise ValueError(f"start point {x_pt} lies outside the domain closure")
        payoff = as_payoff(f)
        val = float(payoff(x_pt[None, :])[0])
        # Degenerate window: the functional is the payoff itself. Keep the
        # document shape of the sampled case (state at s, explicit s).
        return EstimatorResult(
            mode="quenched", mean=val, stderr=0.0, n_paths=0, t=t, x=tuple(x_pt),
            state=chain.label_at(s), dt=sim.dt, scheme=sim.scheme, seed=seed_used,
            extra={"s": s},
        )
    curve = scalar_kappa_curve(domain, f, x, s, [t], chain, sim, n=n, seed=seed_used)
    return EstimatorResult(
        mode="quenched",
        mean=float(curve.means[0]),
        stderr=float(curve.stderrs[0]),
        n_paths=curve.n_paths,
        t=t,
        x=tuple(x_pt),
        state=chain.label_at(s),
        dt=sim.dt,
        scheme=sim.scheme,
        seed=seed_used,
        extra={"s": s},
    )


def averaged_estimate(
    domain: Domain,
    f,
    x,
    t: float,
    abar: float,
    sim: SimParams,
    n: int | None = None,
    seed: int | None = None,
) -> EstimatorResult:
    """E[f(X_t) exp(-abar L_t)]: the constant effective-reactivity functional."""
    if abar < 0.0 or not np.isfinite(abar):
        raise ValueError(f"effective reactivity must be finite and >= 0, got {abar}")
    seed_used = sim.seed if seed is None else int(seed)
    chain = constant_chain_path(horizon=t, kappa=abar, label="averaged")
    curve = scalar_kappa_curve(domain, f, x, 0.0, [t], chain, sim, n=n, seed=seed_used)
    x_pt = np.atleast_1d(np.asarray(x, dtype=float))
    return EstimatorResult(
        mode="averaged",
        mean=float(curve.means[0]),
        stderr=float(curve.stderrs[0]),
        n_paths=curve.n_paths,
        t=t,
        x=tuple(x_pt),
        state=None,
        dt=sim.dt,
        scheme=sim.scheme,
        seed=seed_used,
        extra={"abar": abar},
    )


def annealed_estimate(
    domain: Domain,
    phi,
    x,
    initial_state: int | str,
    t: float,
    g: GeneratorMatrix,
    sim: SimParams,
    n: int | None = None,
    seed: int | None = None,
) -> EstimatorResult:
    """E[phi(X_t, state_t) exp(-integral kappa dL)] over paths and switches."""
    seed_used = sim.seed if seed is None else int(seed)
    curve = annealed_curve(domain, phi, x, initial_state, [t], g, sim, n=n, seed=seed_used)
    x_pt = np.atleast_1d(np.asarray(x, dtype=float))
    label = initial_state if isinstance(initial_state, str) else g.labels[int(initial_state)]
    return EstimatorResult(
        mode="annealed",
        mean=float(curve.means[0]),
        stderr=float(curve.stderrs[0]),
        n_paths=curve.n_paths,
        t=t,
        x=tuple(x_pt),
        state=label,
        dt=sim.dt,
        scheme=sim.scheme,
        seed=seed_used,
    )
