"""Headline numerical experiments: averaging sweep, gating, cross-validation.

These drivers tie the Monte Carlo estimators to their deterministic oracles
and to each other. The averaging sweep accelerates the switching clock and
watches the switched functional collapse onto the constant
effective-reactivity functional evaluated on the same driving noise; the
gating experiment runs the two-state receptor model against the effective
PDE; cross-validation produces per-point z-scores of MC against the
finite-difference solvers. Composition and small-time generator checks of the
estimator semantics live here as well.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from .chain import (
    ChainPath,
    GeneratorMatrix,
    constant_chain_path,
    rescale,
    sample_chain_path,
    stationary_distribution,
    two_state_gate,
)
from .functional import (
    SimParams,
    annealed_curve,
    as_payoff,
    effective_reactivity,
    exposure_error,
    make_payoff,
    scalar_kappa_curve,
)
from .geometry import Domain, Interval
from .pde import SpaceGrid, solve_constant_robin, solve_coupled_robin, solve_quenched_robin
from .rng import child_seed, derive_stream, uniforms

_UNIT_INTERVAL = Interval(0.0, 1.0)

# Re-exported here because the pathwise averaging diagnostic belongs to this
# module's surface; the accumulator arithmetic lives with the kernels.
exposure_error = exposure_error


def _sample_initial(g: GeneratorMatrix, initial: str, stream) -> int:
    """Initial state index: stationary draw or a fixed label."""
    if initial == "stationary":
        pi = stationary_distribution(g)
        u = float(uniforms(stream, ()))
        return int(min(np.searchsorted(np.cumsum(pi), u, side="right"), g.n_states - 1))
    return g.index(initial)


@dataclass(frozen=True)
class EpsLevel:
    """Sweep results at one switching speed.

    ``sup_errors[r]`` is replica r's sup over the (t, x) grid of the absolute
    gap between the switched functional and its constant-reactivity partner
    on shared noise; ``expo_errors[r]`` is the replica's mean (over paths and
    grid points) of the pathwise sup gap between the running exposure and
    abar * L. ``sup_mc_stderrs[r]`` is the Monte Carlo standard error of the
    paired difference at the replica's argmax point, separating sampling
    noise from realization-to-realization spread.
    """

    eps: float
    sup_errors: np.ndarray = field(repr=False)
    expo_errors: np.ndarray = field(repr=False)
    sup_mc_stderrs: np.ndarray = field(repr=False)
    per_t_curve: np.ndarray = field(repr=False)  # replica mean of max_x |gap| per t

    @property
    def mean_sup_error(self) -> float:
        return float(np.mean(self.sup_errors))

    @property
    def stderr_sup_error(self) -> float:
        r = self.sup_errors.size
        return float(np.std(self.sup_errors, ddof=1) / np.sqrt(r)) if r > 1 else 0.0

    @property
    def mean_expo_error(self) -> float:
        return float(np.mean(self.expo_errors))


@dataclass(frozen=True)
class SweepReport:
    """Averaging-limit sweep over a ladder of switching speeds."""

    abar: float
    eps_values: tuple[float, ...]
    levels: tuple[EpsLevel, ...]
    t_grid: np.ndarray = field(repr=False)
    x_grid: np.ndarray = field(repr=False)
    replicas: int = 16
    n_paths: int = 0
    seed: int = 0
    initial: str = "stationary"

    def __post_init__(self) -> None:
        if any(b >= a for a, b in zip(self.eps_values, self.eps_values[1:])):
            raise ValueError("switching-speed ladder must be strictly decreasing")
        for lev in self.levels:
            if np.any(lev.sup_errors < 0.0) or np.any(lev.expo_errors < 0.0):
                raise ValueError("sweep errors must be nonnegative")


def averaging_sweep(
    f,
    x_grid,
    t_grid,
    g: GeneratorMatrix,
    eps_list,
    replicas: int,
    sim: SimParams,
    seed: int,
    initial: str = "stationary",
    domain: Domain = _UNIT_INTERVAL,
) -> SweepReport:
    """Fast-switching ladder: switched functional vs its averaging limit.

    For each switching speed and each chain replica, one realization of the
    accelerated chain is frozen and the switched functional is estimated on
    the (t, x) grid. The constant-reactivity limit functional runs inside the
    same kernel on the identical driving noise, so the reported gap is a
    paired difference whose Monte Carlo noise is far below either side's
    marginal stderr; without that coupling the small-eps levels would be
    indistinguishable at practical path counts. The sup over time is taken on
    the discrete t grid recorded in the report.
    """
    eps_values = tuple(float(e) for e in eps_list)
    if len(eps_values) == 0 or any(e <= 0.0 for e in eps_values):
        raise ValueError("switching speeds must be positive")
    if any(b >= a for a, b in zip(eps_values, eps_values[1:])):
        raise ValueError("switching-speed ladder must be strictly decreasing")
    if not 1 <= replicas <= 10_000:
        raise ValueError(f"replica count must lie in [1, 1e4], got {replicas}")
    payoff = as_payoff(f)
    abar = effective_reactivity(g)
    x_grid = np.atleast_2d(np.asarray(x_grid, dtype=float))
    if x_grid.shape[0] == 1 and domain.dim == 1 and x_grid.shape[1] > 1:
        x_grid = x_grid.T
    t_grid = np.asarray(sorted(float(t) for t in t_grid))
    t_end = float(t_grid[-1])
    n_t, n_x = t_grid.size, x_grid.shape[0]
    inner_sim = replace(sim, threads=1)

    sup_err = np.zeros((len(eps_values), replicas))
    sup_mc = np.zeros((len(eps_values), replicas))
    expo_err = np.zeros((len(eps_values), replicas))
    curves = np.zeros((len(eps_values), replicas, n_t))

    def task(e_idx: int, r: int) -> None:
        eps = eps_values[e_idx]
        chain_stream = derive_stream(seed, "sweep-chain", e_idx, r)
        k0 = _sample_initial(g, initial, chain_stream)
        path = sample_chain_path(rescale(g, eps), k0, t_end, chain_stream)
        gaps = np.empty((n_t, n_x))
        mc_se = np.empty((n_t, n_x))
        expo_acc = 0.0
        for ix in range(n_x):
            curve = scalar_kappa_curve(
                domain,
                payoff,
                x_grid[ix],
                0.0,
                t_grid,
                path,
                inner_sim,
                seed=child_seed(seed, "sweep-mc", e_idx, r, ix),
                abar=abar,
            )
            gaps[:, ix] = np.abs(curve.diff_means)
            mc_se[:, ix] = curve.diff_stderrs
            expo_acc += curve.expo_mean
        flat = int(np.argmax(gaps))
        sup_err[e_idx, r] = float(gaps.flat[flat])
        sup_mc[e_idx, r] = float(mc_se.flat[flat])
        expo_err[e_idx, r] = expo_acc / n_x
        curves[e_idx, r] = gaps.max(axis=1)

    tasks = [(e, r) for e in range(len(eps_values)) for r in range(replicas)]
    if sim.threads > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=sim.threads) as pool:
            list(pool.map(lambda ab: task(*ab), tasks))
    else:
        for e, r in tasks:
            task(e, r)

    levels = tuple(
        EpsLevel(
            eps=eps_values[e],
            sup_errors=sup_err[e].copy(),
            expo_errors=expo_err[e].copy(),
            sup_mc_stderrs=sup_mc[e].copy(),
            per_t_curve=curves[e].mean(axis=0),
        )
        for e in range(len(eps_values))
    )
    return SweepReport(
        abar=abar,
        eps_values=eps_values,
        levels=levels,
        t_grid=t_grid,
        x_grid=x_grid,
        replicas=replicas,
        n_paths=sim.paths,
        seed=seed,
        initial=initial,
    )


@dataclass(frozen=True)
class GatingReport:
    """Two-state receptor gate vs its effective constant-reactivity limit."""

    kappa: float
    lam_on: float
    lam_off: float
    pi: tuple[float, float]
    abar: float
    eps: float
    t_grid: np.ndarray = field(repr=False)
    x_grid: np.ndarray = field(repr=False)
    mc_means: np.ndarray = field(repr=False)  # (n_t, n_x)
    mc_stderrs: np.ndarray = field(repr=False)
    pde_values: np.ndarray = field(repr=False)
    max_discrepancy: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if abs(sum(self.pi) - 1.0) > 1e-12:
            raise ValueError("gate occupation probabilities must sum to 1")
        if abs(self.abar - self.kappa * self.pi[1]) > 1e-12:
            raise ValueError("effective reactivity must equal kappa times the open fraction")


def gating_experiment(
    kappa: float,
    lam_on: float,
    lam_off: float,
    f,
    x_grid,
    t_grid,
    eps: float,
    sim: SimParams,
    seed: int,
    n_space: int = 399,
    dt_pde: float = 1e-4,
) -> GatingReport:
    """Receptor gate: one fast-switching realization against the limit PDE.

    Builds the closed/open chain, freezes one realization of it at switching
    speed 1/eps, estimates the switched functional on the grid, and compares
    with the constant-reactivity solver at the effective coefficient.
    """
    if eps <= 0.0:
        raise ValueError(f"switching-speed parameter must be positive, got {eps}")
    g = two_state_gate(kappa, lam_on, lam_off)
    pi = stationary_distribution(g)
    abar = effective_reactivity(g)
    payoff = as_payoff(f)
    x_grid = np.asarray(sorted(float(x) for x in x_grid))
    t_grid = np.asarray(sorted(float(t) for t in t_grid))
    t_end = float(t_grid[-1])

    chain_stream = derive_stream(seed, "gating-chain")
    k0 = _sample_initial(g, "stationary", chain_stream)
    path = sample_chain_path(rescale(g, eps), k0, t_end, chain_stream)

    inner_sim = replace(sim, threads=1)
    mc = np.empty((t_grid.size, x_grid.size))
    se = np.empty_like(mc)

    def task(ix: int) -> None:
        curve = scalar_kappa_curve(
            _UNIT_INTERVAL,
            payoff,
            [x_grid[ix]],
            0.0,
            t_grid,
            path,
            inner_sim,
            seed=child_seed(seed, "gating-mc", ix),
        )
        mc[:, ix] = curve.means
        se[:, ix] = curve.stderrs

    if sim.threads > 1 and x_grid.size > 1:
        with ThreadPoolExecutor(max_workers=sim.threads) as pool:
            list(pool.map(task, range(x_grid.size)))
    else:
        for ix in range(x_grid.size):
            task(ix)

    sol = solve_constant_robin(SpaceGrid(n_space), abar, payoff, t_end, dt_pde, t_record=t_grid)
    pde_vals = np.empty_like(mc)
    for it, t in enumerate(t_grid):
        level = sol.at(t)
        pde_vals[it] = np.interp(x_grid, sol.nodes, level)

    return GatingReport(
        kappa=float(kappa),
        lam_on=float(lam_on),
        lam_off=float(lam_off),
        pi=(float(pi[0]), float(pi[1])),
        abar=abar,
        eps=float(eps),
        t_grid=t_grid,
        x_grid=x_grid,
        mc_means=mc,
        mc_stderrs=se,
        pde_values=pde_vals,
        max_discrepancy=float(np.max(np.abs(mc - pde_vals))),
        seed=seed,
    )


@dataclass(frozen=True)
class XvalRow:
    t: float
    x: float
    state: str | None
    mc_mean: float
    mc_stderr: float
    pde_value: float
    z: float


@dataclass(frozen=True)
class XvalReport:
    """MC vs finite-difference comparison with per-point z-scores."""

    mode: str
    rows: tuple[XvalRow, ...]
    max_abs_z: float
    frac_z_within_3: float
    max_abs_diff: float
    seed: int

    @property
    def n_points(self) -> int:
        return len(self.rows)


def _z_score(diff: float, stderr: float, n: int, bound: float) -> float:
    if stderr > 0.0:
        return diff / stderr
    # Zero sample variance means all n paths scored the identical value; the
    # usual z statistic carries no scale there. For a payoff bounded by B a
    # true mean shifted by d forces a differing value with probability at
    # least |d| / (2B), so n ties are consistent at the 5% level exactly when
    # |d| <= 6B/n (the rule of three; with antithetic pairs this is slightly
    # stricter than exact). Inside that region the sample holds no evidence
    # of a discrepancy; beyond it the gap is real however small the observed
    # variance. Without a sample (n = 0) only round-off gaps count as exact.
    scale = bound if math.isfinite(bound) and bound > 0.0 else 1.0
    if n >= 1 and abs(diff) <= 6.0 * scale / n:
        return 0.0
    return 0.0 if abs(diff) <= 1e-9 else math.copysign(math.inf, diff)


def cross_validate(mode: str, config, n: int | None = None, seed: int | None = None) -> XvalReport:
    """Per-point z-scores of a Monte Carlo mode against its solver oracle.

    Runs on the unit interval only, since the solvers are 1-d. The switching
    input follows the config: the chain generator for annealed, the explicit
    (or constant) switching path for quenched, the effective reactivity for
    averaged.
    """
    from .config import SimConfig, build_payoff, quenched_path_from_config

    if mode not in ("annealed", "quenched", "averaged"):
        raise ValueError(f"unknown cross-validation mode {mode!r}")
    if not isinstance(config, SimConfig):
        raise TypeError("cross_validate needs a parsed SimConfig")
    dom = config.domain
    if not isinstance(dom, Interval) or abs(dom.a) > 0.0 or abs(dom.b - 1.0) > 0.0:
        raise ValueError("cross-validation requires the unit interval domain")
    seed = config.sim.seed if seed is None else int(seed)
    sim = config.sim
    n_used = sim.paths if n is None else int(n)
    payoff = build_payoff(config)
    grid = SpaceGrid(config.pde.n_interior)
    t_grid = np.asarray(config.t_grid)
    x_grid = np.asarray([x[0] for x in config.x_grid])
    t_end = float(t_grid[-1])
    rows: list[XvalRow] = []

    if mode == "annealed":
        g = config.chain
        sol = solve_coupled_robin(grid, g, payoff, t_end, config.pde.dt_pde, t_record=t_grid)
        for k, label in enumerate(g.labels):
            for ix, x in enumerate(x_grid):
                curve = annealed_curve(
                    dom, payoff, [x], k, t_grid, g, sim,
                    n=n, seed=child_seed(seed, "xval-annealed", k, ix),
                )
                for it, t in enumerate(t_grid):
                    pv = sol.at(t, x=float(x), state=k)
                    diff = float(curve.means[it]) - pv
                    rows.append(XvalRow(
                        t=float(t), x=float(x), state=label,
                        mc_mean=float(curve.means[it]), mc_stderr=float(curve.stderrs[it]),
                        pde_value=pv,
                        z=_z_score(diff, float(curve.stderrs[it]), n_used, payoff.bound),
                    ))
    else:
        if mode == "quenched":
            chain = quenched_path_from_config(config, t_end)
            sol = solve_quenched_robin(grid, chain, payoff, t_end, config.pde.dt_pde, t_record=t_grid)
            state_of_row = chain.labels[chain.states[0]]
        else:
            abar = config.eval.abar
            if abar is None:
                abar = effective_reactivity(config.chain)
            chain = constant_chain_path(horizon=t_end, kappa=abar, label="averaged")
            sol = solve_constant_robin(grid, abar, payoff, t_end, config.pde.dt_pde, t_record=t_grid)
            state_of_row = None
        for ix, x in enumerate(x_grid):
            curve = scalar_kappa_curve(
                dom, payoff, [x], 0.0, t_grid, chain, sim,
                n=n, seed=child_seed(seed, "xval-" + mode, ix),
            )
            for it, t in enumerate(t_grid):
                pv = sol.at(t, x=float(x))
                diff = float(curve.means[it]) - pv
                rows.append(XvalRow(
                    t=float(t), x=float(x), state=state_of_row,
                    mc_mean=float(curve.means[it]), mc_stderr=float(curve.stderrs[it]),
                    pde_value=pv,
                    z=_z_score(diff, float(curve.stderrs[it]), n_used, payoff.bound),
                ))

    zs = np.asarray([abs(r.z) for r in rows])
    diffs = np.asarray([abs(r.mc_mean - r.pde_value) for r in rows])
    return XvalReport(
        mode=mode,
        rows=tuple(rows),
        max_abs_z=float(np.max(zs)),
        frac_z_within_3=float(np.mean(zs <= 3.0)),
        max_abs_diff=float(np.max(diffs)),
        seed=seed,
    )


@dataclass(frozen=True)
class CompositionReport:
    """Two-window propagator product vs the single-window estimate."""

    t_split: float
    t_end: float
    x_grid: np.ndarray = field(repr=False)
    direct: np.ndarray = field(repr=False)
    composed: np.ndarray = field(repr=False)
    combined_stderr: np.ndarray = field(repr=False)

    @property
    def max_z(self) -> float:
        gap = np.abs(self.direct - self.composed)
        return float(np.max(gap / np.maximum(self.combined_stderr, 1e-300)))


def quenched_composition_check(
    f,
    chain: ChainPath,
    t_end: float,
    x_grid,
    sim: SimParams,
    seed: int,
    t_split: float | None = None,
    inner_nodes: int = 41,
    domain: Domain = _UNIT_INTERVAL,
) -> CompositionReport:
    """Check the two-parameter propagator identity on one switching path.

    The direct estimate runs the functional over the whole window [0, t]. The
    composed one tabulates the inner window's value function on a node grid,
    wraps it as an interpolated payoff, and runs the outer window against it.
    The combined stderr per point folds the outer stderr together with the
    interpolation-weighted inner stderrs and a second-difference bound on the
    interpolation bias.
    """
    if not isinstance(domain, Interval):
        raise ValueError("the composition check tabulates on an interval")
    t_split = 0.5 * t_end if t_split is None else float(t_split)
    if not 0.0 < t_split < t_end:
        raise ValueError("the split time must lie strictly inside the window")
    payoff = as_payoff(f)
    x_grid = np.asarray(sorted(float(x) for x in x_grid))
    nodes = np.linspace(domain.a, domain.b, inner_nodes)

    inner_means = np.empty(inner_nodes)
    inner_se = np.empty(inner_nodes)
    for i, xn in enumerate(nodes):
        c = scalar_kappa_curve(
            domain, payoff, [xn], t_split, [t_end], chain, sim,
            seed=child_seed(seed, "comp-inner", i),
        )
        inner_means[i] = c.means[0]
        inner_se[i] = c.stderrs[0]

    inner_payoff = make_payoff("tabulated", domain=domain, xs=nodes.tolist(), ys=inner_means.tolist())
    # Interpolation-bias allowance from the tabulated curve's curvature:
    # linear interpolation is off by at most max|f''| h^2 / 8, and the second
    # difference of the node values is an h^2-scaled estimate of f''.
    second = np.abs(np.diff(inner_means, 2))
    interp_bias = 0.125 * float(np.max(second)) if second.size else 0.0
    # Sampling error of the interpolated payoff: adjacent-node stderrs.
    interp_se = float(np.max(inner_se))

    direct = np.empty(x_grid.size)
    direct_se = np.empty(x_grid.size)
    composed = np.empty(x_grid.size)
    composed_se = np.empty(x_grid.size)
    for ix, x in enumerate(x_grid):
        d = scalar_kappa_curve(
            domain, payoff, [x], 0.0, [t_end], chain, sim,
            seed=child_seed(seed, "comp-direct", ix),
        )
        direct[ix] = d.means[0]
        direct_se[ix] = d.stderrs[0]
        o = scalar_kappa_curve(
            domain, inner_payoff, [x], 0.0, [t_split], chain, sim,
            seed=child_seed(seed, "comp-outer", ix),
        )
        composed[ix] = o.means[0]
        composed_se[ix] = o.stderrs[0]

    combined = np.sqrt(direct_se**2 + composed_se**2 + interp_se**2) + interp_bias
    return CompositionReport(
        t_split=t_split,
        t_end=t_end,
        x_grid=x_grid,
        direct=direct,
        composed=composed,
        combined_stderr=combined,
    )


def robin_eigenfrequency(kappa: float) -> float:
    """Smallest positive frequency w with w tan(w/2) = kappa.

    cos(w (x - 1/2)) then satisfies the Robin condition at both endpoints of
    [0, 1], making it an exact eigenfunction of the half-Laplacian with
    eigenvalue -w^2/2. kappa = 0 degenerates to the constant function.
    """
    if kappa < 0.0:
        raise ValueError(f"reactivity must be >= 0, got {kappa}")
    if kappa == 0.0:
        return 0.0
    lo, hi = 1e-9, np.pi - 1e-9
    return float(brentq(lambda w: w * np.tan(0.5 * w) - kappa, lo, hi, xtol=1e-14))


@dataclass(frozen=True)
class GeneratorCheckRow:
    h: float
    max_error: float


def generator_check(
    g: GeneratorMatrix,
    h_values=(4e-3, 2e-3, 1e-3),
    n_space: int = 799,
    dt_pde: float = 2e-5,
) -> list[GeneratorCheckRow]:
    """Small-time limit of the coupled solver against the exact generator.

    Uses per-state Robin eigenfunctions, for which the half-Laplacian acts
    exactly as -w_k^2/2, so ((u(h) - phi)/h - [half-Laplacian + switching])
    should shrink linearly in h. Returns the max-norm error per h, restricted
    to interior nodes away from the endpoints where the eigenfunction payoff
    is evaluated without boundary closure artifacts.
    """
    grid = SpaceGrid(n_space)
    nodes = grid.nodes
    omegas = [robin_eigenfrequency(k) for k in g.kappas]
    phis = [np.cos(w * (nodes - 0.5)) for w in omegas]
    q = g.q
    exact = np.stack(
        [
            -0.5 * omegas[k] ** 2 * phis[k] + sum(q[k, j] * phis[j] for j in range(g.n_states))
            for k in range(g.n_states)
        ]
    )
    payoffs = [
        make_payoff("tabulated", xs=nodes.tolist(), ys=phis[k].tolist()) for k in range(g.n_states)
    ]
    rows = []
    interior = slice(2, -2)
    for h in sorted(h_values, reverse=True):
        sol = solve_coupled_robin(grid, g, payoffs, float(h), dt_pde)
        u_h = sol.values[-1]
        rate = (u_h - np.stack(phis)) / h
        err = float(np.max(np.abs((rate - exact)[:, interior])))
        rows.append(GeneratorCheckRow(h=float(h), max_error=err))
    return rows
