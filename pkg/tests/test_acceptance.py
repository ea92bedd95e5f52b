"""Acceptance gate: ten end-to-end checks with pinned tolerances.

Each check prints one ``[criterion k] PASS/FAIL`` line (collected again in the
terminal summary by conftest) and then asserts, so a red run still reports the
status of every criterion it reached. Statistical checks use frozen seeds;
their tolerances (3 stderr bands, 2e-2 absolute floors, a 1% KS level) were
sized so a correct implementation passes with large margin and a biased one
cannot.
"""
from __future__ import annotations

import math
import time

import numpy as np
from scipy import stats

import conftest
from elastic_switch.chain import ChainPath, two_state_gate
from elastic_switch.cli import main
from elastic_switch.config import config_from_dict
from elastic_switch.experiments import (
    averaging_sweep,
    cross_validate,
    gating_experiment,
    quenched_composition_check,
)
from elastic_switch.functional import SimParams, averaged_estimate, make_payoff
from elastic_switch.geometry import Disk, HalfLine, Interval, Rectangle
from elastic_switch.pde import SpaceGrid, solve_constant_robin, trapezoid_mass
from elastic_switch.rbm import (
    projection_dt_ladder,
    simulate_halfline_exact_batch,
    simulate_rbm_batch,
)
from elastic_switch.rng import derive_stream, uniforms

# E[exp(-L_1)] for reflected Brownian motion started at the origin of the half
# line with unit reactivity: exp(1/2) * erfc(1/sqrt(2)), evaluated by hand.
ELASTIC_HALFLINE = 0.5231565837302466

# exp(-pi^2 t / 2) * cos(pi x) at t = 0.2, x = 0.25.
NEUMANN_COS = 0.26354424025464895


def _record(k: int, ok: bool, detail: str) -> str:
    line = f"[criterion {k}] {'PASS' if ok else 'FAIL'} - {detail}"
    print(line)
    conftest.ACCEPTANCE_LINES.append(line)
    return line


def test_01_halfline_elastic_oracle():
    # Exact scheme, one million paths, against the closed form; the quoted
    # runtime budget is two minutes on a single thread.
    sim = SimParams(dt=0.1, paths=1_000_000, seed=617, scheme="halfline_exact", threads=1)
    t0 = time.perf_counter()
    res = averaged_estimate(HalfLine(), make_payoff("constant"), [0.0], 1.0, 1.0, sim)
    elapsed = time.perf_counter() - t0
    err = abs(res.mean - ELASTIC_HALFLINE)
    ok = err <= 3.0 * res.stderr and elapsed <= 120.0
    line = _record(
        1,
        ok,
        f"mean {res.mean:.6f} vs {ELASTIC_HALFLINE:.6f}, "
        f"|err| {err:.2e} <= 3se {3.0 * res.stderr:.2e}, {elapsed:.1f}s <= 120s",
    )
    assert ok, line


def test_02_local_time_law():
    # At the origin the terminal local time of the exact scheme has the law of
    # |N(0, 1)| at t = 1 for any step size.
    stream = derive_stream(929, "acceptance-ks")
    batch = simulate_halfline_exact_batch(0.0, 1.0, 0.25, stream, 100_000)
    l1 = batch.dL.sum(axis=1)
    ks = stats.kstest(l1, "halfnorm")
    ok = ks.pvalue >= 0.01
    line = _record(
        2, ok, f"KS stat {ks.statistic:.5f}, p {ks.pvalue:.3f} >= 0.01 on 1e5 samples"
    )
    assert ok, line


def test_03_neumann_step_ladder():
    # Projection scheme on the unit interval, pure reflection, eigenfunction
    # payoff: bias must shrink monotonically along the step ladder and the
    # finest level must land on the closed form. Shared base increments make
    # the level-to-level comparison essentially deterministic.
    levels = projection_dt_ladder(
        Interval(0.0, 1.0),
        [0.25],
        0.2,
        [1e-3, 2.5e-4, 1e-4],
        n=200_000,
        seed=431,
        kappa=0.0,
        payoff=make_payoff("cos_pi_x"),
    )
    errs = [abs(lev.mean - NEUMANN_COS) for lev in levels]
    fine = levels[-1]
    band = 3.0 * fine.stderr + 2e-2
    ok = errs[0] > errs[1] > errs[2] and errs[2] <= band
    line = _record(
        3,
        ok,
        f"errors {errs[0]:.2e} > {errs[1]:.2e} > {errs[2]:.2e}, finest <= {band:.2e}",
    )
    assert ok, line


def test_04_annealed_vs_coupled_fd():
    # Fresh switching for the receptor gate against the state-coupled solver
    # on a 9 x 50 grid from both initial states. Final-time points must agree
    # within max(3 stderr, 2e-2) pointwise, and at least 99% of all z scores
    # must fall inside +-3.
    cfg = config_from_dict(
        {
            "chain": {
                "states": [
                    {"label": "closed", "kappa": 0.0},
                    {"label": "open", "kappa": 2.0},
                ],
                "q": [[-1.0, 1.0], [3.0, -3.0]],
                "initial": "closed",
            },
            "sim": {"dt": 1e-5, "paths": 2750, "seed": 2027},
            "payoff": {"name": "constant", "value": 1.0},
            "grid": {
                "x": [round(0.1 * k, 10) for k in range(1, 10)],
                "t": [round(0.01 * k, 10) for k in range(1, 51)],
            },
            "pde": {"n": 399, "dt": 1e-4},
        }
    )
    rep = cross_validate("annealed", cfg)
    final = [r for r in rep.rows if abs(r.t - 0.5) < 1e-9]
    assert len(final) == 18
    gaps = [abs(r.mc_mean - r.pde_value) for r in final]
    caps = [max(3.0 * r.mc_stderr, 2e-2) for r in final]
    final_ok = all(g <= c for g, c in zip(gaps, caps))
    frac_ok = rep.frac_z_within_3 >= 0.99
    ok = final_ok and frac_ok
    line = _record(
        4,
        ok,
        f"worst final-time gap {max(gaps):.2e} (cap {min(caps):.1e}), "
        f"{100.0 * rep.frac_z_within_3:.2f}% of {rep.n_points} z within 3",
    )
    assert ok, line


def test_05_quenched_composition():
    # Two-parameter propagator identity on a single frozen switching path:
    # direct run over the full window vs composition through a tabulated
    # intermediate value function, within 3 combined stderr everywhere.
    chain = ChainPath(
        horizon=0.5,
        labels=("closed", "open"),
        kappas=(0.0, 2.0),
        states=(0, 1),
        jump_times=np.array([0.2]),
    )
    sim = SimParams(dt=2.5e-4, paths=4000, seed=550)
    rep = quenched_composition_check(
        make_payoff("constant"),
        chain,
        0.5,
        np.linspace(0.1, 0.9, 9),
        sim,
        seed=550,
        inner_nodes=41,
    )
    ok = rep.max_z <= 3.0
    line = _record(5, ok, f"max |z| {rep.max_z:.2f} <= 3 over {rep.x_grid.size} points")
    assert ok, line


def test_06_averaging_sweep():
    # Fast-switching ladder at speeds 1, 0.1, 0.01 with 16 chain replicas:
    # both error summaries must be nonincreasing and the fastest level must
    # track the constant-reactivity limit to 5e-2 in sup norm.
    g = two_state_gate(2.0, 1.0, 3.0)
    sim = SimParams(dt=1e-3, paths=100_000, seed=660, threads=1)
    rep = averaging_sweep(
        make_payoff("constant"),
        np.linspace(0.1, 0.9, 9),
        [round(0.05 * k, 10) for k in range(1, 11)],
        g,
        (1.0, 0.1, 0.01),
        16,
        sim,
        seed=660,
    )
    sups = [lev.mean_sup_error for lev in rep.levels]
    expos = [lev.mean_expo_error for lev in rep.levels]
    ok = (
        sups[0] >= sups[1] >= sups[2]
        and expos[0] >= expos[1] >= expos[2]
        and sups[2] <= 5e-2
    )
    line = _record(
        6,
        ok,
        f"sup errors {sups[0]:.3f} >= {sups[1]:.3f} >= {sups[2]:.3f} (<= 5e-2), "
        f"exposure gaps {expos[0]:.3f} >= {expos[1]:.3f} >= {expos[2]:.3f}",
    )
    assert ok, line


def test_07_gate_averaging_constants():
    # Stationary law and effective reactivity of the receptor gate must match
    # their closed forms to 1e-12 for randomized rate triples.
    stream = derive_stream(770, "acceptance-rates")
    sim = SimParams(dt=0.02, paths=64, seed=7)
    worst = 0.0
    for i in range(5):
        u = uniforms(stream, 3)
        kappa = 0.5 + 3.5 * u[0]
        lam_on = 0.2 + 4.8 * u[1]
        lam_off = 0.2 + 4.8 * u[2]
        rep = gating_experiment(
            kappa,
            lam_on,
            lam_off,
            make_payoff("constant"),
            [0.5],
            [0.2],
            eps=0.5,
            sim=sim,
            seed=70 + i,
            n_space=49,
            dt_pde=1e-3,
        )
        total = lam_on + lam_off
        worst = max(
            worst,
            abs(rep.pi[0] - lam_off / total),
            abs(rep.pi[1] - lam_on / total),
            abs(rep.abar - kappa * lam_on / total),
        )
    ok = worst <= 1e-12
    line = _record(7, ok, f"worst closed-form gap {worst:.2e} <= 1e-12 over 5 rate triples")
    assert ok, line


def test_08_pathwise_invariants():
    # Across every domain shape: positions stay in the closure, local time
    # starts at zero and never decreases, the projection scheme only collects
    # local time at boundary contact, and the exposure weight is a value in
    # (0, 1] that never increases. All checked on more than 1e4 fresh paths.
    kappa = 1.0
    cases = [
        (Interval(-1.0, 2.0), [0.5]),
        (HalfLine(), [0.3]),
        (Rectangle(0.0, 1.0, -1.0, 1.0), [0.4, 0.25]),
        (Disk(0.0, 0.0, 1.0), [0.2, -0.1]),
    ]
    total = 0

    def weight_checks(batch):
        assert np.all(batch.dL >= 0.0)
        local = np.cumsum(batch.dL, axis=1)
        weight = np.exp(-kappa * local)
        assert np.all(weight > 0.0) and np.all(weight <= 1.0)
        assert np.all(np.diff(weight, axis=1) <= 0.0)

    for i, (dom, x0) in enumerate(cases):
        batch = simulate_rbm_batch(dom, x0, 1.0, 2e-2, derive_stream(880, "inv", i), 2700)
        for j in range(batch.n_paths):
            batch.path(j).check_invariants(dom)
        weight_checks(batch)
        total += batch.n_paths

    exact = simulate_halfline_exact_batch(0.0, 1.0, 2e-2, derive_stream(880, "inv", "x"), 2700)
    for j in range(exact.n_paths):
        exact.path(j).check_invariants(HalfLine())
    weight_checks(exact)
    total += exact.n_paths

    # Weighted payoff never exceeds the payoff's own bound.
    ib = simulate_rbm_batch(
        Interval(0.0, 1.0), [0.5], 1.0, 2e-2, derive_stream(880, "inv", "f"), 2700
    )
    f = make_payoff("cos_pi_x")
    n, m = ib.dL.shape
    vals = f(ib.positions[:, 1:, :].reshape(n * m, 1)).reshape(n, m)
    weighted = vals * np.exp(-kappa * np.cumsum(ib.dL, axis=1))
    assert np.all(np.abs(weighted) <= 1.0 + 1e-12)
    total += n

    ok = total >= 10_000
    line = _record(8, ok, f"all pathwise invariants hold on {total} paths over 4 domain shapes")
    assert ok, line


def test_09_pde_self_convergence():
    # Spatial self-convergence of the constant-Robin solver at order >= 1.9,
    # exact-to-8-digits mass conservation under pure reflection, and the
    # discrete maximum principle, which the steppers enforce at every time
    # step by raising on any violation.
    f = make_payoff("cos_pi_x")
    sols = [
        solve_constant_robin(SpaceGrid(m), 1.0, f, 0.25, dt_pde=1e-4) for m in (49, 99, 199)
    ]
    coarse = sols[0].nodes
    on_coarse = [np.interp(coarse, s.nodes, s.at(0.25)) for s in sols]
    d1 = float(np.max(np.abs(on_coarse[0] - on_coarse[1])))
    d2 = float(np.max(np.abs(on_coarse[1] - on_coarse[2])))
    order = math.log2(d1 / d2)

    grid = SpaceGrid(399)

    def bump(pts):
        return 1.0 + np.cos(np.pi * pts[:, 0])

    free = solve_constant_robin(grid, 0.0, bump, 0.5, dt_pde=1e-4, t_record=[0.1, 0.25, 0.5])
    mass0 = trapezoid_mass(bump(grid.nodes[:, None]), grid.dx)
    drift = max(abs(trapezoid_mass(free.at(t), grid.dx) - mass0) for t in (0.1, 0.25, 0.5))

    sup_ok = all(
        float(np.max(np.abs(s.at(0.25)))) <= 1.0 + 1e-9 for s in sols
    ) and all(float(np.max(np.abs(free.at(t)))) <= 2.0 + 1e-9 for t in (0.1, 0.25, 0.5))

    ok = order >= 1.9 and drift <= 1e-8 and sup_ok
    line = _record(
        9,
        ok,
        f"spatial order {order:.3f} >= 1.9, mass drift {drift:.1e} <= 1e-8, "
        "max principle enforced at every solver step",
    )
    assert ok, line


def test_10_thread_determinism(tmp_path):
    # Byte-identical outputs regardless of worker count, for both the grid
    # simulation and the cross-validation commands.
    cfg_text = """
[chain]
states = [ { label = "closed", kappa = 0.0 }, { label = "open", kappa = 2.0 } ]
q = [[-1.0, 1.0], [3.0, -3.0]]
initial = "closed"

[sim]
dt = 0.005
paths = 3000
seed = 424

[payoff]
name = "cos_pi_x"

[grid]
x = [0.25, 0.5, 0.75]
t = [0.2, 0.4]

[pde]
n = 99
dt = 1e-3

[eval]
x = 0.5
t = 0.4
"""
    cfg = tmp_path / "det.toml"
    cfg.write_text(cfg_text)

    def run(args, stem):
        rc = main(args + ["--out", str(tmp_path / stem)])
        assert rc == 0
        return (
            (tmp_path / f"{stem}.json").read_bytes(),
            (tmp_path / f"{stem}.csv").read_bytes(),
        )

    sim_outs = [
        run(["simulate", "annealed", "--config", str(cfg), "--grid", "--threads", th], f"sim_{th}")
        for th in ("1", "3")
    ]
    sim_outs.append(
        run(["simulate", "annealed", "--config", str(cfg), "--grid", "--threads", "1"], "sim_rerun")
    )
    xval_outs = [
        run(["xval", "--mode", "annealed", "--config", str(cfg), "--threads", th], f"xv_{th}")
        for th in ("1", "4")
    ]
    ok = sim_outs[0] == sim_outs[1] == sim_outs[2] and xval_outs[0] == xval_outs[1]
    n_files = 2 * (len(sim_outs) + len(xval_outs))
    line = _record(
        10, ok, f"{n_files} output files byte-identical across reruns and worker counts 1/3/4"
    )
    assert ok, line
