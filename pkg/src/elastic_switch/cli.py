"""Command-line front end.

Subcommands:

- ``simulate {annealed,quenched,averaged}``: Monte Carlo boundary functionals,
  at the configured eval point or (with ``--grid``) over the (t, x) grid.
- ``pde {constant,quenched,coupled}``: the finite-difference reference
  solvers on the unit interval.
- ``averaging``: the fast-switching ladder experiment.
- ``gating``: two-state receptor gate against its averaged limit.
- ``xval``: Monte Carlo vs finite differences with z-scores.
- ``validate-config``: parse, validate and echo the resolved configuration.

Exit codes: 0 on success, 2 for configuration or usage problems, 3 when a
solver detects a numerical failure.

The seed is taken from ``--seed`` if given, else from the
``ELASTIC_SWITCH_SEED`` environment variable (logged when used), else from
the config. Results never depend on ``--threads``.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from dataclasses import replace

import numpy as np

from .chain import constant_chain_path
from .config import (
    ConfigError,
    SimConfig,
    build_payoff,
    build_switched_payoff,
    default_config,
    load_config,
    quenched_path_from_config,
    resolved_config,
)
from .experiments import averaging_sweep, cross_validate, gating_experiment
from .functional import (
    EstimatorResult,
    annealed_curve,
    effective_reactivity,
    quenched_estimate,
    scalar_kappa_curve,
)
from .geometry import Interval
from .output import (
    dumps_json,
    estimator_to_dict,
    format_float,
    gating_rows,
    gating_to_dict,
    pde_rows,
    sweep_rows,
    sweep_to_dict,
    write_csv,
    write_json,
    write_path_dumps,
    xval_rows,
    xval_to_dict,
)
from .pde import (
    NumericalError,
    SpaceGrid,
    solve_constant_robin,
    solve_coupled_robin,
    solve_quenched_robin,
)
from .rng import child_seed

log = logging.getLogger("elastic_switch")


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE", help="TOML configuration file")
    common.add_argument(
        "--seed", type=int, default=None,
        help="seed override; beats ELASTIC_SWITCH_SEED, which beats the config",
    )
    common.add_argument(
        "--out", metavar="STEM", default=None,
        help="output stem (a .json/.csv suffix is stripped); writes STEM.json "
             "plus STEM.csv for tabular results",
    )
    common.add_argument(
        "--threads", type=int, default=1,
        help="worker threads; results are byte-identical for any value",
    )
    common.add_argument(
        "--dump-paths", type=int, default=0, metavar="N",
        help="also write the first N simulated trajectories as STEM.pathNNNN.csv",
    )
    common.add_argument(
        "--paths", type=int, default=None, help="override sim.paths from the config"
    )

    p = argparse.ArgumentParser(
        prog="elastic-switch",
        description="Boundary functionals of reflected diffusion under Markov-switched "
        "Robin conditions: Monte Carlo estimators, reference solvers, experiments.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("simulate", parents=[common], help="Monte Carlo estimators")
    ps.add_argument("mode", choices=("annealed", "quenched", "averaged"))
    ps.add_argument(
        "--grid", action="store_true",
        help="estimate over the configured (t, x) grid instead of the single eval point",
    )

    pp = sub.add_parser("pde", parents=[common], help="finite-difference reference solvers")
    pp.add_argument("kind", choices=("constant", "quenched", "coupled"))

    sub.add_parser("averaging", parents=[common], help="fast-switching ladder experiment")

    pg = sub.add_parser(
        "gating", parents=[common], help="two-state receptor gate vs its averaged limit"
    )
    pg.add_argument("--kappa", type=float, default=2.0, help="open-state reactivity")
    pg.add_argument("--lon", type=float, default=1.0, help="closed to open rate")
    pg.add_argument("--loff", type=float, default=3.0, help="open to closed rate")
    pg.add_argument(
        "--eps", type=float, default=0.01,
        help="switching-speed parameter; the gate flips at rates scaled by 1/eps",
    )

    px = sub.add_parser(
        "xval", parents=[common], help="cross-validate Monte Carlo against the solvers"
    )
    px.add_argument("--mode", choices=("annealed", "quenched", "averaged"), default="annealed")

    sub.add_parser(
        "validate-config", parents=[common],
        help="parse, validate and echo the resolved configuration",
    )
    return p


def _load(args) -> SimConfig:
    cfg = load_config(args.config) if args.config else default_config()
    seed = cfg.sim.seed
    env = os.environ.get("ELASTIC_SWITCH_SEED")
    if env is not None:
        try:
            seed = int(env)
        except ValueError:
            raise ConfigError(
                [f"ELASTIC_SWITCH_SEED: expected an integer, got {env!r}"]
            ) from None
        log.info("seed %d taken from ELASTIC_SWITCH_SEED", seed)
    if args.seed is not None:
        seed = args.seed
    paths = args.paths if args.paths is not None else cfg.sim.paths
    threads = args.threads if args.threads is not None else 1
    try:
        sim = replace(cfg.sim, seed=seed, paths=paths, threads=threads)
    except ValueError as exc:
        raise ConfigError([f"sim: {exc}"]) from None
    return replace(cfg, sim=sim)


def _stem(args) -> str:
    if not args.out:
        return f"elastic-switch-{args.command}"
    # accept both ``--out results`` and ``--out results.csv``
    out = args.out
    for ext in (".json", ".csv"):
        if out.endswith(ext):
            return out[: -len(ext)]
    return out


def _require_unit_interval(cfg: SimConfig, what: str) -> None:
    d = cfg.domain
    if not (isinstance(d, Interval) and d.a == 0.0 and d.b == 1.0):
        raise ConfigError([f"domain: {what} requires the unit interval [0, 1]"])


def _abar(cfg: SimConfig) -> float:
    if cfg.eval.abar is not None:
        return cfg.eval.abar
    return effective_reactivity(cfg.chain)


def _run_curve(cfg: SimConfig, mode: str, xpt, s: float, t_list, seed: int, dump_n: int):
    """One estimator curve; returns (curve, state label or None, extra doc keys)."""
    horizon = float(max(t_list))
    if mode == "annealed":
        curve = annealed_curve(
            cfg.domain, build_switched_payoff(cfg), xpt, cfg.initial, t_list,
            cfg.chain, cfg.sim, seed=seed, dump_n=dump_n,
        )
        return curve, cfg.initial, {}
    if mode == "quenched":
        path = quenched_path_from_config(cfg, horizon)
        curve = scalar_kappa_curve(
            cfg.domain, build_payoff(cfg), xpt, s, t_list, path, cfg.sim,
            seed=seed, dump_n=dump_n,
        )
        return curve, path.label_at(s), {"s": s}
    abar = _abar(cfg)
    path = constant_chain_path(horizon=horizon, kappa=abar, label="averaged")
    curve = scalar_kappa_curve(
        cfg.domain, build_payoff(cfg), xpt, 0.0, t_list, path, cfg.sim,
        seed=seed, dump_n=dump_n,
    )
    return curve, None, {"abar": abar}


def _x_columns(dim: int) -> tuple[str, ...]:
    return ("x",) if dim == 1 else tuple(f"x{d}" for d in range(dim))


def _finish(doc: dict, cfg: SimConfig, t_start: float) -> dict:
    # Timing goes to the log, never into the files: outputs must be
    # byte-identical across reruns and worker counts.
    log.info("computed in %.3f s", time.perf_counter() - t_start)
    doc["config"] = resolved_config(cfg)
    return doc


def _cmd_simulate(args) -> int:
    cfg = _load(args)
    t_start = time.perf_counter()
    stem = _stem(args)
    written: list[str] = []

    if args.grid:
        rows = []
        points = []
        dumps: list = []
        for ix, xpt in enumerate(cfg.x_grid):
            curve, state, _ = _run_curve(
                cfg, args.mode, xpt, 0.0, cfg.t_grid,
                child_seed(cfg.sim.seed, "cli-grid", ix),
                args.dump_paths if ix == 0 else 0,
            )
            dumps.extend(curve.dumps)
            for it, t in enumerate(curve.t_grid):
                mean = float(curve.means[it])
                se = float(curve.stderrs[it])
                rows.append((float(t),) + xpt + (state or "", mean, se))
                points.append(
                    {
                        "t": float(t),
                        "x": list(xpt) if len(xpt) > 1 else xpt[0],
                        "state": state,
                        "mean": mean,
                        "stderr": se,
                    }
                )
        doc = {
            "mode": args.mode,
            "grid": True,
            "n_paths": cfg.sim.paths,
            "dt": cfg.sim.dt,
            "scheme": cfg.sim.scheme,
            "seed": cfg.sim.seed,
            "points": points,
        }
        written.append(write_json(stem + ".json", _finish(doc, cfg, t_start)))
        cols = ("t",) + _x_columns(cfg.domain.dim) + ("state", "mean", "stderr")
        written.append(write_csv(stem + ".csv", cols, rows, meta=resolved_config(cfg)))
        written.extend(write_path_dumps(stem, dumps))
        print(f"{args.mode} estimates on {len(cfg.x_grid)} points x {len(cfg.t_grid)} times")
    else:
        ev = cfg.eval
        if args.mode == "quenched" and abs(ev.t - ev.s) <= 1e-15:
            res = quenched_estimate(
                cfg.domain, build_payoff(cfg), ev.x, ev.s, ev.t,
                quenched_path_from_config(cfg, max(ev.t, 1e-12)), cfg.sim,
            )
        else:
            s = ev.s if args.mode == "quenched" else 0.0
            curve, state, extra = _run_curve(
                cfg, args.mode, ev.x, s, [ev.t], cfg.sim.seed, args.dump_paths
            )
            res = EstimatorResult(
                mode=args.mode,
                mean=float(curve.means[0]),
                stderr=float(curve.stderrs[0]),
                n_paths=curve.n_paths,
                t=ev.t,
                x=ev.x,
                state=state,
                dt=cfg.sim.dt,
                scheme=cfg.sim.scheme,
                seed=cfg.sim.seed,
                extra=extra,
            )
            written.extend(write_path_dumps(stem, curve.dumps))
        doc = estimator_to_dict(res)
        written.append(write_json(stem + ".json", _finish(doc, cfg, t_start)))
        lo, hi = res.ci95
        print(
            f"{args.mode} estimate at t={res.t:.6g}: "
            f"{res.mean:.6g} +/- {res.stderr:.3g} (95% CI [{lo:.6g}, {hi:.6g}], "
            f"{res.n_paths} paths)"
        )
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_pde(args) -> int:
    cfg = _load(args)
    _require_unit_interval(cfg, "the finite-difference solvers require")
    t_start = time.perf_counter()
    stem = _stem(args)
    grid = SpaceGrid(cfg.pde.n_interior)
    t_end = float(max(cfg.t_grid))
    t_record = np.asarray(cfg.t_grid, dtype=float)

    if args.kind == "constant":
        sol = solve_constant_robin(
            grid, _abar(cfg), build_payoff(cfg), t_end, cfg.pde.dt_pde, t_record
        )
    elif args.kind == "quenched":
        sol = solve_quenched_robin(
            grid, quenched_path_from_config(cfg, t_end), build_payoff(cfg),
            t_end, cfg.pde.dt_pde, t_record,
        )
    else:
        comps = list(build_switched_payoff(cfg).components)
        sol = solve_coupled_robin(grid, cfg.chain, comps, t_end, cfg.pde.dt_pde, t_record)

    doc = {
        "kind": args.kind,
        "method": sol.method,
        "n_interior": cfg.pde.n_interior,
        "dt_pde": cfg.pde.dt_pde,
        "t_grid": list(sol.times),
        "states": list(sol.state_labels) if sol.state_labels is not None else None,
    }
    written = [write_json(stem + ".json", _finish(doc, cfg, t_start))]
    cols, rows = pde_rows(sol)
    written.append(write_csv(stem + ".csv", cols, rows, meta=resolved_config(cfg)))
    print(f"{args.kind} solve on {grid.nodes.size} nodes, {len(sol.times)} recorded times")
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_averaging(args) -> int:
    cfg = _load(args)
    t_start = time.perf_counter()
    stem = _stem(args)
    rep = averaging_sweep(
        build_payoff(cfg),
        list(cfg.x_grid),
        cfg.t_grid,
        cfg.chain,
        cfg.experiment.eps,
        cfg.experiment.replicas,
        cfg.sim,
        cfg.sim.seed,
        initial=cfg.experiment.initial,
        domain=cfg.domain,
    )
    doc = sweep_to_dict(rep)
    written = [write_json(stem + ".json", _finish(doc, cfg, t_start))]
    cols, rows = sweep_rows(rep)
    written.append(write_csv(stem + ".csv", cols, rows, meta=resolved_config(cfg)))
    print(f"averaging ladder, effective reactivity {rep.abar:.6g}:")
    for lev in rep.levels:
        print(
            f"  eps={format_float(lev.eps)}: sup error {lev.mean_sup_error:.4g} "
            f"+/- {lev.stderr_sup_error:.2g}, exposure gap {lev.mean_expo_error:.4g}"
        )
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_gating(args) -> int:
    cfg = _load(args)
    _require_unit_interval(cfg, "the gating experiment requires")
    if any(len(x) != 1 for x in cfg.x_grid):
        raise ConfigError(["grid.x: the gating experiment needs scalar points"])
    t_start = time.perf_counter()
    stem = _stem(args)
    rep = gating_experiment(
        args.kappa,
        args.lon,
        args.loff,
        build_payoff(cfg),
        [x[0] for x in cfg.x_grid],
        cfg.t_grid,
        args.eps,
        cfg.sim,
        cfg.sim.seed,
        n_space=cfg.pde.n_interior,
        dt_pde=cfg.pde.dt_pde,
    )
    doc = gating_to_dict(rep)
    written = [write_json(stem + ".json", _finish(doc, cfg, t_start))]
    cols, rows = gating_rows(rep)
    written.append(write_csv(stem + ".csv", cols, rows, meta=resolved_config(cfg)))
    print(
        f"gate open fraction {rep.pi[1]:.6g}, effective reactivity {rep.abar:.6g}, "
        f"max |switched - averaged| = {rep.max_discrepancy:.4g} at eps={format_float(rep.eps)}"
    )
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_xval(args) -> int:
    cfg = _load(args)
    t_start = time.perf_counter()
    stem = _stem(args)
    rep = cross_validate(args.mode, cfg)
    doc = xval_to_dict(rep)
    written = [write_json(stem + ".json", _finish(doc, cfg, t_start))]
    cols, rows = xval_rows(rep)
    written.append(write_csv(stem + ".csv", cols, rows, meta=resolved_config(cfg)))
    print(
        f"{args.mode} cross-validation on {rep.n_points} points: "
        f"max |z| = {rep.max_abs_z:.3g}, {100.0 * rep.frac_z_within_3:.1f}% within 3, "
        f"max |diff| = {rep.max_abs_diff:.4g}"
    )
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_validate(args) -> int:
    cfg = _load(args)
    echo = resolved_config(cfg)
    print(dumps_json(echo))
    if args.out:
        path = write_json(_stem(args) + ".json", {"valid": True, "config": echo})
        print(f"wrote {path}", file=sys.stderr)
    return 0


_DISPATCH = {
    "simulate": _cmd_simulate,
    "pde": _cmd_pde,
    "averaging": _cmd_averaging,
    "gating": _cmd_gating,
    "xval": _cmd_xval,
    "validate-config": _cmd_validate,
}


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return _DISPATCH[args.command](args)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
