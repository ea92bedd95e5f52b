"""Fast-switching ladder on the two-state gate, printed as a small table.

Smaller than the acceptance-grade run (fewer paths, shorter horizon) so it
finishes in about a minute on one core; pass --paths/--replicas to scale up.
"""
from __future__ import annotations

import argparse

from elastic_switch import SimParams, averaging_sweep, make_domain, make_payoff, two_state_gate


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--paths", type=int, default=20_000)
    ap.add_argument("--replicas", type=int, default=8)
    ap.add_argument("--dt", type=float, default=1e-3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--eps", type=float, nargs="+", default=[1.0, 0.1, 0.01])
    args = ap.parse_args()

    g = two_state_gate(kappa=2.0, lam_on=1.0, lam_off=3.0)
    domain = make_domain("interval", a=0.0, b=1.0)
    payoff = make_payoff("cos_pi_x")
    sim = SimParams(dt=args.dt, paths=args.paths, seed=args.seed, threads=args.threads)

    rep = averaging_sweep(
        payoff,
        [0.25, 0.5, 0.75],
        [0.1, 0.25, 0.5],
        g,
        args.eps,
        args.replicas,
        sim,
        args.seed,
        domain=domain,
    )
    print(f"effective reactivity {rep.abar:.6g}, {rep.replicas} replicas, {rep.n_paths} paths")
    print(f"{'eps':>10} {'sup error':>12} {'+/-':>10} {'exposure gap':>14}")
    for lev in rep.levels:
        print(
            f"{lev.eps:>10g} {lev.mean_sup_error:>12.5f} "
            f"{lev.stderr_sup_error:>10.5f} {lev.mean_expo_error:>14.5f}"
        )


if __name__ == "__main__":
    main()
