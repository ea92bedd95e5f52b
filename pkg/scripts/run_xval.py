"""Monte Carlo vs finite differences for all three estimator modes."""
from __future__ import annotations

import argparse

from elastic_switch import cross_validate, load_config


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("config", help="TOML configuration file")
    ap.add_argument(
        "--modes", nargs="+", default=["annealed", "quenched", "averaged"],
        choices=["annealed", "quenched", "averaged"],
    )
    ap.add_argument("--paths", type=int, default=None)
    ap.add_argument("--seed", type=int, default=None)
    args = ap.parse_args()

    cfg = load_config(args.config)
    for mode in args.modes:
        rep = cross_validate(mode, cfg, n=args.paths, seed=args.seed)
        print(
            f"{mode:>9}: {rep.n_points} points, max |z| = {rep.max_abs_z:.3f}, "
            f"{100.0 * rep.frac_z_within_3:.1f}% within 3, "
            f"max |diff| = {rep.max_abs_diff:.5f}"
        )
        worst = max(rep.rows, key=lambda r: abs(r.z))
        print(
            f"           worst point t={worst.t:g} x={worst.x:g} "
            f"state={worst.state or '-'}: mc {worst.mc_mean:.6f} +/- {worst.mc_stderr:.6f} "
            f"vs pde {worst.pde_value:.6f}"
        )


if __name__ == "__main__":
    main()
