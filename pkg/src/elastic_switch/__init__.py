"""Reflected diffusion with Markov-switched Robin boundary exchange.

Monte Carlo estimators for boundary-exposure functionals of reflected
Brownian motion whose boundary reactivity switches with a continuous-time
Markov chain, finite-difference reference solvers for the matching scalar,
quenched and coupled heat problems, and the validation experiments tying
the two together: fast-switching averaging, receptor gating and pointwise
cross-validation.
"""
from __future__ import annotations

from .chain import (
    ChainPath,
    GeneratorMatrix,
    constant_chain_path,
    rescale,
    sample_chain_path,
    stationary_distribution,
    two_state_gate,
)
from .config import (
    ConfigError,
    EvalParams,
    ExperimentParams,
    PdeParams,
    SimConfig,
    build_payoff,
    build_switched_payoff,
    config_from_dict,
    default_config,
    load_config,
    parse_config,
    quenched_path_from_config,
    resolved_config,
)
from .experiments import (
    CompositionReport,
    EpsLevel,
    GatingReport,
    GeneratorCheckRow,
    SweepReport,
    XvalReport,
    XvalRow,
    averaging_sweep,
    cross_validate,
    gating_experiment,
    generator_check,
    quenched_composition_check,
    robin_eigenfrequency,
)
from .functional import (
    CurveResult,
    EstimatorResult,
    ExposurePath,
    Payoff,
    SimParams,
    SwitchedPayoff,
    annealed_curve,
    annealed_estimate,
    as_payoff,
    as_switched_payoff,
    averaged_estimate,
    effective_reactivity,
    exposure_error,
    exposure_integral,
    make_payoff,
    quenched_estimate,
    scalar_kappa_curve,
)
from .geometry import Disk, Domain, HalfLine, Interval, Rectangle, make_domain
from .pde import (
    NumericalError,
    PdeSolution,
    SpaceGrid,
    robin_laplacian,
    solve_constant_robin,
    solve_coupled_robin,
    solve_quenched_robin,
    trapezoid_mass,
)
from .rbm import (
    BatchPaths,
    DiffusionPath,
    build_grid,
    projection_dt_ladder,
    simulate_halfline_exact,
    simulate_halfline_exact_batch,
    simulate_rbm,
    simulate_rbm_batch,
)
from .rng import child_seed, derive_stream

__version__ = "0.1.0"

__all__ = [
    "BatchPaths",
    "ChainPath",
    "CompositionReport",
    "ConfigError",
    "CurveResult",
    "DiffusionPath",
    "Disk",
    "Domain",
    "EpsLevel",
    "EstimatorResult",
    "EvalParams",
    "ExperimentParams",
    "ExposurePath",
    "GatingReport",
    "GeneratorCheckRow",
    "GeneratorMatrix",
    "HalfLine",
    "Interval",
    "NumericalError",
    "Payoff",
    "PdeParams",
    "PdeSolution",
    "Rectangle",
    "SimConfig",
    "SimParams",
    "SpaceGrid",
    "SweepReport",
    "SwitchedPayoff",
    "XvalReport",
    "XvalRow",
    "annealed_curve",
    "annealed_estimate",
    "as_payoff",
    "as_switched_payoff",
    "averaged_estimate",
    "averaging_sweep",
    "build_grid",
    "build_payoff",
    "build_switched_payoff",
    "child_seed",
    "config_from_dict",
    "constant_chain_path",
    "cross_validate",
    "default_config",
    "derive_stream",
    "effective_reactivity",
    "exposure_error",
    "exposure_integral",
    "gating_experiment",
    "generator_check",
    "load_config",
    "make_domain",
    "make_payoff",
    "parse_config",
    "projection_dt_ladder",
    "quenched_composition_check",
    "quenched_estimate",
    "quenched_path_from_config",
    "rescale",
    "resolved_config",
    "robin_eigenfrequency",
    "robin_laplacian",
    "sample_chain_path",
    "scalar_kappa_curve",
    "simulate_halfline_exact",
    "simulate_halfline_exact_batch",
    "simulate_rbm",
    "simulate_rbm_batch",
    "solve_constant_robin",
    "solve_coupled_robin",
    "solve_quenched_robin",
    "stationary_distribution",
    "trapezoid_mass",
    "two_state_gate",
    "__version__",
]
