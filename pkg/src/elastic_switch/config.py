"""Configuration parsing and validation for the command-line tools.

Configs are TOML with eight optional sections: domain, chain, sim, payoff,
grid, pde, experiment, eval. Every field has a documented default, so the
empty config is valid; every defaulted value reappears in the resolved echo,
so output headers never hide a silent default. Validation collects all
problems before failing. Syntax errors carry the parser's line information;
semantic errors are anchored to the offending key path.

Documented bounds: sim.dt and pde.dt in (0, 0.1]; sim.paths in [1, 1e9];
sim.seed in [0, 2^63); pde.n in [3, 1e5]; experiment.replicas in [1, 1e4];
experiment.eps strictly decreasing positive, at most 50 entries; grid.t
strictly increasing positive, at most 1000 entries, last entry at most 100;
grid.x at most 10000 points, all inside the domain closure.
"""
from __future__ import annotations

import difflib
from dataclasses import dataclass, field

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .chain import ChainPath, GeneratorMatrix
from .functional import Payoff, SimParams, SwitchedPayoff, make_payoff
from .geometry import Disk, Domain, HalfLine, Interval, Rectangle, domain_to_dict, make_domain

PAYOFF_NAMES = ("constant", "coordinate", "cos_pi_x", "tabulated")

_SECTION_KEYS = {
    "domain": ("kind", "a", "b", "c", "d", "cx", "cy", "r"),
    "chain": ("states", "q", "initial"),
    "sim": ("dt", "paths", "seed", "scheme", "antithetic"),
    "payoff": ("name", "value", "axis", "xs", "ys", "by_state"),
    "grid": ("x", "t"),
    "pde": ("n", "dt"),
    "experiment": ("eps", "replicas", "initial"),
    "eval": ("x", "t", "s", "state", "abar", "jumps", "states"),
}

_DOMAIN_PARAMS = {
    "interval": ("a", "b"),
    "rectangle": ("a", "b", "c", "d"),
    "disk": ("cx", "cy", "r"),
    "half_line": (),
}

_PAYOFF_PARAMS = {
    "constant": ("value",),
    "coordinate": ("axis",),
    "cos_pi_x": (),
    "tabulated": ("xs", "ys"),
}


class ConfigError(ValueError):
    """All problems found in one validation pass."""

    def __init__(self, errors) -> None:
        self.errors = [str(e) for e in errors]
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {e}" for e in self.errors))


@dataclass(frozen=True)
class PdeParams:
    n_interior: int = 399
    dt_pde: float = 1e-4


@dataclass(frozen=True)
class ExperimentParams:
    eps: tuple[float, ...] = (1.0, 0.1, 0.01)
    replicas: int = 16
    initial: str = "stationary"


@dataclass(frozen=True)
class EvalParams:
    """Single-point evaluation target used by the simulate subcommand."""

    x: tuple[float, ...]
    t: float
    s: float = 0.0
    state: str = ""
    abar: float | None = None
    jumps: tuple[float, ...] | None = None
    states: tuple[str, ...] | None = None


@dataclass(frozen=True)
class SimConfig:
    domain: Domain
    chain: GeneratorMatrix
    initial: str
    sim: SimParams
    payoff_name: str
    payoff_params: dict
    payoff_by_state: dict | None
    x_grid: tuple[tuple[float, ...], ...]
    t_grid: tuple[float, ...]
    pde: PdeParams
    experiment: ExperimentParams
    eval: EvalParams


def _suggest(key: str, known) -> str:
    close = difflib.get_close_matches(key, known, n=1)
    return f" (did you mean {close[0]!r}?)" if close else ""


def _section(data: dict, name: str, errors: list[str]) -> dict:
    raw = data.get(name, {})
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        errors.append(f"{name}: must be a table of keys, got {type(raw).__name__}")
        return {}
    known = _SECTION_KEYS[name]
    for k in raw:
        if k not in known:
            errors.append(f"{name}.{k}: unknown key{_suggest(k, known)}")
    return raw


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _num(sec: dict, path: str, key: str, default, errors, lo=None, hi=None, lo_open=False, allow_none=False):
    v = sec.get(key, default)
    if v is None and allow_none:
        return None
    if not _is_number(v):
        errors.append(f"{path}.{key}: expected a number, got {v!r}")
        return default if default is not None else 0.0
    v = float(v)
    if not np.isfinite(v):
        errors.append(f"{path}.{key}: must be finite")
        return default if default is not None else 0.0
    if lo is not None and (v <= lo if lo_open else v < lo):
        errors.append(f"{path}.{key}: must be {'>' if lo_open else '>='} {lo}, got {v}")
        return default if default is not None else 0.0
    if hi is not None and v > hi:
        errors.append(f"{path}.{key}: must be <= {hi}, got {v}")
        return default if default is not None else 0.0
    return v


def _int(sec: dict, path: str, key: str, default: int, errors, lo: int, hi: int) -> int:
    v = sec.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int):
        errors.append(f"{path}.{key}: expected an integer, got {v!r}")
        return default
    if not lo <= v <= hi:
        errors.append(f"{path}.{key}: must lie in [{lo}, {hi}], got {v}")
        return default
    return v


def _str_choice(sec: dict, path: str, key: str, default: str, errors, choices) -> str:
    v = sec.get(key, default)
    if not isinstance(v, str):
        errors.append(f"{path}.{key}: expected a string, got {v!r}")
        return default
    if choices is not None and v not in choices:
        errors.append(f"{path}.{key}: must be one of {list(choices)}, got {v!r}{_suggest(v, choices)}")
        return default
    return v


def _bool(sec: dict, path: str, key: str, default: bool, errors) -> bool:
    v = sec.get(key, default)
    if not isinstance(v, bool):
        errors.append(f"{path}.{key}: expected true/false, got {v!r}")
        return default
    return v


def _build_domain(data: dict, errors: list[str]) -> Domain:
    sec = _section(data, "domain", errors)
    kind = _str_choice(sec, "domain", "kind", "interval", errors, tuple(_DOMAIN_PARAMS))
    allowed = _DOMAIN_PARAMS[kind]
    for k in sec:
        if k != "kind" and k in _SECTION_KEYS["domain"] and k not in allowed:
            errors.append(f"domain.{k}: not a parameter of kind {kind!r}")
    params = {}
    for k in allowed:
        if k in sec:
            v = _num(sec, "domain", k, None, errors)
            if v is not None:
                params[k] = v
    try:
        return make_domain(kind, **params)
    except ValueError as exc:
        errors.append(f"domain: {exc}")
        return Interval(0.0, 1.0)


def _build_chain(data: dict, errors: list[str]) -> tuple[GeneratorMatrix, str]:
    sec = _section(data, "chain", errors)
    raw_states = sec.get("states", [{"label": "state0", "kappa": 0.0}])
    if not isinstance(raw_states, list) or not raw_states or not all(isinstance(s, dict) for s in raw_states):
        errors.append("chain.states: expected a nonempty array of {label, kappa} tables")
        raw_states = [{"label": "state0", "kappa": 0.0}]

    labels: list[str] = []
    kappas: list[float] = []
    for i, entry in enumerate(raw_states):
        for k in entry:
            if k not in ("label", "kappa"):
                errors.append(
                    f"chain.states[{i}].{k}: unknown key{_suggest(k, ('label', 'kappa'))}"
                )
        label = entry.get("label", f"state{i}")
        if not isinstance(label, str) or not label:
            errors.append(f"chain.states[{i}].label: expected a nonempty string")
            label = f"state{i}"
        kappa = entry.get("kappa", 0.0)
        if not _is_number(kappa):
            errors.append(f"chain.states[{i}].kappa: expected a number")
            kappa = 0.0
        elif kappa < 0.0:
            errors.append(f"chain.states[{i}].kappa: reactivity must be nonnegative")
            kappa = 0.0
        labels.append(label)
        kappas.append(float(kappa))
    if len(set(labels)) != len(labels):
        errors.append("chain.states: labels must be distinct")
        labels = [f"state{i}" for i in range(len(labels))]
    n = len(labels)

    q_raw = sec.get("q", [[0.0] * n for _ in range(n)])
    ok_shape = (
        isinstance(q_raw, list)
        and len(q_raw) == n
        and all(isinstance(r, list) and len(r) == n and all(_is_number(v) for v in r) for r in q_raw)
    )
    if not ok_shape:
        errors.append(f"chain.q: expected a {n}x{n} matrix of rates")
        q = np.zeros((n, n))
    else:
        q = np.asarray(q_raw, dtype=float)
        for i in range(n):
            row_ok = True
            for j in range(n):
                if i != j and q[i, j] < 0.0:
                    errors.append(f"chain.q: negative rate at row {i}, column {j}")
                    row_ok = False
            s = float(q[i].sum())
            if row_ok and abs(s) > 1e-12:
                errors.append(f"chain.q: row {i} sums to {s:.6g}; rows must sum to 0")
        if errors and any(e.startswith("chain.q") for e in errors):
            q = np.zeros((n, n))

    initial = _str_choice(sec, "chain", "initial", labels[0], errors, tuple(labels))
    try:
        return GeneratorMatrix(labels=tuple(labels), kappas=tuple(float(k) for k in kappas), q=q), initial
    except ValueError as exc:
        errors.append(f"chain: {exc}")
        return GeneratorMatrix(labels=("state0",), kappas=(0.0,), q=np.zeros((1, 1))), "state0"


def _build_sim(data: dict, domain: Domain, errors: list[str]) -> SimParams:
    sec = _section(data, "sim", errors)
    dt = _num(sec, "sim", "dt", 1e-4, errors, lo=0.0, lo_open=True, hi=0.1)
    paths = _int(sec, "sim", "paths", 100_000, errors, 1, 10**9)
    seed = _int(sec, "sim", "seed", 0, errors, 0, 2**63 - 1)
    scheme = _str_choice(sec, "sim", "scheme", "projection", errors, ("projection", "halfline_exact"))
    antithetic = _bool(sec, "sim", "antithetic", False, errors)
    if scheme == "halfline_exact" and not isinstance(domain, HalfLine):
        errors.append("sim.scheme: the exact scheme requires domain.kind = 'half_line'")
    if isinstance(domain, HalfLine) and scheme != "halfline_exact":
        errors.append(
            "sim.scheme: the half line is supported only with scheme = 'halfline_exact' "
            "(the projection scheme there is exercised by the library's validation suite, "
            "not the CLI)"
        )
        scheme = "halfline_exact"
    try:
        return SimParams(dt=dt, paths=paths, seed=seed, scheme=scheme, antithetic=antithetic)
    except ValueError as exc:
        errors.append(f"sim: {exc}")
        return SimParams()


def _validate_payoff_spec(
    name: str, params: dict, domain: Domain, path: str, errors: list[str]
) -> tuple[str, dict]:
    clean: dict = {}
    allowed = _PAYOFF_PARAMS[name]
    for k in params:
        if k not in allowed:
            errors.append(f"{path}.{k}: not a parameter of payoff {name!r}")
    if name == "constant":
        clean["value"] = _num(params, path, "value", 1.0, errors)
    elif name == "coordinate":
        clean["axis"] = _int(params, path, "axis", 0, errors, 0, max(0, domain.dim - 1))
    elif name == "tabulated":
        for k in ("xs", "ys"):
            v = params.get(k)
            if not isinstance(v, list) or len(v) < 2 or not all(_is_number(u) for u in v):
                errors.append(f"{path}.{k}: expected a list of at least two numbers")
                v = [0.0, 1.0]
            clean[k] = [float(u) for u in v]
    try:
        make_payoff(name, domain=domain, **clean)
    except ValueError as exc:
        errors.append(f"{path}: {exc}")
    return name, clean


def _build_payoff(data: dict, domain: Domain, chain: GeneratorMatrix, errors: list[str]):
    sec = _section(data, "payoff", errors)
    name = _str_choice(sec, "payoff", "name", "constant", errors, PAYOFF_NAMES)
    known = _SECTION_KEYS["payoff"]
    params = {k: v for k, v in sec.items() if k in known and k not in ("name", "by_state")}
    name, clean = _validate_payoff_spec(name, params, domain, "payoff", errors)

    by_state = sec.get("by_state")
    clean_by_state = None
    if by_state is not None:
        if not isinstance(by_state, dict):
            errors.append("payoff.by_state: expected one table per state label")
        else:
            clean_by_state = {}
            for label, sub in by_state.items():
                if label not in chain.labels:
                    errors.append(
                        f"payoff.by_state.{label}: unknown state{_suggest(label, chain.labels)}"
                    )
                    continue
                if not isinstance(sub, dict):
                    errors.append(f"payoff.by_state.{label}: expected a payoff table")
                    continue
                sub_name = _str_choice(sub, f"payoff.by_state.{label}", "name", name, errors, PAYOFF_NAMES)
                sub_params = {k: v for k, v in sub.items() if k != "name"}
                sub_name, sub_clean = _validate_payoff_spec(
                    sub_name, sub_params, domain, f"payoff.by_state.{label}", errors
                )
                clean_by_state[label] = {"name": sub_name, **sub_clean}
    return name, clean, clean_by_state


def _default_x_grid(domain: Domain) -> tuple[tuple[float, ...], ...]:
    frac = np.linspace(0.1, 0.9, 9)
    if isinstance(domain, Interval):
        return tuple((float(domain.a + f * (domain.b - domain.a)),) for f in frac)
    if isinstance(domain, HalfLine):
        return tuple((float(f),) for f in frac)
    if isinstance(domain, Rectangle):
        ymid = 0.5 * (domain.c + domain.d)
        return tuple((float(domain.a + f * (domain.b - domain.a)), float(ymid)) for f in frac)
    off = np.linspace(-0.8, 0.8, 9)
    return tuple((float(domain.cx + o * domain.r), float(domain.cy)) for o in off)


def _default_eval_x(domain: Domain) -> tuple[float, ...]:
    if isinstance(domain, Interval):
        return (0.5 * (domain.a + domain.b),)
    if isinstance(domain, HalfLine):
        return (0.5,)
    if isinstance(domain, Rectangle):
        return (0.5 * (domain.a + domain.b), 0.5 * (domain.c + domain.d))
    return (float(domain.cx), float(domain.cy))


def _as_point(v, domain: Domain, path: str, errors: list[str]) -> tuple[float, ...] | None:
    if _is_number(v):
        pt = (float(v),)
    elif isinstance(v, list) and all(_is_number(u) for u in v):
        pt = tuple(float(u) for u in v)
    else:
        errors.append(f"{path}: expected a point (number or list of numbers), got {v!r}")
        return None
    if len(pt) != domain.dim:
        errors.append(f"{path}: expected dimension {domain.dim}, got {len(pt)}")
        return None
    if not domain.contains(pt, tol=0.0):
        errors.append(f"{path}: point {list(pt)} lies outside the domain closure")
        return None
    return pt


def _build_grid(data: dict, domain: Domain, errors: list[str]):
    sec = _section(data, "grid", errors)
    x_raw = sec.get("x")
    if x_raw is None:
        x_grid = _default_x_grid(domain)
    elif not isinstance(x_raw, list) or not x_raw or len(x_raw) > 10_000:
        errors.append("grid.x: expected a nonempty list of at most 10000 points")
        x_grid = _default_x_grid(domain)
    else:
        pts = []
        for i, v in enumerate(x_raw):
            pt = _as_point(v, domain, f"grid.x[{i}]", errors)
            if pt is not None:
                pts.append(pt)
        x_grid = tuple(pts) if pts else _default_x_grid(domain)

    t_raw = sec.get("t")
    if t_raw is None:
        t_grid = tuple(round(0.05 * k, 10) for k in range(1, 11))
    elif (
        not isinstance(t_raw, list)
        or not t_raw
        or len(t_raw) > 1000
        or not all(_is_number(v) for v in t_raw)
    ):
        errors.append("grid.t: expected a nonempty list of at most 1000 numbers")
        t_grid = tuple(round(0.05 * k, 10) for k in range(1, 11))
    else:
        t_grid = tuple(float(v) for v in t_raw)
        if t_grid[0] <= 0.0 or any(b <= a for a, b in zip(t_grid, t_grid[1:])):
            errors.append("grid.t: times must be positive and strictly increasing")
            t_grid = tuple(round(0.05 * k, 10) for k in range(1, 11))
        elif t_grid[-1] > 100.0:
            errors.append(f"grid.t: horizon {t_grid[-1]} exceeds the supported maximum 100")
            t_grid = tuple(round(0.05 * k, 10) for k in range(1, 11))
    return x_grid, t_grid


def _build_eval(
    data: dict,
    domain: Domain,
    chain: GeneratorMatrix,
    initial: str,
    t_grid: tuple[float, ...],
    errors: list[str],
) -> EvalParams:
    sec = _section(data, "eval", errors)
    x = _as_point(sec["x"], domain, "eval.x", errors) if "x" in sec else _default_eval_x(domain)
    if x is None:
        x = _default_eval_x(domain)
    t = _num(sec, "eval", "t", float(t_grid[-1]), errors, lo=0.0, lo_open=True, hi=100.0)
    s = _num(sec, "eval", "s", 0.0, errors, lo=0.0)
    if s > t:
        errors.append(f"eval.s: start time {s} exceeds eval.t = {t}")
        s = 0.0
    state = _str_choice(sec, "eval", "state", initial, errors, chain.labels)
    abar = _num(sec, "eval", "abar", None, errors, lo=0.0, allow_none=True)

    jumps_raw = sec.get("jumps")
    states_raw = sec.get("states")
    jumps = states = None
    if (jumps_raw is None) != (states_raw is None):
        errors.append("eval.jumps and eval.states must be given together")
    elif jumps_raw is not None:
        if not isinstance(jumps_raw, list) or not all(_is_number(v) for v in jumps_raw):
            errors.append("eval.jumps: expected a list of numbers")
        elif not isinstance(states_raw, list) or not all(isinstance(v, str) for v in states_raw):
            errors.append("eval.states: expected a list of state labels")
        elif len(states_raw) != len(jumps_raw) + 1:
            errors.append(
                f"eval.states: need {len(jumps_raw) + 1} labels for {len(jumps_raw)} jumps, "
                f"got {len(states_raw)}"
            )
        else:
            jt = [float(v) for v in jumps_raw]
            if any(v <= 0.0 for v in jt) or any(b <= a for a, b in zip(jt, jt[1:])):
                errors.append("eval.jumps: jump times must be positive and strictly increasing")
            elif jt and jt[-1] > t:
                errors.append(f"eval.jumps: last jump {jt[-1]} exceeds eval.t = {t}")
            elif any(lbl not in chain.labels for lbl in states_raw):
                bad = next(lbl for lbl in states_raw if lbl not in chain.labels)
                errors.append(f"eval.states: unknown state {bad!r}{_suggest(bad, chain.labels)}")
            elif any(a == b for a, b in zip(states_raw, states_raw[1:])):
                errors.append("eval.states: consecutive states must differ")
            else:
                jumps = tuple(jt)
                states = tuple(states_raw)
    return EvalParams(x=x, t=t, s=s, state=state, abar=abar, jumps=jumps, states=states)


def config_from_dict(data: dict) -> SimConfig:
    """Build and validate a SimConfig from a parsed mapping."""
    if not isinstance(data, dict):
        raise ConfigError(["top level: expected a table of sections"])
    errors: list[str] = []
    for k in data:
        if k not in _SECTION_KEYS:
            errors.append(f"{k}: unknown section{_suggest(k, tuple(_SECTION_KEYS))}")

    domain = _build_domain(data, errors)
    chain, initial = _build_chain(data, errors)
    sim = _build_sim(data, domain, errors)
    payoff_name, payoff_params, payoff_by_state = _build_payoff(data, domain, chain, errors)
    x_grid, t_grid = _build_grid(data, domain, errors)

    pde_sec = _section(data, "pde", errors)
    pde = PdeParams(
        n_interior=_int(pde_sec, "pde", "n", 399, errors, 3, 100_000),
        dt_pde=_num(pde_sec, "pde", "dt", 1e-4, errors, lo=0.0, lo_open=True, hi=0.1),
    )

    exp_sec = _section(data, "experiment", errors)
    eps_raw = exp_sec.get("eps", [1.0, 0.1, 0.01])
    if (
        not isinstance(eps_raw, list)
        or not eps_raw
        or len(eps_raw) > 50
        or not all(_is_number(v) for v in eps_raw)
    ):
        errors.append("experiment.eps: expected a nonempty list of at most 50 numbers")
        eps_raw = [1.0, 0.1, 0.01]
    eps = tuple(float(v) for v in eps_raw)
    if any(v <= 0.0 for v in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
        errors.append("experiment.eps: values must be positive and strictly decreasing")
        eps = (1.0, 0.1, 0.01)
    replicas = _int(exp_sec, "experiment", "replicas", 16, errors, 1, 10_000)
    exp_initial = _str_choice(
        exp_sec, "experiment", "initial", "stationary", errors, ("stationary",) + chain.labels
    )
    experiment = ExperimentParams(eps=eps, replicas=replicas, initial=exp_initial)

    ev = _build_eval(data, domain, chain, initial, t_grid, errors)

    if errors:
        raise ConfigError(errors)
    return SimConfig(
        domain=domain,
        chain=chain,
        initial=initial,
        sim=sim,
        payoff_name=payoff_name,
        payoff_params=payoff_params,
        payoff_by_state=payoff_by_state,
        x_grid=x_grid,
        t_grid=t_grid,
        pde=pde,
        experiment=experiment,
        eval=ev,
    )


def parse_config(text: str) -> SimConfig:
    """Parse TOML text into a validated SimConfig; raise ConfigError listing problems."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"syntax: {exc}"]) from None
    return config_from_dict(data)


def load_config(path: str) -> SimConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError([f"config file: {exc}"]) from None


def default_config() -> SimConfig:
    return config_from_dict({})


def build_payoff(cfg: SimConfig) -> Payoff:
    """The single (state-independent) payoff described by the config."""
    return make_payoff(cfg.payoff_name, domain=cfg.domain, **cfg.payoff_params)


def build_switched_payoff(cfg: SimConfig) -> SwitchedPayoff:
    """Per-state payoffs: the base payoff with any by-state overrides applied."""
    base = build_payoff(cfg)
    comps = []
    for label in cfg.chain.labels:
        spec = (cfg.payoff_by_state or {}).get(label)
        if spec is None:
            comps.append(base)
        else:
            spec = dict(spec)
            name = spec.pop("name")
            comps.append(make_payoff(name, domain=cfg.domain, **spec))
    return SwitchedPayoff(labels=cfg.chain.labels, components=tuple(comps))


def quenched_path_from_config(cfg: SimConfig, horizon: float) -> ChainPath:
    """The switching realization the config describes, covering [0, horizon].

    An explicit jumps/states table wins; otherwise the path holds the eval
    state's reactivity for the whole window.
    """
    g = cfg.chain
    if cfg.eval.jumps is not None:
        return ChainPath(
            horizon=horizon,
            labels=g.labels,
            kappas=g.kappas,
            states=tuple(g.index(lbl) for lbl in cfg.eval.states),
            jump_times=np.asarray(cfg.eval.jumps),
        )
    return ChainPath(
        horizon=horizon,
        labels=g.labels,
        kappas=g.kappas,
        states=(g.index(cfg.eval.state),),
        jump_times=np.empty(0),
    )


def resolved_config(cfg: SimConfig) -> dict:
    """Full echo of every effective setting, JSON-ready.

    Worker-count and other runtime-only knobs are deliberately absent: the
    echo identifies the result, and results are independent of scheduling.
    """
    payoff: dict = {"name": cfg.payoff_name, **cfg.payoff_params}
    if cfg.payoff_by_state is not None:
        payoff["by_state"] = {k: dict(v) for k, v in sorted(cfg.payoff_by_state.items())}
    x_out = [list(p) if len(p) > 1 else p[0] for p in cfg.x_grid]
    ev = cfg.eval
    return {
        "domain": domain_to_dict(cfg.domain),
        "chain": {
            "states": [
                {"label": lbl, "kappa": kap}
                for lbl, kap in zip(cfg.chain.labels, cfg.chain.kappas)
            ],
            "q": [[float(v) for v in row] for row in cfg.chain.q],
            "initial": cfg.initial,
        },
        "sim": {
            "dt": cfg.sim.dt,
            "paths": cfg.sim.paths,
            "seed": cfg.sim.seed,
            "scheme": cfg.sim.scheme,
            "antithetic": cfg.sim.antithetic,
        },
        "payoff": payoff,
        "grid": {"x": x_out, "t": list(cfg.t_grid)},
        "pde": {"n": cfg.pde.n_interior, "dt": cfg.pde.dt_pde},
        "experiment": {
            "eps": list(cfg.experiment.eps),
            "replicas": cfg.experiment.replicas,
            "initial": cfg.experiment.initial,
        },
        "eval": {
            "x": list(ev.x) if len(ev.x) > 1 else ev.x[0],
            "t": ev.t,
            "s": ev.s,
            "state": ev.state,
            "abar": ev.abar,
            "jumps": list(ev.jumps) if ev.jumps is not None else None,
            "states": list(ev.states) if ev.states is not None else None,
        },
    }
