"""Deterministic result serialization.

JSON documents and CSV tables are written with floats at 17 significant
digits so a read-back reproduces every bit. Dict key order is the insertion
order of the builders here, which is fixed, so byte-identical reruns are a
meaningful check. CSV files open with a single comment line holding the
resolved configuration as compact JSON; nothing written here depends on
worker count or wall-clock, so reruns reproduce every output byte for byte.
"""
from __future__ import annotations

import json
import math
import os

import numpy as np

from .chain import ChainPath
from .experiments import GatingReport, SweepReport, XvalReport
from .functional import EstimatorResult
from .pde import PdeSolution
from .rbm import DiffusionPath


def format_float(v: float) -> str:
    """17-significant-digit decimal; parses back to the identical double."""
    v = float(v)
    if math.isnan(v):
        return "NaN"
    if math.isinf(v):
        return "Infinity" if v > 0 else "-Infinity"
    s = format(v, ".17g")
    # Keep a decimal marker so JSON readers see a float: "1" would come back
    # as an integer and "-0" would lose its sign entirely.
    return s if ("." in s or "e" in s) else s + ".0"


def _json_atom(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format_float(v)
    if isinstance(v, str):
        return json.dumps(v, ensure_ascii=False)
    raise TypeError(f"cannot serialize {type(v).__name__} to JSON")


def dumps_json(obj, indent: int = 2) -> str:
    """Serialize with insertion-order keys and round-trip float formatting."""

    def rec(v, depth: int) -> str:
        if isinstance(v, dict):
            if not v:
                return "{}"
            pad, inner = " " * (indent * depth), " " * (indent * (depth + 1))
            items = ",\n".join(
                f"{inner}{json.dumps(str(k), ensure_ascii=False)}: {rec(u, depth + 1)}"
                for k, u in v.items()
            )
            return "{\n" + items + "\n" + pad + "}"
        if isinstance(v, (list, tuple, np.ndarray)):
            seq = list(v)
            if not seq:
                return "[]"
            if all(not isinstance(u, (dict, list, tuple, np.ndarray)) for u in seq):
                return "[" + ", ".join(_json_atom(u) for u in seq) + "]"
            pad, inner = " " * (indent * depth), " " * (indent * (depth + 1))
            items = ",\n".join(f"{inner}{rec(u, depth + 1)}" for u in seq)
            return "[\n" + items + "\n" + pad + "]"
        return _json_atom(v)

    return rec(obj, 0)


def _open_out(path: str):
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    return open(path, "w", encoding="utf-8", newline="\n")


def write_json(path: str, obj) -> str:
    with _open_out(path) as fh:
        fh.write(dumps_json(obj))
        fh.write("\n")
    return path


def read_json(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format_float(v)


def _needs_quote(s: str) -> bool:
    return any(c in s for c in ',"\n\r')


def write_csv(path: str, columns, rows, meta: dict | None = None) -> str:
    """Write a CSV table; ``meta`` becomes a leading ``#`` comment line of JSON."""
    lines = []
    if meta is not None:
        lines.append("# " + json.dumps(meta, separators=(",", ":"), ensure_ascii=False))
    def quote(cell: str) -> str:
        return '"' + cell.replace('"', '""') + '"' if _needs_quote(cell) else cell
    lines.append(",".join(quote(str(c)) for c in columns))
    for row in rows:
        lines.append(",".join(quote(_csv_cell(v)) for v in row))
    with _open_out(path) as fh:
        fh.write("\n".join(lines))
        fh.write("\n")
    return path


def read_csv(path: str):
    """Read back (meta dict or None, column names, rows as string dicts)."""
    import csv as _csv

    with open(path, "r", encoding="utf-8", newline="") as fh:
        first = fh.readline()
        meta = None
        if first.startswith("#"):
            meta = json.loads(first[1:].strip())
            rest = fh
        else:
            fh.seek(0)
            rest = fh
        reader = _csv.reader(rest)
        columns = next(reader)
        rows = [dict(zip(columns, r)) for r in reader]
    return meta, columns, rows


def _point_out(x) -> float | list[float]:
    xs = [float(v) for v in np.atleast_1d(x)]
    return xs[0] if len(xs) == 1 else xs


def estimator_to_dict(res: EstimatorResult) -> dict:
    doc = {
        "mode": res.mode,
        "t": res.t,
        "x": _point_out(res.x),
        "state": res.state,
        "mean": res.mean,
        "stderr": res.stderr,
        "n_paths": res.n_paths,
        "dt": res.dt,
        "scheme": res.scheme,
        "seed": res.seed,
    }
    for k in sorted(res.extra):
        doc[k] = res.extra[k]
    return doc


def sweep_to_dict(rep: SweepReport) -> dict:
    return {
        "abar": rep.abar,
        "eps": list(rep.eps_values),
        "replicas": rep.replicas,
        "n_paths": rep.n_paths,
        "seed": rep.seed,
        "initial": rep.initial,
        "t_grid": list(rep.t_grid),
        "x_grid": [_point_out(p) for p in np.atleast_2d(rep.x_grid)],
        "levels": [
            {
                "eps": lev.eps,
                "mean_sup_error": lev.mean_sup_error,
                "stderr_sup_error": lev.stderr_sup_error,
                "mean_exposure_error": lev.mean_expo_error,
                "sup_errors": list(lev.sup_errors),
                "exposure_errors": list(lev.expo_errors),
                "sup_mc_stderrs": list(lev.sup_mc_stderrs),
                "per_t_curve": list(lev.per_t_curve),
            }
            for lev in rep.levels
        ],
    }


def sweep_rows(rep: SweepReport):
    columns = ("eps", "replica", "sup_error", "exposure_error", "sup_mc_stderr")
    rows = []
    for lev in rep.levels:
        for r in range(lev.sup_errors.size):
            rows.append(
                (lev.eps, r, lev.sup_errors[r], lev.expo_errors[r], lev.sup_mc_stderrs[r])
            )
    return columns, rows


def gating_to_dict(rep: GatingReport) -> dict:
    return {
        "kappa": rep.kappa,
        "lam_on": rep.lam_on,
        "lam_off": rep.lam_off,
        "pi": list(rep.pi),
        "abar": rep.abar,
        "eps": rep.eps,
        "max_discrepancy": rep.max_discrepancy,
        "seed": rep.seed,
        "t_grid": list(rep.t_grid),
        "x_grid": list(rep.x_grid),
        "mc_means": [list(row) for row in rep.mc_means],
        "mc_stderrs": [list(row) for row in rep.mc_stderrs],
        "pde_values": [list(row) for row in rep.pde_values],
    }


def gating_rows(rep: GatingReport):
    columns = ("t", "x", "switched_mean", "switched_stderr", "averaged_pde", "abs_diff")
    rows = []
    for i, t in enumerate(rep.t_grid):
        for j, x in enumerate(rep.x_grid):
            mc = rep.mc_means[i, j]
            pd = rep.pde_values[i, j]
            rows.append((t, x, mc, rep.mc_stderrs[i, j], pd, abs(mc - pd)))
    return columns, rows


def xval_to_dict(rep: XvalReport) -> dict:
    return {
        "mode": rep.mode,
        "max_abs_z": rep.max_abs_z,
        "frac_z_within_3": rep.frac_z_within_3,
        "max_abs_diff": rep.max_abs_diff,
        "n_points": rep.n_points,
        "seed": rep.seed,
        "rows": [
            {
                "t": r.t,
                "x": r.x,
                "state": r.state,
                "mc_mean": r.mc_mean,
                "mc_stderr": r.mc_stderr,
                "pde_value": r.pde_value,
                "z": r.z,
            }
            for r in rep.rows
        ],
    }


def xval_rows(rep: XvalReport):
    columns = ("t", "x", "state", "mc_mean", "mc_stderr", "pde_value", "z")
    rows = [
        (r.t, r.x, r.state if r.state is not None else "", r.mc_mean, r.mc_stderr, r.pde_value, r.z)
        for r in rep.rows
    ]
    return columns, rows


def pde_rows(sol: PdeSolution):
    columns = ("t", "x", "state", "u")
    rows = []
    for i, t in enumerate(sol.times):
        if sol.is_coupled:
            for k, label in enumerate(sol.state_labels):
                for j, x in enumerate(sol.nodes):
                    rows.append((t, x, label, sol.values[i, k, j]))
        else:
            for j, x in enumerate(sol.nodes):
                rows.append((t, x, "", sol.values[i, j]))
    return columns, rows


def chain_path_to_dict(path: ChainPath) -> dict:
    return {
        "horizon": path.horizon,
        "labels": list(path.labels),
        "kappas": list(path.kappas),
        "states": [path.labels[s] for s in path.states],
        "jump_times": list(path.jump_times),
    }


def dump_rows(path: DiffusionPath):
    """Per-step trajectory table: time, position, push size, running local time."""
    dim = path.positions.shape[1]
    columns = ("t",) + (("x",) if dim == 1 else tuple(f"x{d}" for d in range(dim)))
    columns = columns + ("dL", "L")
    lt = path.local_time_grid
    dl = np.concatenate([[0.0], path.dL])
    rows = [
        (float(path.times[m]),)
        + tuple(float(c) for c in path.positions[m])
        + (float(dl[m]), float(lt[m]))
        for m in range(path.times.size)
    ]
    return columns, rows


def write_path_dumps(stem: str, dumps) -> list[str]:
    written = []
    for i, p in enumerate(dumps):
        columns, rows = dump_rows(p)
        written.append(write_csv(f"{stem}.path{i:04d}.csv", columns, rows))
    return written
