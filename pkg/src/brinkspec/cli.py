"""Command-line driver: one JSON job document in, a report directory out.

    brinkspec <command> --job job.json --out results/ [--format json|csv|both]

Exit status is 0 on success (an Inconclusive verdict is still a success),
2 when the job document fails validation and 3 when a solver gives up
(ConvergenceError or BracketError).  The report echoes the job with every
default filled in, so feeding the echo back reproduces the results exactly.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import platform
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy

from . import __version__, iterlog, threshold
from .eigensolve import bracket_certificate, lowest_eigs
from .errors import BracketError, ConvergenceError, DomainError, ParamError, ShapeError, UnsupportedError
from .iterlog import ComparisonOrder
from .potentials import (AlphaFamily, ThresholdFamily, ThresholdKind, exact_zero_mode, line_integral,
                         potential_from_dict)
from .radialgrid import assemble, make_grid, residual

SCHEMA_VERSION = 1
COMMANDS = ("solve", "sweep", "classify", "criterion", "oracle", "gsr-check", "coupling")
_TOP_KEYS = {"schema_version", "command", "dimension", "potential", "grid", "grids", "params", "workers"}
_GRID_KEYS = {"r_min", "r_max", "n", "placement", "ratio", "left"}


class JobError(ParamError):
    """The job document is malformed; the message names the field."""


# ---------------------------------------------------------------------------
# field helpers

def _number(doc, key, default=None, path="params", positive=False, integer=False):
    if key not in doc or doc[key] is None:
        if default is None:
            raise JobError(f"{path}.{key}: required")
        return default
    val = doc[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise JobError(f"{path}.{key}: expected a number, got {val!r}")
    if integer:
        if int(val) != val:
            raise JobError(f"{path}.{key}: expected an integer, got {val!r}")
        val = int(val)
    else:
        val = float(val)
        if not math.isfinite(val):
            raise JobError(f"{path}.{key}: must be finite")
    if positive and not val > 0:
        raise JobError(f"{path}.{key}: must be positive, got {val!r}")
    return val


def _numbers(doc, key, default, path="params", length=None):
    val = doc.get(key, default)
    if not isinstance(val, (list, tuple)) or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in val):
        raise JobError(f"{path}.{key}: expected a list of numbers")
    if length is not None and len(val) != length:
        raise JobError(f"{path}.{key}: expected {length} numbers, got {len(val)}")
    return [float(x) for x in val]


def _no_extra(doc, allowed, path):
    extra = sorted(set(doc) - set(allowed))
    if extra:
        raise JobError(f"{path}.{extra[0]}: unknown field")


def _grid_doc(g):
    out = g.to_dict()
    out.pop("d")
    return out


def _parse_grid(doc, d, path):
    if not isinstance(doc, dict):
        raise JobError(f"{path}: expected an object")
    _no_extra(doc, _GRID_KEYS, path)
    r_min = None if doc.get("r_min") is None else _number(doc, "r_min", path=path)
    try:
        return make_grid(d, r_min, _number(doc, "r_max", path=path), _number(doc, "n", path=path, integer=True),
                         doc.get("placement", "uniform"),
                         None if doc.get("ratio") is None else _number(doc, "ratio", path=path),
                         doc.get("left"))
    except ValueError as exc:
        raise JobError(f"{path}: {exc}") from None


# ---------------------------------------------------------------------------
# job parsing

@dataclass
class JobSpec:
    command: str
    echo: dict
    dimension: int
    potential: object = None
    grids: list = None
    params: dict = None
    workers: int = 1


def _default_grids(command, d):
    if command == "solve":
        return [make_grid(d, None, 50.0, 4999)]
    if command == "coupling":
        return threshold.coupling_grids(d)
    return threshold.sweep_grids(d)


def _parse_params(command, doc, d):
    """Validate command parameters and fill in defaults; returns (echo, objects)."""
    p = dict(doc)
    if command == "solve":
        _no_extra(p, {"k", "tol", "rtol"}, "params")
        echo = {"k": _number(p, "k", 1, integer=True, positive=True),
                "tol": _number(p, "tol", 1e-12, positive=True),
                "rtol": _number(p, "rtol", 1e-9)}
        return echo, {}
    if command in ("sweep", "classify"):
        keys = {"perturbation", "lambdas", "probe"} if command == "sweep" else \
            {"perturbation", "lambdas", "inner_radius", "mass_floor", "rho", "slack"}
        _no_extra(p, keys, "params")
        wdoc = p.get("perturbation", threshold.default_perturbation().to_dict())
        try:
            W = potential_from_dict(wdoc)
        except ValueError as exc:
            raise JobError(f"params.perturbation: {exc}") from None
        echo = {"perturbation": W.to_dict(),
                "lambdas": _numbers(p, "lambdas", list(threshold.DEFAULT_LAMBDAS))}
        if command == "sweep":
            echo["probe"] = _number(p, "probe", 8, integer=True)
        else:
            echo["inner_radius"] = _number(p, "inner_radius", 1.0, positive=True)
            echo["mass_floor"] = _number(p, "mass_floor", threshold.DEFAULT_MASS_FLOOR)
            echo["rho"] = _number(p, "rho", threshold.DEFAULT_RHO, positive=True)
            echo["slack"] = _number(p, "slack", threshold.DEFAULT_SLACK)
        return echo, {"W": W}
    if command == "criterion":
        _no_extra(p, {"m_max", "window", "samples"}, "params")
        return {"m_max": _number(p, "m_max", 2, integer=True),
                "window": _numbers(p, "window", [1e3, 1e6], length=2),
                "samples": _number(p, "samples", 200, integer=True, positive=True)}, {}
    if command == "oracle":
        _no_extra(p, {"family", "alpha", "m", "eps", "r_min", "r_max", "h", "skip"}, "params")
        family = p.get("family", "alpha")
        if family not in ("alpha", "Wm", "Ym"):
            raise JobError(f"params.family: expected 'alpha', 'Wm' or 'Ym', got {family!r}")
        echo = {"family": family}
        if family == "alpha":
            echo["alpha"] = _number(p, "alpha", 2.0)
            echo["r_min"] = _number(p, "r_min", 0.0)
            echo["r_max"] = _number(p, "r_max", 50.0, positive=True)
        else:
            m = _number(p, "m", 1, integer=True)
            eps = _number(p, "eps", 0.0 if family == "Wm" else 0.5)
            if family == "Wm" and eps != 0.0:
                raise JobError("params.eps: the Wm family has eps = 0")
            try:
                ComparisonOrder(m, eps)
                floor = iterlog.tower(m)
            except (ValueError, OverflowError) as exc:
                raise JobError(f"params.m: {exc}") from None
            echo.update(m=m, eps=eps, r_min=_number(p, "r_min", floor + 1.0), r_max=_number(p, "r_max", 100.0))
        echo["h"] = _numbers(p, "h", [4e-3, 2e-3, 1e-3])
        echo["skip"] = _number(p, "skip", 5, integer=True)
        if not echo["h"] or any(h <= 0 for h in echo["h"]):
            raise JobError("params.h: expected positive spacings")
        return echo, {}
    if command == "gsr-check":
        _no_extra(p, {"alpha", "phi_scale", "quad_tol", "line_integral"}, "params")
        li = p.get("line_integral", False)
        if not isinstance(li, bool):
            raise JobError("params.line_integral: expected true or false")
        return {"alpha": _number(p, "alpha", 1.0), "phi_scale": _number(p, "phi_scale", 1.0, positive=True),
                "quad_tol": _number(p, "quad_tol", 1e-10, positive=True), "line_integral": li}, {}
    if command == "coupling":
        _no_extra(p, {"beta_range", "tol", "scan"}, "params")
        return {"beta_range": _numbers(p, "beta_range", [0.0, 10.0], length=2),
                "tol": _number(p, "tol", 1e-4, positive=True),
                "scan": _number(p, "scan", 8, integer=True, positive=True)}, {}
    raise JobError(f"command: unknown command {command!r}")


def parse_job(doc, command=None) -> JobSpec:
    """Validate a job document and fill in every default."""
    if not isinstance(doc, dict):
        raise JobError("job: expected a JSON object")
    _no_extra(doc, _TOP_KEYS, "job")
    if doc.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise JobError(f"job.schema_version: only version {SCHEMA_VERSION} is supported")
    cmd = doc.get("command", command)
    if cmd not in COMMANDS:
        raise JobError(f"job.command: expected one of {', '.join(COMMANDS)}, got {cmd!r}")
    if command is not None and cmd != command:
        raise JobError(f"job.command: document is for '{cmd}' but '{command}' was requested")
    d = _number(doc, "dimension", 3, path="job", integer=True, positive=True)
    echo = {"schema_version": SCHEMA_VERSION, "command": cmd, "dimension": d}
    spec = JobSpec(cmd, echo, d)

    if cmd in ("solve", "sweep", "classify", "criterion", "coupling"):
        if "potential" not in doc:
            raise JobError("job.potential: required")
        try:
            spec.potential = potential_from_dict(doc["potential"])
        except ValueError as exc:
            msg = str(exc)
            raise JobError(msg if msg.startswith("potential") else f"potential: {msg}") from None
        echo["potential"] = spec.potential.to_dict()
    elif "potential" in doc:
        raise JobError(f"job.potential: not used by '{cmd}'")

    if cmd in ("solve", "sweep", "classify", "coupling"):
        if "grid" in doc and "grids" in doc:
            raise JobError("job.grids: give either 'grid' or 'grids', not both")
        if "grids" in doc:
            if not isinstance(doc["grids"], list) or not doc["grids"]:
                raise JobError("job.grids: expected a non-empty list")
            spec.grids = [_parse_grid(g, d, f"grids[{i}]") for i, g in enumerate(doc["grids"])]
        elif "grid" in doc:
            spec.grids = [_parse_grid(doc["grid"], d, "grid")]
        else:
            spec.grids = _default_grids(cmd, d)
        echo["grids"] = [_grid_doc(g) for g in spec.grids]
    elif "grid" in doc or "grids" in doc:
        raise JobError(f"job.grids: not used by '{cmd}'")

    params = doc.get("params", {})
    if not isinstance(params, dict):
        raise JobError("job.params: expected an object")
    echo["params"], spec.params = _parse_params(cmd, params, d)
    spec.params.update(echo["params"])
    if cmd == "sweep":
        workers = doc.get("workers")
        if workers is None:
            spec.workers = os.cpu_count() or 1
        else:
            spec.workers = _number(doc, "workers", path="job", integer=True, positive=True)
        echo["workers"] = spec.workers
    elif "workers" in doc:
        raise JobError(f"job.workers: not used by '{cmd}'")
    return spec


# ---------------------------------------------------------------------------
# execution

def _run_solve(spec):
    p = spec.params
    rows, energies = [], []
    for i, g in enumerate(spec.grids):
        T = assemble(spec.potential, g)
        sp = lowest_eigs(T, p["k"], tol=p["tol"], rtol=p["rtol"])
        certified = bracket_certificate(T, sp)
        energies.append(float(sp.eigenvalues[0]))
        rows.append({"grid": i, "eigenvalues": sp.eigenvalues.tolist(), "brackets": sp.brackets.tolist(),
                     "certified": certified, "floor": threshold.finite_size_floor(g)})
    e0 = threshold.richardson(energies, spec.grids)
    results = {"grids": rows, "E0": e0}
    tables = {
        "eigenvalues": (["grid", "r_max", "n", "k", "eigenvalue", "lo", "hi", "certified"],
                        [[r["grid"], spec.grids[r["grid"]].r_max, spec.grids[r["grid"]].n, k + 1, ev, lo, hi,
                          r["certified"]]
                         for r in rows for k, (ev, (lo, hi)) in enumerate(zip(r["eigenvalues"], r["brackets"]))]),
        "trace": (["lambda", "E0", "inner_mass", "gamma_eff"], [[0.0, e0, None, None]]),
    }
    return results, tables


def _trace_table(verdict):
    return (["lambda", "E0", "inner_mass", "gamma_eff"],
            [[t.lam, t.E0, t.inner_mass, t.gamma_eff] for t in verdict.lambda_trace])


def _run_sweep(spec):
    p = spec.params
    v = threshold.criticality_sweep(spec.potential, p["W"], spec.dimension, p["lambdas"], spec.grids,
                                    workers=spec.workers, probe=p["probe"])
    return v.to_dict(), {"trace": _trace_table(v)}


def _run_classify(spec):
    p = spec.params
    v = threshold.classify_zero_mode(spec.potential, p["W"], spec.dimension, p["lambdas"], spec.grids,
                                     p["inner_radius"], p["mass_floor"], p["rho"], p["slack"])
    tables = {"trace": _trace_table(v)}
    if v.decay_fit is not None:
        f = v.decay_fit
        tables["decay_fit"] = (["lambda", "r", "log_psi", "model"],
                               [[f["lambda"], r, a, b] for r, a, b in zip(f["r"], f["log_psi"], f["model"])])
    return v.to_dict(), tables


def _run_criterion(spec):
    p = spec.params
    c = threshold.criterion_check(spec.potential, spec.dimension, p["m_max"], tuple(p["window"]), p["samples"])
    out = c.to_dict()
    return out, {"criterion": (["regime", "m", "eps", "R", "R_max", "margin"],
                               [[out["regime"], out["m"], out["eps"], *out["tail_window"], out["margin"]]])}


def _run_oracle(spec):
    p, d = spec.params, spec.dimension
    if p["family"] == "alpha":
        V = AlphaFamily(p["alpha"], d)

        def f(r):
            return exact_zero_mode(p["alpha"], d, r)
    else:
        order = ComparisonOrder(p["m"], p["eps"])
        kind = ThresholdKind.Wm if p["family"] == "Wm" else ThresholdKind.Ym
        V = ThresholdFamily(order, kind, d)

        def f(r):
            return iterlog.psi_upper(order, d, r)
    rows = []
    for h in p["h"]:
        n = int(round((p["r_max"] - p["r_min"]) / h)) - 1
        g = make_grid(d, p["r_min"], p["r_max"], n)
        res = residual(V, f, g, skip=p["skip"])
        order_est = None
        if rows:
            order_est = math.log(rows[-1]["residual"] / res) / math.log(rows[-1]["h"] / g.h)
        rows.append({"h": g.h, "n": n, "residual": res, "order": order_est})
    return {"rows": rows, "observed_order": rows[-1]["order"]}, \
        {"oracle": (["h", "n", "residual", "order"], [[r["h"], r["n"], r["residual"], r["order"]] for r in rows])}


def _run_gsr(spec):
    p, d = spec.params, spec.dimension
    phi, dphi = threshold.gaussian_test_function(p["phi_scale"])
    gap = threshold.gsr_identity_check(p["alpha"], d, phi, dphi, p["quad_tol"])
    out = {"discrepancy": gap, "contract": 10.0 * p["quad_tol"], "holds": gap <= 10.0 * p["quad_tol"]}
    row = [p["alpha"], d, gap, None, None]
    if p["line_integral"]:
        value = line_integral(AlphaFamily(p["alpha"], 1))
        exact = 0.5 * math.pi * (p["alpha"] - 0.5) ** 2
        out["line_integral"] = {"value": value, "exact": exact, "error": abs(value - exact)}
        row[3:] = [value, exact]
    return out, {"gsr": (["alpha", "d", "discrepancy", "line_integral", "line_exact"], [row])}


def _run_coupling(spec):
    p = spec.params
    r = threshold.critical_coupling_search(spec.potential, spec.dimension, tuple(p["beta_range"]), spec.grids,
                                           p["tol"], p["scan"])
    return r.to_dict(), {"coupling_trace": (["beta", "binds"], [list(t) for t in r.trace])}


_RUNNERS = {"solve": _run_solve, "sweep": _run_sweep, "classify": _run_classify, "criterion": _run_criterion,
            "oracle": _run_oracle, "gsr-check": _run_gsr, "coupling": _run_coupling}


def _clean(obj):
    """Make a structure JSON-safe: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def run(spec: JobSpec) -> dict:
    """Execute a parsed job; returns the report with its csv tables under ``tables``."""
    start = time.perf_counter()
    results, tables = _RUNNERS[spec.command](spec)
    wall = time.perf_counter() - start
    provenance = {"package": "brinkspec", "version": __version__, "python": platform.python_version(),
                  "numpy": np.__version__, "scipy": scipy.__version__, "wall_time_s": wall}
    return {"job": _clean(spec.echo), "results": _clean(results), "provenance": provenance,
            "tables": {k: (h, _clean(rows)) for k, (h, rows) in tables.items()}}


def report_json(report: dict) -> str:
    body = {k: v for k, v in report.items() if k != "tables"}
    return json.dumps(body, indent=2, sort_keys=True, allow_nan=False) + "\n"


def emit(report: dict, out_dir, fmt: str = "json") -> list:
    """Write report.json and/or one csv per table into ``out_dir``; returns the paths."""
    if fmt not in ("json", "csv", "both"):
        raise JobError(f"format: expected json, csv or both, got {fmt!r}")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from None
    written = []
    if fmt in ("json", "both"):
        path = out / "report.json"
        try:
            path.write_text(report_json(report))
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from None
        written.append(path)
    if fmt in ("csv", "both"):
        for name, (header, rows) in report["tables"].items():
            path = out / f"{name}.csv"
            try:
                with path.open("w", newline="") as fh:
                    w = csv.writer(fh)
                    w.writerow(header)
                    for row in rows:
                        w.writerow(["" if x is None else repr(x) if isinstance(x, float) else x for x in row])
            except OSError as exc:
                raise OSError(f"cannot write {path}: {exc}") from None
            written.append(path)
    return written


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="brinkspec", description="Zero-energy threshold toolkit for radial "
                                                                   "Schrodinger operators.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--job", required=True, help="JSON job document")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--format", default="json", choices=("json", "csv", "both"))
    args = parser.parse_args(argv)
    try:
        try:
            doc = json.loads(Path(args.job).read_text())
        except OSError as exc:
            raise JobError(f"cannot read job file {args.job}: {exc.strerror or exc}") from None
        except json.JSONDecodeError as exc:
            raise JobError(f"job file {args.job} is not valid JSON: {exc}") from None
        spec = parse_job(doc, args.command)
        report = run(spec)
        emit(report, args.out, args.format)
    except (ConvergenceError, BracketError) as exc:
        print(f"brinkspec: solver failed: {exc}", file=sys.stderr)
        return 3
    except (ParamError, DomainError, ShapeError, UnsupportedError, OverflowError) as exc:
        print(f"brinkspec: invalid job: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"brinkspec: {exc}", file=sys.stderr)
        return 2
    status = report["results"].get("status") if isinstance(report["results"], dict) else None
    print(f"brinkspec {args.command}: done" + (f" ({status})" if status else ""))
    return 0


if __name__ == "__main__":
    sys.exit(main())
