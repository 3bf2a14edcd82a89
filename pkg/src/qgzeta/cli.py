"""Command-line front end.

Every command prints its result to stdout (CSV or JSON, 15 significant
digits).  Failures print a JSON error report to stderr and exit with the
code of the error class: 2 for unreadable graph descriptions and bad
arguments, 3 for matching conditions that are not self-adjoint, 4 for
numerical-contract violations.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from .errors import GraphSpecError, QGError, ValidationError
from .graph import load_graph, random_general_graph, random_star
from .observables import (
    casimir_force,
    heat_trace_asymptotic,
    heat_trace_direct,
    piston_sweep,
    spectral_determinant,
    verify_new_integral,
)
from .secular import FORMS, make_pair
from .spectrum import find_spectrum, write_csv
from .zeta import zeta

COMMANDS = ("spectrum", "zeta", "det", "casimir", "heat", "piston-sweep", "verify-integral")
DEFAULT_SEED = 20240101


@dataclass
class RunConfig:
    command: str
    graph_file: str | None = None
    params: dict = field(default_factory=dict)


def _fmt(x) -> str:
    return f"{x:.15g}"


def _round(obj):
    """Round floats to 15 significant digits for JSON output."""
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(_fmt(x)) + 0.0 if math.isfinite(x) else str(x)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _dump(obj) -> str:
    return json.dumps(_round(obj), indent=1, sort_keys=True)


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qgzeta", description="Spectral zeta functions of quantum graphs.")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED,
                        help="seed for the random-star / random-general graph sources")
    sub = parser.add_subparsers(dest="command", required=True)

    def graph_command(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("graph_file",
                       help="graph JSON file, or 'random-star' / 'random-general'")
        p.add_argument("--form", default="auto", choices=("auto",) + FORMS,
                       help="secular formulation (default: chosen from the graph)")
        return p

    p = graph_command("spectrum", "eigenvalues k_j <= k_max as CSV")
    p.add_argument("--k-max", type=float, required=True)
    p.add_argument("--out", help="output CSV path (default: stdout)")

    p = graph_command("zeta", "spectral zeta function at the given s values")
    p.add_argument("--s", type=_float_list, required=True, help="comma-separated s values")

    p = graph_command("det", "spectral determinant exp(-zeta'(0))")
    p.add_argument("--json", action="store_true", help="print a JSON object")

    p = graph_command("casimir", "Casimir force on one bond")
    p.add_argument("--bond", type=int, required=True, help="bond index (0-based)")
    p.add_argument("--fixed-total", action="store_true",
                   help="keep the total length fixed; the partner bond absorbs the change")
    p.add_argument("--partner", type=int, help="partner bond (default: next bond)")

    p = graph_command("heat", "small-t heat-trace expansion, optionally against the spectrum")
    p.add_argument("--order", type=int, default=2, help="include terms through t^order")
    p.add_argument("--t", type=_float_list, help="times at which to compare")
    p.add_argument("--k-max", type=float, help="spectrum cutoff for the direct sum")

    p = sub.add_parser("piston-sweep", help="piston Casimir force table as CSV")
    p.add_argument("--total", type=float, required=True)
    p.add_argument("--lambda", dest="lambdas", type=_float_list, required=True,
                   help="comma-separated couplings ('inf' for Dirichlet)")
    p.add_argument("--grid", type=int, required=True, help="number of interior L values")
    p.add_argument("--out", help="output CSV path (default: stdout)")

    p = sub.add_parser("verify-integral", help="check the hyperbolic integral identity")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    return parser


def _config(args: argparse.Namespace) -> RunConfig:
    params = {k: v for k, v in vars(args).items() if k not in ("command", "graph_file")}
    return RunConfig(args.command, getattr(args, "graph_file", None), params)


def _require(cond: bool, message: str, **details) -> None:
    if not cond:
        raise ValidationError(message, **details)


def validate(config: RunConfig) -> None:
    """Check command parameters before any numerics run."""
    p = config.params
    c = config.command
    if c not in COMMANDS:
        raise GraphSpecError(f"unknown command {c!r}")
    if c == "spectrum":
        _require(math.isfinite(p["k_max"]) and p["k_max"] > 0, "k_max must be positive")
    elif c == "zeta":
        _require(len(p["s"]) > 0, "need at least one s value")
        _require(all(math.isfinite(s) for s in p["s"]), "s values must be finite")
    elif c == "casimir":
        _require(p["bond"] >= 0, "bond index must be non-negative")
        if p["partner"] is not None:
            _require(p["fixed_total"], "--partner requires --fixed-total")
    elif c == "heat":
        _require(0 <= p["order"] <= 10, "order must lie in 0..10")
        if p["t"] is not None:
            _require(p["k_max"] is not None and p["k_max"] > 0,
                     "--t requires a positive --k-max")
            _require(all(t > 0 for t in p["t"]), "t values must be positive")
    elif c == "piston-sweep":
        _require(math.isfinite(p["total"]) and p["total"] > 0, "total must be positive")
        _require(p["grid"] >= 1, "grid must be at least 1")
        _require(len(p["lambdas"]) > 0 and all(x >= 0 for x in p["lambdas"]),
                 "couplings must be non-negative")
    elif c == "verify-integral":
        _require(p["a"] > 0 and p["b"] > 0, "a and b must be positive")


def _graph(config: RunConfig):
    source = config.graph_file
    rng = np.random.default_rng(config.params.get("seed", DEFAULT_SEED))
    if source == "random-star":
        return random_star(rng)
    if source == "random-general":
        return random_general_graph(rng)
    return load_graph(source)


def _write(text: str, path: str | None, out) -> None:
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        out.write(text)


def run(config: RunConfig, out=None) -> int:
    """Execute one command; returns the exit status."""
    out = sys.stdout if out is None else out
    validate(config)
    p = config.params
    c = config.command

    if c == "verify-integral":
        out.write(_dump(verify_new_integral(p["a"], p["b"])) + "\n")
        return 0
    if c == "piston-sweep":
        ls, forces = piston_sweep(p["total"], p["lambdas"], p["grid"])
        buf = io.StringIO()
        buf.write(",".join(["L"] + [f"F_c(lambda={_fmt(x)})" for x in p["lambdas"]]) + "\n")
        for L, row in zip(ls, forces):
            buf.write(",".join(_fmt(v) for v in [L, *row]) + "\n")
        _write(buf.getvalue(), p["out"], out)
        return 0

    graph = _graph(config)
    pair = make_pair(graph, p["form"])
    if c == "spectrum":
        buf = io.StringIO()
        write_csv(find_spectrum(pair, p["k_max"]), buf)
        _write(buf.getvalue(), p["out"], out)
    elif c == "zeta":
        out.write(_dump([zeta(pair, s).to_dict() for s in p["s"]]) + "\n")
    elif c == "det":
        value = spectral_determinant(pair)
        out.write((_dump({"det": value, "log_det": math.log(value)}) if p["json"]
                   else _fmt(value)) + "\n")
    elif c == "casimir":
        _require(p["bond"] < pair.bond_count, "bond index out of range",
                 bond=p["bond"], bonds=pair.bond_count)
        constraint = "fixed-total-length" if p["fixed_total"] else "free"
        res = casimir_force(pair, p["bond"], constraint, p["partner"])
        out.write(_dump(res.to_dict()) + "\n")
    elif c == "heat":
        exp = heat_trace_asymptotic(pair, p["order"])
        result = {"order": exp.order,
                  "coefficients": [{"l": ell, "power": ell - 0.5, "eps": c_}
                                   for ell, c_ in sorted(exp.coefficients.items())]}
        if p["t"] is not None:
            spec = find_spectrum(pair, p["k_max"])
            rows = []
            for t in p["t"]:
                direct = heat_trace_direct(spec, t)
                asym = float(exp(t))
                rows.append({"t": t, "direct": direct, "asymptotic": asym,
                             "abs_diff": abs(direct - asym)})
            result["comparison"] = rows
        out.write(_dump(result) + "\n")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return run(_config(args))
    except QGError as exc:
        sys.stderr.write(json.dumps(_round(exc.to_dict()), sort_keys=True, default=str) + "\n")
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
