"""Command-line front end.

Single computations print JSON to stdout; sweeps write CSV (to ``--out`` or
stdout). Every JSON document carries the resolved seed and configuration.
Exit status: 0 on success, 2 for invalid input, 1 for numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import CapacityError, ghz_state, load_state, w_state
from .graphs import (
    Graph,
    build_graph_state,
    cor10_fast_path,
    line_extraction_protocol,
    ghz_extraction_probability,
    graph_ce,
    line_protocol_split,
    path_graph,
    read_graph,
    tau_solution,
    weighted_trace_distance,
    build_weighted_graph_state,
)
from .haar import (
    Estimate,
    HaarSweepConfig,
    derived_seed,
    expected_avg_ce,
    expected_purity,
    expected_tilde_overlap,
    moment_samples,
    sample_haar,
    haar_sweep,
    rows_to_csv as haar_rows_to_csv,
)
from .ising import ising_sweep, rows_to_csv as ising_rows_to_csv, tfim_grid
from .localization import lme_estimate, lower_bound, upper_bound
from .measures import evaluate, parse_kind
from .pso import PsoConfig


class ValidationError(ValueError):
    pass


def _int_list(text: str | None) -> list[int] | None:
    if text is None or text.strip() == "":
        return None
    try:
        return [int(x) for x in text.split(",") if x.strip() != ""]
    except ValueError as exc:
        raise ValidationError(f"expected a comma-separated list of integers, got {text!r}") from exc


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip() != ""]
    except ValueError as exc:
        raise ValidationError(f"expected a comma-separated list of numbers, got {text!r}") from exc


def _preset(spec: str, seed: int) -> np.ndarray:
    try:
        name, size = spec.split(":")
        n = int(size)
    except ValueError as exc:
        raise ValidationError(f"preset must look like name:N, got {spec!r}") from exc
    if n < 1:
        raise ValidationError("preset size must be positive")
    if name == "ghz":
        return ghz_state(n)
    if name == "w":
        return w_state(n)
    if name == "line-graph":
        return build_graph_state(path_graph(n))
    if name == "haar":
        return sample_haar(n, seed)
    raise ValidationError(f"unknown preset {name!r}; choose ghz, w, line-graph or haar")


def _state(args) -> np.ndarray:
    if (args.state is None) == (args.preset is None):
        raise ValidationError("give exactly one of --state or --preset")
    if args.preset is not None:
        return _preset(args.preset, args.seed)
    return np.asarray(load_state(args.state))


def _graph(args) -> Graph:
    if (args.graph is None) == (args.preset is None):
        raise ValidationError("give exactly one of --graph or --preset")
    if args.preset is not None:
        name, _, size = args.preset.partition(":")
        if name != "line-graph" or not size.isdigit():
            raise ValidationError("graph presets must look like line-graph:N")
        return path_graph(int(size))
    return read_graph(args.graph)


def _kind(args):
    return parse_kind(args.kind, _int_list(args.s))


def _pso(args) -> PsoConfig:
    return PsoConfig(
        swarm_size=args.swarm,
        iterations=args.iterations,
        restarts=args.restarts,
        seed=args.seed,
    )


def _config(args) -> dict:
    skip = {"func", "format", "out"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _emit_json(args, payload: dict) -> str:
    doc = {"seed": args.seed, "config": _config(args), **payload}
    return json.dumps(doc, sort_keys=False, default=_jsonable) + "\n"


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _emit_table(args, payload: dict) -> str:
    """Single-row CSV of the scalar fields."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    keys = [k for k, v in payload.items() if np.isscalar(v) or v is None]
    w.writerow(keys)
    w.writerow([payload[k] for k in keys])
    return buf.getvalue()


def _write(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _single(args, payload: dict) -> None:
    if args.format == "csv":
        _write(args, _emit_table(args, payload))
    else:
        _write(args, _emit_json(args, payload))


def _sweep(args, csv_text: str, summary: dict) -> None:
    if args.format == "json":
        rows = list(csv.DictReader(io.StringIO(csv_text)))
        _write(args, _emit_json(args, {**summary, "rows": rows}))
        return
    _write(args, csv_text)
    if args.out:
        sys.stdout.write(_emit_json(args, {**summary, "out": args.out}))


# --------------------------------------------------------------------------- #
# Subcommands
# --------------------------------------------------------------------------- #

def cmd_measure(args) -> None:
    psi = _state(args)
    _single(args, {"kind": args.kind, "value": evaluate(_kind(args), psi)})


def cmd_localize(args) -> None:
    psi = _state(args)
    a = _int_list(args.measured) or []
    kind = _kind(args)
    value, params = lme_estimate(psi, a, kind, _pso(args), threads=args.threads)
    payload = {"kind": str(kind), "lme": value, "params": params, "ub": upper_bound(psi, a, kind)}
    _single(args, payload)


def cmd_bounds(args) -> None:
    psi = _state(args)
    a = _int_list(args.measured) or []
    kind = _kind(args)
    payload = {"kind": str(kind), "ub": upper_bound(psi, a, kind), "lb": lower_bound(psi, a, kind)}
    if kind.name == "ntangle":
        payload["mea_exact"] = payload["ub"]
    _single(args, payload)


def cmd_graph(args) -> None:
    g = _graph(args)
    if args.action == "check":
        a = _int_list(args.measured) or []
        x = tau_solution(g, a)
        fast = cor10_fast_path(g, a)
        payload = {
            "solvable": x is not None,
            "x": None if x is None else [int(v) for v in x],
            "fast_path": "cor10" if fast is not None else None,
            "measured": sorted(a),
            "measured_one_based": [q + 1 for q in sorted(a)],
        }
    else:
        s = _int_list(args.s)
        if not s:
            raise ValidationError("graph ce needs --s")
        payload = {"ce": graph_ce(g, s), "s": s, "s_one_based": [q + 1 for q in s]}
    _single(args, payload)


def cmd_weighted(args) -> None:
    n_pairs = args.pairs
    phis = np.linspace(0, 2 * np.pi, args.grid) if args.phi is None else np.array(_float_list(args.phi))
    a, _ = line_protocol_split(n_pairs)
    g = path_graph(2 * n_pairs + 1)
    cfg = _pso(args)
    tau = parse_kind("ntangle")
    rows = []
    for i, phi in enumerate(phis):
        _, avg = line_extraction_protocol(n_pairs, phi)
        psi = build_weighted_graph_state(g, phi)
        row = {
            "phi": float(phi),
            "protocol_tau": avg,
            "p_ghz": ghz_extraction_probability(n_pairs, phi),
            "mea_tau": upper_bound(psi, a, tau),
            "dist_to_pi": weighted_trace_distance(g, phi, np.pi),
        }
        if args.lme:
            row["lme_tau"], _ = lme_estimate(psi, a, tau, cfg.with_seed(derived_seed(cfg.seed, i)))
        rows.append(row)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: repr(float(v)) for k, v in r.items()})
    _sweep(args, buf.getvalue(), {"pairs": n_pairs, "points": len(rows)})


def cmd_haar(args) -> None:
    kind = _kind(args)
    if args.action == "moments":
        d_a, d_b = 2**args.na, 2**args.nb
        pur, ov, ce = moment_samples(args.na, args.nb, args.samples, args.seed)
        out = {}
        for name, vals, target in (
            ("purity", pur, expected_purity(d_a, d_b)),
            ("tilde_overlap", ov, expected_tilde_overlap(d_a, d_b)),
            ("avg_ce", ce, expected_avg_ce(args.nb, args.nb)),
        ):
            est = Estimate.of(vals)
            out[name] = {"mean": est.mean, "stderr": est.stderr, "expected": target, "within_3se": est.within(target)}
        _single(args, out)
        return
    cfg = HaarSweepConfig(args.na, args.nb, args.samples, args.seed, kind, _pso(args))
    rows = haar_sweep(cfg, threads=args.threads, timing=args.timing)
    _sweep(args, haar_rows_to_csv(rows), {"samples": len(rows), "kind": str(kind)})


def cmd_ising(args) -> None:
    if args.n > 12:
        raise ValidationError("dense ground states are limited to 12 sites")
    measured = _int_list(args.measured)
    if measured is None:
        measured = list(range(1, args.n + 1, 2))
    if any(q < 1 or q > args.n for q in measured):
        raise ValidationError("--measured takes 1-based site labels")
    a = [q - 1 for q in measured]
    ce_s = _int_list(args.s)
    ce_s = None if ce_s is None else [q - 1 for q in ce_s]
    grid = tfim_grid(args.n, _float_list(args.j_over_h), args.h, args.hx_ratio)
    rows = ising_sweep(grid, a, _pso(args), ce_s=ce_s, threads=args.threads, include_ce=not args.skip_ce)
    _sweep(args, ising_rows_to_csv(rows), {"points": len(rows), "measured_zero_based": a})


# --------------------------------------------------------------------------- #
# Parser
# --------------------------------------------------------------------------- #

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--out", default=None, help="output file (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), default=None)

    state = argparse.ArgumentParser(add_help=False)
    state.add_argument("--state", help="JSON state file {n_qubits, re, im}")
    state.add_argument("--preset", help="ghz:N, w:N, line-graph:N or haar:N")

    kind = argparse.ArgumentParser(add_help=False)
    kind.add_argument("--kind", default="ntangle", help="ntangle, gme, ce or sqrt_ce")
    kind.add_argument("--s", default=None, help="CE label set, comma separated")

    pso = argparse.ArgumentParser(add_help=False)
    pso.add_argument("--swarm", type=int, default=PsoConfig.swarm_size)
    pso.add_argument("--iterations", type=int, default=PsoConfig.iterations)
    pso.add_argument("--restarts", type=int, default=PsoConfig.restarts)

    p = argparse.ArgumentParser(prog="entloc", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("measure", parents=[common, state, kind], help="entanglement of a state")
    s.set_defaults(func=cmd_measure)

    s = sub.add_parser("localize", parents=[common, state, kind, pso], help="LME estimate by particle swarm")
    s.add_argument("--measured", required=True, help="measured qubits (0-based)")
    s.set_defaults(func=cmd_localize)

    s = sub.add_parser("bounds", parents=[common, state, kind], help="upper and lower LME bounds")
    s.add_argument("--measured", required=True, help="measured qubits (0-based)")
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("graph", parents=[common], help="graph-state n-tangle criterion and CE")
    s.add_argument("action", choices=("check", "ce"))
    s.add_argument("--graph", help="edge-list file (first line n, then 'u v' per edge, 0-based)")
    s.add_argument("--preset", help="line-graph:N")
    s.add_argument("--measured", default="", help="measured vertices (0-based)")
    s.add_argument("--s", default=None, help="CE label set (0-based)")
    s.set_defaults(func=cmd_graph)

    s = sub.add_parser("weighted", parents=[common, pso], help="weighted line: rotated-X protocol over phi")
    s.add_argument("--pairs", type=int, default=3, help="line has 2*pairs+1 vertices")
    s.add_argument("--phi", default=None, help="comma-separated phases (default: uniform grid)")
    s.add_argument("--grid", type=int, default=17, help="grid points on [0, 2pi]")
    s.add_argument("--lme", action="store_true", help="also run the LME search per point")
    s.set_defaults(func=cmd_weighted)

    s = sub.add_parser("haar", parents=[common, kind, pso], help="Haar-random sweeps and moments")
    s.add_argument("action", choices=("sweep", "moments"))
    s.add_argument("--na", type=int, default=2)
    s.add_argument("--nb", type=int, default=4)
    s.add_argument("--samples", type=int, default=100)
    s.add_argument("--timing", action="store_true", help="fill the seconds column")
    s.set_defaults(func=cmd_haar)

    s = sub.add_parser("ising", parents=[common, pso], help="transverse-field Ising sweep")
    s.add_argument("action", choices=("sweep",))
    s.add_argument("--n", type=int, default=9)
    s.add_argument("--measured", default=None, help="measured sites (1-based, default odd sites)")
    s.add_argument("--s", default=None, help="CE label set (1-based, default all kept sites)")
    s.add_argument("--j-over-h", default="0.1,0.5,1,1.5,2,3,5")
    s.add_argument("--h", type=float, default=1.0)
    s.add_argument("--hx-ratio", type=float, default=0.0, help="longitudinal field as a multiple of h")
    s.add_argument("--skip-ce", action="store_true", help="leave lme_ce empty (NaN) to save time")
    s.set_defaults(func=cmd_ising)
    return p


SWEEPS = {"weighted", "haar", "ising"}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.format is None:
        sweep = args.command in SWEEPS and not (args.command == "haar" and args.action == "moments")
        args.format = "csv" if sweep else "json"
    try:
        if args.threads < 1:
            raise ValidationError("--threads must be at least 1")
        args.func(args)
    except (np.linalg.LinAlgError, ArithmeticError, RuntimeError) as exc:
        sys.stderr.write(f"entloc: numerical failure: {exc}\n")
        return 1
    except (CapacityError, ValueError, IndexError, KeyError, OSError) as exc:
        sys.stderr.write(f"entloc: error: {exc}\n")
        return 2
    return 0


def main() -> None:
    sys.exit(run())
