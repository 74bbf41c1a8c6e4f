"""Command-line surface: graph ingestion, fixture generation, reports.

Subcommands
-----------
cumulants   solve the steady-state cumulants of a graph (inline or sampled
            parameters) and dump tensors plus recursion residuals
identify    recover parameters from a cumulant stack, falling back to the
            Jacobian rank verdict when no constructive method applies
analyze     one combined report: independence statements, skeleton shape,
            rank constraints, and the local-identifiability verdict
ppoly       CSV table of the self-loop placement polynomials

Exit codes: 0 ok, 2 input error, 3 instability, 4 identification failure.
Reports embed the config, seed, and library version, and identical
config+seed reproduce byte-identical output.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .constraints import rank_constraints_scan
from .engine import (
    DiagonalCumulant,
    ParameterMatrix,
    UnstableMatrix,
    random_omegas,
    recursive_residual,
    sample_stable_matrix,
    solve_cumulant,
)
from .graphs import (
    DirectedGraph,
    DisconnectedGraph,
    classify_star,
    implied_conditional_independence,
    implied_marginal_independence,
)
from .identify import (
    CumulantStack,
    DegenerateDenominator,
    HypothesisViolated,
    IdentifiabilityReport,
    NoMethodApplies,
    SingularBlock,
    auto_identify,
    count_equations_vs_parameters,
)
from .jacobian import local_identifiability_verdict
from .tensors import SymmetricTensor
from .treks import placement_table_csv

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_UNSTABLE = 3
EXIT_IDENTIFY = 4


class InputError(Exception):
    pass


def _load_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read JSON from {path}: {exc}") from exc


def _load_graph(path: str) -> DirectedGraph:
    try:
        return DirectedGraph.from_json_dict(_load_json(path))
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _parse_orders(text: str) -> tuple[int, ...]:
    try:
        orders = tuple(sorted(int(x) for x in text.split(",")))
    except ValueError as exc:
        raise InputError(f"bad orders {text!r}") from exc
    if not orders or any(n not in (2, 3, 4) for n in orders):
        raise InputError("orders must be a subset of 2,3,4")
    return orders


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _dump(document: dict) -> str:
    return json.dumps(document, indent=2, sort_keys=True) + "\n"


def _config_dict(args: argparse.Namespace) -> dict:
    keep = ("command", "graph", "seed", "orders", "trials", "tol", "format", "threads")
    return {k: getattr(args, k) for k in keep if hasattr(args, k)}


# ---------------------------------------------------------------------------
# cumulants
# ---------------------------------------------------------------------------


def _materialize_parameters(g: DirectedGraph, args) -> tuple[ParameterMatrix, dict]:
    orders = _parse_orders(args.orders)
    if args.params:
        data = _load_json(args.params)
        try:
            entries = np.asarray(data["A"], dtype=float)
            omegas = {
                int(n): DiagonalCumulant(int(n), np.asarray(w, dtype=float))
                for n, w in data["omega"].items()
            }
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed parameter file: {exc}") from exc
        try:
            pm = ParameterMatrix(g, entries)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        missing = [n for n in orders if n not in omegas]
        if missing:
            raise InputError(f"parameter file lacks omega for orders {missing}")
        return pm, {n: omegas[n] for n in orders}
    pm = sample_stable_matrix(g, seed=args.seed, target_radius=args.radius)
    rng = np.random.default_rng(args.seed + 1)
    return pm, random_omegas(rng, g.p, orders)


def cmd_cumulants(args) -> int:
    g = _load_graph(args.graph)
    pm, omegas = _materialize_parameters(g, args)
    pm.require_stable()
    tensors = {}
    residuals = {}
    for n, omega in sorted(omegas.items()):
        t = solve_cumulant(pm, omega)
        tensors[str(n)] = t.to_json_dict()
        residuals[str(n)] = recursive_residual(t, pm, omega)
    if args.format == "csv":
        order2 = SymmetricTensor.from_json_dict(tensors["2"])
        _write(args.out, order2.to_csv())
        return EXIT_OK
    document = {
        "version": __version__,
        "config": _config_dict(args),
        "graph": g.to_json_dict(),
        "a": [list(row) for row in pm.entries],
        "tensors": tensors,
        "recursive_residuals": residuals,
    }
    _write(args.out, _dump(document))
    return EXIT_OK


# ---------------------------------------------------------------------------
# identify
# ---------------------------------------------------------------------------


def _load_stack(path: str) -> CumulantStack:
    data = _load_json(path)
    tensors = data.get("tensors", data)
    try:
        s = SymmetricTensor.from_json_dict(tensors["2"])
        t = SymmetricTensor.from_json_dict(tensors["3"])
        r = (
            SymmetricTensor.from_json_dict(tensors["4"])
            if "4" in tensors
            else None
        )
        return CumulantStack(s=s, t=t, r=r)
    except (KeyError, ValueError) as exc:
        raise InputError(f"malformed stack file: {exc}") from exc


def cmd_identify(args) -> int:
    g = _load_graph(args.graph)
    stack = _load_stack(args.stack)
    document = {
        "version": __version__,
        "config": _config_dict(args),
        "graph": g.to_json_dict(),
    }
    try:
        report = auto_identify(g, stack, tol=args.tol)
        document["report"] = report.to_json_dict()
        _write(args.out, _dump(document))
        return EXIT_OK if report.verdict == "recovered" else EXIT_IDENTIFY
    except (DegenerateDenominator, SingularBlock, HypothesisViolated) as exc:
        document["report"] = IdentifiabilityReport(
            method="constructive", verdict="hypothesis-violated", detail=str(exc)
        ).to_json_dict()
        document["equation_count"] = count_equations_vs_parameters(
            g, 4 if stack.r is not None else 3
        ).to_json_dict()
        _write(args.out, _dump(document))
        return EXIT_IDENTIFY
    except NoMethodApplies:
        verdict = local_identifiability_verdict(
            g, trials=args.trials, seed=args.seed, threads=args.threads
        )
        document["report"] = {
            "method": "jacobian",
            "verdict": verdict.verdict,
            "detail": verdict.reason,
        }
        document["jacobian"] = verdict.to_json_dict()
        document["equation_count"] = count_equations_vs_parameters(
            g, 4 if stack.r is not None else 3
        ).to_json_dict()
        _write(args.out, _dump(document))
        return (
            EXIT_OK if verdict.verdict == "locally-identifiable" else EXIT_IDENTIFY
        )


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------


def cmd_analyze(args) -> int:
    g = _load_graph(args.graph)
    document = {
        "version": __version__,
        "config": _config_dict(args),
        "graph": g.to_json_dict(),
    }
    try:
        star = classify_star(g)
        document["star"] = {"kind": star.kind, "center": star.center}
    except DisconnectedGraph:
        document["star"] = None

    document["marginal_independence"] = [
        [i, j]
        for i, j in itertools.combinations(range(g.p), 2)
        if implied_marginal_independence(g, [i], [j])
    ]
    document["conditional_independence"] = [
        {"i": i, "j": j, "given": [k]}
        for i, j in itertools.combinations(range(g.p), 2)
        for k in range(g.p)
        if k not in (i, j)
        and implied_conditional_independence(g, [i], [j], [k])
    ]

    verdict = local_identifiability_verdict(
        g, trials=args.trials, seed=args.seed, threads=args.threads
    )
    if args.format == "csv":
        _write(args.out, verdict.singular_values_csv())
        return EXIT_OK
    document["local_identifiability"] = verdict.to_json_dict()
    document["equation_count"] = count_equations_vs_parameters(g, 4).to_json_dict()

    pm = sample_stable_matrix(g, seed=args.seed, target_radius=args.radius)
    rng = np.random.default_rng(args.seed + 1)
    omegas = random_omegas(rng, g.p, (2, 3, 4))
    stack = CumulantStack(
        s=solve_cumulant(pm, omegas[2]),
        t=solve_cumulant(pm, omegas[3]),
        r=solve_cumulant(pm, omegas[4]),
    )
    document["rank_constraints"] = [
        res.to_json_dict()
        for res in rank_constraints_scan(g, stack, max_subset=args.max_subset)
    ]
    _write(args.out, _dump(document))
    return EXIT_OK


def cmd_ppoly(args) -> int:
    _write(args.out, placement_table_csv(args.xmax, args.ymax))
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lyapcum",
        description="steady-state cumulant models of sparse VAR(1) processes",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--graph", required=True, help="graph JSON path")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--orders", default="2,3,4")
        p.add_argument("--trials", type=int, default=5)
        p.add_argument("--tol", type=float, default=1e-8)
        p.add_argument("--out", default="-", help="output path, '-' for stdout")
        p.add_argument("--format", choices=["json", "csv"], default="json")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--radius", type=float, default=0.6)

    p_cum = sub.add_parser("cumulants", help="solve and dump steady-state cumulants")
    common(p_cum)
    p_cum.add_argument("--params", help="inline parameter JSON (A and omega)")
    p_cum.set_defaults(func=cmd_cumulants)

    p_id = sub.add_parser("identify", help="recover parameters from a stack")
    common(p_id)
    p_id.add_argument("--stack", required=True, help="cumulant stack JSON path")
    p_id.set_defaults(func=cmd_identify)

    p_an = sub.add_parser("analyze", help="combined structural report")
    common(p_an)
    p_an.add_argument("--max-subset", type=int, default=2, dest="max_subset")
    p_an.set_defaults(func=cmd_analyze)

    p_pp = sub.add_parser("ppoly", help="placement polynomial table")
    p_pp.add_argument("--xmax", type=int, default=3)
    p_pp.add_argument("--ymax", type=int, default=3)
    p_pp.add_argument("--out", default="-")
    p_pp.set_defaults(func=cmd_ppoly)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except UnstableMatrix as exc:
        print(f"instability: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE


if __name__ == "__main__":
    sys.exit(main())
