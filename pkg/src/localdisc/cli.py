"""Command-line entry point.

Exit codes: 0 success, 1 verification or acceptance failure, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path
from typing import Sequence

from . import __version__, catalog
from .helstrom import DEFAULT_TOL, check_helstrom_conditions
from .linalg import DimensionError
from .locc import ProtocolError, builtin_ensemble, builtin_protocols, evaluate_exact, sample
from .optimizer import breidbart_povm, iterate_min_error, solve_symmetric_gamma
from .quantum import Ensemble, Povm
from .reproduce import format_table, reproduce
from .serialize import (
    InputError,
    dump_json,
    ensemble_from_json,
    ensemble_to_json,
    load_json,
    povm_from_json,
    povm_to_json,
    protocol_from_json,
)

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2

log = logging.getLogger("localdisc")


def builtin_povms() -> dict[str, Povm]:
    return {
        "breidbart": breidbart_povm(),
        "z-basis": Povm.from_basis([catalog.ket(0, 2), catalog.ket(1, 2)]),
        "domino-symmetric": solve_symmetric_gamma().povm,
    }


def resolve_ensemble(ref: str) -> tuple[Ensemble, float]:
    problems = catalog.named_problems()
    if ref in problems:
        return problems[ref].ensemble, problems[ref].scale
    if Path(ref).exists():
        return ensemble_from_json(load_json(ref)), 1.0
    raise InputError(f"--ensemble: {ref!r} is neither a catalog name nor a file")


def resolve_povm(ref: str) -> Povm:
    if not Path(ref).exists():
        povms = builtin_povms()
        if ref in povms:
            return povms[ref]
        raise InputError(f"--povm: {ref!r} is neither a built-in POVM nor a file")
    return povm_from_json(load_json(ref))


def _emit(args: argparse.Namespace, payload: dict, table: str) -> None:
    if args.output == "json":
        print(json.dumps(payload, indent=2))
    else:
        print(table)


def cmd_reproduce(args: argparse.Namespace) -> int:
    report = reproduce(args.tol)
    _emit(args, report.to_dict(), format_table(report))
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        dump_json(report.to_dict(), out / "reproduce.json")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_optimize(args: argparse.Namespace) -> int:
    ensemble, scale = resolve_ensemble(args.ensemble)
    tol = DEFAULT_TOL if args.tol is None else args.tol
    povm, trace = iterate_min_error(ensemble, tol=tol, max_iter=args.max_iter, seed=args.seed)
    report = trace.report
    payload = {
        "ensemble": ensemble.name or args.ensemble,
        "success": trace.success,
        "objective_scale": scale,
        "objective": scale * trace.success,
        "iterations": trace.iterations,
        "converged": trace.converged,
        "report": report.to_dict(),
        "povm": povm_to_json(povm),
    }
    table = "\n".join(
        [
            f"ensemble    {payload['ensemble']}",
            f"success     {trace.success:.12f}",
            f"objective   {scale * trace.success:.12f}  (scale {scale:g})",
            f"iterations  {trace.iterations}",
            f"helstrom    {'PASS' if report.passed else 'FAIL'} at tol {tol:.1e}",
        ]
    )
    _emit(args, payload, table)
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        dump_json(povm_to_json(povm), out / "povm.json")
        dump_json(report.to_dict(), out / "report.json")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_verify(args: argparse.Namespace) -> int:
    if not args.povm:
        raise InputError("--povm is required")
    ensemble, _ = resolve_ensemble(args.ensemble)
    povm = resolve_povm(args.povm)
    if povm.dim != ensemble.dim:
        raise InputError(f"--povm: dimension {povm.dim} does not match ensemble dimension {ensemble.dim}")
    if len(povm) != len(ensemble):
        raise InputError(f"--povm: {len(povm)} effects for {len(ensemble)} states")
    tol = DEFAULT_TOL if args.tol is None else args.tol
    report = check_helstrom_conditions(ensemble, povm, tol)
    table = "\n".join(
        [
            f"success                 {report.success:.12f}",
            f"min eig(Gamma - p rho)  {min(report.min_eigenvalues):.3e}",
            f"(Gamma - p rho) pi      {report.max_stationarity_residual:.3e}",
            f"pi (p rho - p rho) pi   {report.max_pairwise_residual:.3e}",
            f"Gamma hermiticity       {report.gamma_hermiticity_residual:.3e}",
            f"verdict                 {'PASS' if report.passed else 'FAIL'} at tol {tol:.1e}",
        ]
    )
    _emit(args, report.to_dict(), table)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_simulate(args: argparse.Namespace) -> int:
    if not args.protocol:
        raise InputError("--protocol is required")
    builtins = builtin_protocols()
    if args.protocol in builtins and not Path(args.protocol).exists():
        b = builtins[args.protocol]
        protocol, ensemble = b.protocol, builtin_ensemble(b.ensemble)
        if args.ensemble:
            ensemble, _ = resolve_ensemble(args.ensemble)
    else:
        if not Path(args.protocol).exists():
            raise InputError(f"--protocol: {args.protocol!r} is neither a built-in protocol nor a file")
        protocol = protocol_from_json(load_json(args.protocol))
        if not args.ensemble:
            raise InputError("--ensemble is required with a protocol file")
        ensemble, _ = resolve_ensemble(args.ensemble)
    exact = evaluate_exact(protocol, ensemble)
    shots = args.shots
    if shots < 1:
        raise InputError("--shots must be at least 1")
    rep = sample(protocol, ensemble, shots, args.seed)
    sigma = math.sqrt(exact * (1.0 - exact) / shots)
    z = (rep.aggregate - exact) / sigma if sigma > 0 else (0.0 if rep.aggregate == exact else math.inf)
    payload = {
        "protocol": protocol.name,
        "messages": protocol.messages(),
        "exact": exact,
        "sample": rep.to_dict(),
        "sigma": sigma,
        "z": z,
    }
    table = "\n".join(
        [
            f"protocol   {protocol.name} ({protocol.direction}, {protocol.messages()} message(s))",
            f"exact      {exact:.12f}",
            f"sampled    {rep.aggregate:.6f} +- {rep.stderr:.2e}  ({shots} shots, seed {args.seed}, {rep.rng})",
            f"deviation  {z:+.2f} sigma (sigma = {sigma:.2e})",
        ]
    )
    _emit(args, payload, table)
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        dump_json(payload, out / "simulate.json")
    return EXIT_OK


def cmd_catalog(args: argparse.Namespace) -> int:
    problems = catalog.named_problems()
    protocols = builtin_protocols()
    payload = {
        "ensembles": {k: {"dims": list(v.ensemble.dims), "states": len(v.ensemble), "scale": v.scale, "description": v.description} for k, v in problems.items()},
        "protocols": {k: {"ensemble": v.ensemble, "direction": v.protocol.direction, "messages": v.protocol.messages(), "description": v.protocol.description} for k, v in protocols.items()},
        "povms": sorted(builtin_povms()),
    }
    lines = ["ensembles:"]
    for k, v in problems.items():
        lines.append(f"  {k:<20} dims={list(v.ensemble.dims)!s:<8} n={len(v.ensemble):<3} {v.description}")
    lines.append("protocols:")
    for k, v in protocols.items():
        lines.append(f"  {k:<22} {v.protocol.direction:<8} msgs={v.protocol.messages()}  {v.protocol.description}")
    lines.append("povms: " + ", ".join(payload["povms"]))
    _emit(args, payload, "\n".join(lines))
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for k in catalog.CATALOG_NAMES:
            dump_json(ensemble_to_json(problems[k].ensemble), out / f"{k}.json")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", choices=("table", "json"), default="table")
    common.add_argument("--out-dir", default=None, help="directory for JSON artifacts")
    common.add_argument("--tol", type=float, default=None, help="certification tolerance")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="localdisc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reproduce", parents=[common], help="recompute the headline numbers")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("optimize", parents=[common], help="iteratively find a minimum-error POVM")
    p.add_argument("--ensemble", required=True, help="catalog name or ensemble JSON file")
    p.add_argument("--max-iter", type=int, default=5000)
    p.add_argument("--seed", type=int, default=None, help="random initial POVM (default: uniform)")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("verify", parents=[common], help="check the optimality conditions for a POVM")
    p.add_argument("--ensemble", required=True)
    p.add_argument("--povm", required=False, help="built-in POVM name or POVM JSON file")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", parents=[common], help="exact and sampled success of a protocol")
    p.add_argument("--protocol", required=False, help="built-in protocol name or protocol JSON file")
    p.add_argument("--ensemble", default=None)
    p.add_argument("--shots", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("catalog", parents=[common], help="list ensembles, protocols and POVMs")
    p.set_defaults(func=cmd_catalog)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, DimensionError, ProtocolError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
