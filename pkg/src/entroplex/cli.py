"""Command-line front end."""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import re
import sys
from fractions import Fraction

from . import codes, prooftab, tradeoff
from .lpbuild import LinearConstraint, build
from .model import (
    AllDemands,
    CapacityError,
    OfType,
    ProblemInstance,
    check_demand_type,
    demand_types,
    elemental_count,
    format_rational,
    format_var,
    parse_rational,
    parse_vars,
    suggested_relaxation,
    universe,
)
from .ratsolve import CertificationError

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _emit(doc, fmt: str, text: str | None = None, rows: list[dict] | None = None) -> None:
    if fmt == "json":
        sys.stdout.write(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    elif fmt == "csv" and rows is not None:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(rows[0]) if rows else [], lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        sys.stdout.write(buf.getvalue())
    else:
        sys.stdout.write((text if text is not None else json.dumps(doc, sort_keys=True)) + "\n")


def _rational(text: str) -> Fraction:
    try:
        return parse_rational(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _instance(args) -> ProblemInstance:
    if args.n < 1 or args.k < 1:
        raise UsageError("--n and --k must be positive")
    filt = AllDemands()
    if getattr(args, "demand_type", None):
        try:
            t = tuple(int(x) for x in args.demand_type.split(","))
            filt = OfType(check_demand_type(t, args.n, args.k))
        except ValueError as exc:
            raise UsageError(f"bad --demand-type: {exc}") from None
    restriction = None
    if getattr(args, "demands", None):
        restriction = tuple(s.strip() for s in args.demands.split(",") if s.strip())
    try:
        return ProblemInstance(args.n, args.k, filt, restriction, getattr(args, "max_universe", None))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _add_instance_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, required=True, help="number of files")
    p.add_argument("--k", type=int, required=True, help="number of users")
    p.add_argument("--demand-type", help="comma-separated sorted request counts, e.g. 2,1,0")
    p.add_argument("--demands", help="comma-separated delivery variables to keep, e.g. X1112,X1122")
    p.add_argument("--max-universe", type=int, help="size cap on the variable universe")


# ---------------------------------------------------------------------------
# subcommands


def cmd_info(args) -> int:
    if args.n < 1 or args.k < 1:
        raise UsageError("--n and --k must be positive")
    inst = ProblemInstance(args.n, args.k)
    n = len(inst.universe_unchecked())
    types = demand_types(args.n, args.k)
    doc = {
        "n_files": args.n,
        "n_users": args.k,
        "demand_types": [list(t) for t in types],
        "universe_size": n,
        "elemental_count": elemental_count(n),
    }
    text = "\n".join(
        [
            f"(N,K)=({args.n},{args.k})",
            f"demand types ({len(types)}): " + " ".join("(" + ",".join(map(str, t)) + ")" for t in types),
            f"universe size: {n}",
            f"elemental inequalities: {elemental_count(n):,}",
        ]
    )
    _emit(doc, args.format, text, [{"type": ",".join(map(str, t))} for t in types])
    return EXIT_OK


def cmd_bound(args) -> int:
    inst = _instance(args)
    basis = None
    try:
        universe(inst)
    except CapacityError:
        if args.demands:
            raise
        basis = suggested_relaxation(inst)
    try:
        corners = tradeoff.corner_points(basis or inst, threads=args.threads)
    except tradeoff.TradeoffError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_FAIL
    facets = tradeoff.facets(corners)
    doc = {"instance": prooftab.instance_to_json(inst), "corners": [p.as_json() for p in corners], "facets": [str(f) for f in facets]}
    lines = ["corners: " + " ".join(f"({format_rational(p.M)},{format_rational(p.R)})" for p in corners), "facets: " + ", ".join(map(str, facets))]
    if basis is not None:
        kept = [format_var(x) for x in basis.restriction]
        doc["relaxation"] = kept
        lines.append(f"outer bound from the universe restricted to {','.join(kept)}")
    text = "\n".join(lines)
    _emit(doc, args.format, text, [p.as_json() for p in corners])
    return EXIT_OK


def _parse_bound(text: str) -> LinearConstraint:
    try:
        lhs, rhs = text.replace(" ", "").split(">=")
        coeffs = {}
        for sign, num, var in re.findall(r"([+-]?)([0-9/]*)([MR])", lhs):
            q = parse_rational(num) if num else Fraction(1)
            coeffs[var] = coeffs.get(var, 0) + (-q if sign == "-" else q)
        return LinearConstraint(coeffs, ">=", parse_rational(rhs))
    except ValueError:
        raise UsageError(f"cannot read bound {text!r}; expected e.g. 3M+4R>=8") from None


def cmd_prove(args) -> int:
    inst = _instance(args)
    bound = _parse_bound(args.bound)
    try:
        table = prooftab.extract(inst, bound, threads=args.threads)
    except CertificationError as exc:
        sys.stderr.write(f"bound not certified: {exc}\n")
        return EXIT_FAIL
    out = prooftab.serialize(table)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(out)
    if args.format == "text":
        sys.stdout.write(prooftab.render_text(table, inst) + "\n")
    elif not args.output:
        sys.stdout.write(out)
    return EXIT_OK


def cmd_verify_proof(args) -> int:
    try:
        table = prooftab.load(args.file)
    except OSError as exc:
        raise UsageError(str(exc)) from None
    inst = _instance(args) if args.n is not None else None
    if inst is None and "instance" not in table.meta:
        raise UsageError("the table records no instance; pass --n and --k")
    report = prooftab.verify(table, inst)
    doc = {"ok": report.ok, "stage": report.stage, "row": report.row, "columns": report.columns, "message": report.message}
    _emit(doc, args.format, str(report))
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_stable(args) -> int:
    inst = _instance(args)
    corner = tradeoff.TradeoffPoint(args.corner[0], args.corner[1])
    try:
        target = parse_vars(args.target)
        given = parse_vars(args.given) if args.given else []
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.mode == "lex":
        mode = tradeoff.Lexicographic()
    else:
        if args.gamma is None:
            raise UsageError("--mode gamma needs --gamma")
        try:
            mode = tradeoff.Gamma(args.gamma)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    try:
        rep = tradeoff.stable_range(inst, corner, target, mode, given, threads=args.threads)
    except tradeoff.TradeoffError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_FAIL
    doc = rep.as_json()
    text = f"{rep.label()} in [{format_rational(rep.min_value)}, {format_rational(rep.max_value)}]" + (" (stable)" if rep.stable else "")
    _emit(doc, args.format, text, [doc | {"corner": f"{doc['corner']['M']} {doc['corner']['R']}"}])
    return EXIT_OK


def cmd_code(args) -> int:
    if args.scheme:
        if args.scheme in codes.PAPER_CODES:
            code = codes.paper_code(args.scheme)
            ctype = codes.CODE_TYPES[args.scheme]
        elif args.scheme == "man":
            if args.n is None or args.k is None or args.t is None:
                raise UsageError("--scheme man needs --n, --k and --t")
            code = codes.man_scheme(args.n, args.k, args.t)
            ctype = None
        else:
            raise UsageError(f"unknown scheme {args.scheme!r}; choose from {', '.join(sorted(codes.PAPER_CODES))} or man")
    elif args.file:
        with open(args.file, encoding="utf-8") as fh:
            code = codes.LinearCode.from_json(fh.read())
        ctype = None
    else:
        raise UsageError("give --scheme or --file")
    if args.verify == "all":
        demands = [d for d in itertools.product(range(1, code.n_files + 1), repeat=code.n_users)]
        if ctype is not None:
            demands = [d for d in demands if OfType(ctype).admits(d, code.n_files)]
    else:
        demands = code.demands
    report = codes.verify_code(code, demands)
    doc = report.as_json()
    text = f"{code.name}: point ({doc['M']},{doc['R']}), {report.checked} demands, " + ("all decodable" if report.ok else f"{len(report.failures)} failures")
    _emit(doc, args.format, text, [{"code": code.name, "M": doc["M"], "R": doc["R"], "ok": report.ok}])
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_export_lp(args) -> int:
    inst = _instance(args)
    text = build(inst).to_json()
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="entroplex", description="Exact entropy-LP bounds for coded caching.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv", "text"), default="json")
    common.add_argument("--threads", type=int, default=1)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("info", parents=[common], help="demand types and problem size")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("bound", parents=[common], help="corner points of the outer bound")
    _add_instance_flags(p)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("prove", parents=[common], help="proof table for a bound such as 3M+4R>=8")
    _add_instance_flags(p)
    p.add_argument("--bound", required=True)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_prove)

    p = sub.add_parser("verify-proof", parents=[common], help="check a proof table file")
    p.add_argument("file")
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--demand-type")
    p.add_argument("--demands")
    p.add_argument("--max-universe", type=int)
    p.set_defaults(func=cmd_verify_proof)

    p = sub.add_parser("stable", parents=[common], help="range of a joint entropy over optimal solutions at a corner")
    _add_instance_flags(p)
    p.add_argument("--corner", nargs=2, type=_rational, required=True, metavar=("M", "R"))
    p.add_argument("--target", required=True)
    p.add_argument("--given")
    p.add_argument("--mode", choices=("lex", "gamma"), default="lex")
    p.add_argument("--gamma", type=_rational)
    p.set_defaults(func=cmd_stable)

    p = sub.add_parser("code", parents=[common], help="verify a linear caching code")
    p.add_argument("--scheme")
    p.add_argument("--file")
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--t", type=int)
    p.add_argument("--verify", choices=("all", "defined"), default="all")
    p.set_defaults(func=cmd_code)

    p = sub.add_parser("export-lp", parents=[common], help="write the built LP as JSON")
    _add_instance_flags(p)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_export_lp)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if args.threads < 1:
        sys.stderr.write("--threads must be positive\n")
        return EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, CapacityError, prooftab.ProofTableError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
