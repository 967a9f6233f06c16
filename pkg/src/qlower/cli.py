"""Command-line front end for batch use of the toolchain.

Machine-readable JSON goes to stdout (one object per invocation);
--pretty switches to a human rendering. Errors are reported as JSON on
stderr. Exit codes: 0 success, 1 validation failure, 2 usage error,
3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from .approx import (
    HolderFunctionSpec,
    build_approximator,
    bundle_from_network,
    evaluate_implicit,
)
from .errors import DomainError, QlowerError
from .harness import (
    CSV_COLUMNS,
    builtin_targets,
    check_holder,
    equivalence_check,
    report_rows,
    write_report_csv,
)
from .lowering import (
    TheoremBoundParams,
    binarize,
    ternarize,
    theorem_bounds,
    to_unit_weights,
)
from .network import WeightSet, evaluate, load_network, save_network, validate
from .rationals import as_rational, format_rational


def _rational_arg(text: str):
    try:
        return as_rational(text)
    except QlowerError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _int_arg(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None


def _split_list(text: str) -> list[str]:
    return [tok.strip() for tok in text.split(",") if tok.strip()]


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def _emit(args, payload: dict, pretty_lines: Sequence[str]) -> None:
    if args.pretty:
        print("\n".join(pretty_lines))
    else:
        print(json.dumps(payload))


def _emit_error(exc: BaseException) -> None:
    print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
          file=sys.stderr)


def _default_cert_path(out_path: str) -> str:
    if out_path.endswith(".json"):
        return out_path[:-len(".json")] + ".cert.json"
    return out_path + ".cert.json"


def _mode(args) -> str:
    return "float" if args.float_mode else "exact"


# ---------------------------------------------------------------------------
# Subcommands


def cmd_approx(args) -> int:
    targets = builtin_targets(args.d)
    if args.target not in targets:
        raise DomainError(
            f"unknown target {args.target!r}; available: {', '.join(sorted(targets))}")
    spec = targets[args.target]
    if args.beta is not None or args.K is not None or args.F is not None:
        spec = HolderFunctionSpec(
            spec.evaluator,
            args.d,
            float(args.beta) if args.beta is not None else spec.beta,
            float(args.K) if args.K is not None else spec.K,
            float(args.F) if args.F is not None else spec.F,
        )
        check_holder(spec, name=args.target)
    bundle = build_approximator(spec, args.eps, M_override=args.M)
    materialized = bundle.network is not None
    if materialized:
        save_network(bundle.network, args.out)
    cert_path = args.cert or _default_cert_path(args.out)
    _write_json(cert_path, bundle.certificate_dict())
    payload = {
        "command": "approx",
        "target": args.target,
        "d": args.d,
        "M": bundle.grid.M,
        "cells": bundle.grid.cell_count,
        "epsilon": float(args.eps),
        "bound": bundle.error_bound,
        "certified": bundle.certified,
        "materialized": materialized,
        "network": args.out if materialized else None,
        "certificate": cert_path,
    }
    _emit(args, payload, [
        f"target {args.target} on [0,1]^{args.d} "
        f"(beta={spec.beta}, K={spec.K})",
        f"M={bundle.grid.M}: {bundle.grid.cell_count} cells, "
        f"bound {bundle.error_bound} vs eps {float(args.eps)}"
        f" -> {'certified' if bundle.certified else 'NOT certified'}",
        f"network: {args.out if materialized else '(not materialized: over the cap)'}",
        f"certificate: {cert_path}",
    ])
    if not bundle.certified:
        _emit_error(DomainError(
            f"resolution M={bundle.grid.M} does not certify eps={float(args.eps)}"))
        return 1
    return 0


def cmd_lower(args) -> int:
    net = load_network(args.infile)
    via_ternary = False
    if args.mode == "ternary":
        lowered, cert = ternarize(net)
    elif validate(net, WeightSet.TERNARY_HALF).passed:
        lowered, cert = binarize(net)
    else:
        middle, _ = ternarize(net)
        lowered, cert = binarize(middle)
        via_ternary = True
    save_network(lowered, args.out)
    cert_path = args.cert or _default_cert_path(args.out)
    _write_json(cert_path, cert.to_dict())
    payload = {
        "command": "lower",
        "mode": args.mode,
        "via_ternary": via_ternary,
        "in": args.infile,
        "out": args.out,
        "certificate": cert_path,
        **cert.to_dict(),
    }
    _emit(args, payload, [
        f"{args.mode} lowering{' (ternary first)' if via_ternary else ''}: "
        f"depth {cert.source_depth} -> {cert.target_depth}, "
        f"width {cert.source_width_max} -> {cert.target_width_max} "
        f"(bound {cert.target_width_bound}), "
        f"nonzeros {cert.source_sparsity} -> {cert.target_sparsity} "
        f"(bound {cert.target_sparsity_bound})",
        f"bounds hold: {cert.passed}",
        f"network: {args.out}",
        f"certificate: {cert_path}",
    ])
    if not cert.passed:
        _emit_error(DomainError("lowering certificate bounds violated"))
        return 1
    return 0


def cmd_rescale(args) -> int:
    net = load_network(args.infile)
    # The source alphabet decides the label: a zero-free binary result
    # also satisfies the ternary unit alphabet, so testing the output
    # would misreport it.
    src_ternary = validate(net, WeightSet.TERNARY_HALF).passed
    unit = to_unit_weights(net)
    save_network(unit, args.out)
    out_set = WeightSet.TERNARY_UNIT if src_ternary else WeightSet.BINARY_UNIT
    payload = {
        "command": "rescale",
        "to": args.to,
        "in": args.infile,
        "out": args.out,
        "weight_set": out_set.value,
        "output_scale": format_rational(unit.output_scale),
    }
    _emit(args, payload, [
        f"rescaled to {out_set.value}; output_scale = "
        f"{format_rational(unit.output_scale)}",
        f"network: {args.out}",
    ])
    return 0


def _render_value(value, mode: str):
    if isinstance(value, tuple):
        return [_render_value(v, mode) for v in value]
    if mode == "exact":
        return format_rational(value)
    return float(value)


def cmd_eval(args) -> int:
    net = load_network(args.net)
    x = tuple(as_rational(tok) for tok in _split_list(args.x))
    mode = _mode(args)
    if args.implicit:
        value = evaluate_implicit(bundle_from_network(net), x, mode)
    else:
        value = evaluate(net, x, mode)
    rendered = _render_value(value, mode)
    payload = {"command": "eval", "mode": mode, "implicit": args.implicit,
               "value": rendered}
    pretty = " ".join(str(v) for v in rendered) if isinstance(rendered, list) \
        else str(rendered)
    _emit(args, payload, [pretty])
    return 0


def cmd_equiv(args) -> int:
    a = load_network(args.a)
    b = load_network(args.b)
    report = equivalence_check(
        a, b, n_samples=args.samples, seed=args.seed, mode=_mode(args),
        tolerance=args.tolerance)
    payload = {"command": "equiv", **report.to_dict()}
    _emit(args, payload, [
        f"{report.samples} samples ({report.mode} mode): "
        f"{'equivalent' if report.equivalent else 'DIFFER'}, "
        f"max |diff| = {report.max_abs_diff}",
    ])
    if not report.equivalent:
        _emit_error(DomainError(
            f"networks differ (max |diff| = {report.max_abs_diff})"))
        return 1
    return 0


def cmd_bounds(args) -> int:
    params = TheoremBoundParams(
        m=args.m, N=args.N, beta=float(args.beta), d=args.d, K=float(args.K))
    report = theorem_bounds(params)
    payload = {"command": "bounds", **report.to_dict()}
    _emit(args, payload, [
        f"depth L = {report.L}",
        f"max width = {report.p_inf}",
        f"max nonzeros = {report.s_max}",
        f"error factor = {report.error_factor}",
        f"ternary form: depth {report.lowered_ternary[0]}, "
        f"width {report.lowered_ternary[1]}, nonzeros {report.lowered_ternary[2]}",
        f"binary form: depth {report.lowered_binary[0]}, "
        f"width {report.lowered_binary[1]}",
        f"rounding: {report.rounding}",
    ])
    return 0


def cmd_report(args) -> int:
    dims = [int(tok) for tok in _split_list(args.dims)]
    eps_list = [as_rational(tok) for tok in _split_list(args.eps_list)]
    if not dims or not eps_list:
        raise DomainError("need at least one dimension and one epsilon")
    names = _split_list(args.targets) if args.targets else None
    rows = report_rows(dims, eps_list, names, n_per_axis=args.grid)
    write_report_csv(args.csv, rows)
    all_passed = all(row["pass"] for row in rows)
    payload = {"command": "report", "rows": len(rows), "csv": args.csv,
               "all_passed": all_passed}
    widths = {c: max(len(c), *(len(str(r[c])) for r in rows)) for c in CSV_COLUMNS}
    table = [" ".join(c.ljust(widths[c]) for c in CSV_COLUMNS)]
    table.extend(
        " ".join(str(r[c]).ljust(widths[c]) for c in CSV_COLUMNS) for r in rows)
    table.append(f"csv: {args.csv}")
    _emit(args, payload, table)
    if not all_passed:
        _emit_error(DomainError("one or more rows exceeded their bound"))
        return 1
    return 0


# ---------------------------------------------------------------------------
# Parser


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--pretty", action="store_true",
                   help="human-readable output instead of JSON")


def _add_mode_flags(p: argparse.ArgumentParser) -> None:
    group = p.add_mutually_exclusive_group()
    group.add_argument("--exact", action="store_true",
                       help="exact rational arithmetic (default)")
    group.add_argument("--float", dest="float_mode", action="store_true",
                       help="64-bit arithmetic")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qlower",
        description="Exact construction, lowering, and evaluation of "
                    "quantized feedforward networks.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True,
                                metavar="command")

    p = sub.add_parser("approx",
                       help="build a certified piecewise-constant approximator")
    p.add_argument("--target", required=True,
                   help="built-in target: const, mean, maxcoord, root")
    p.add_argument("--d", type=_positive_int, required=True,
                   help="input dimension")
    p.add_argument("--beta", type=_rational_arg, help="override the exponent")
    p.add_argument("--K", type=_rational_arg, help="override the constant")
    p.add_argument("--F", type=_rational_arg, help="override the sup bound")
    p.add_argument("--eps", type=_rational_arg, required=True,
                   help="target sup accuracy")
    p.add_argument("--M", type=_positive_int,
                   help="explicit grid resolution (skips the certified choice)")
    p.add_argument("--out", required=True, help="network JSON path")
    p.add_argument("--cert", help="certificate path (default: next to --out)")
    _add_common(p)
    p.set_defaults(func=cmd_approx)

    p = sub.add_parser("lower", help="lower a network to a smaller alphabet")
    p.add_argument("--mode", required=True, choices=("ternary", "binary"))
    p.add_argument("--in", dest="infile", required=True, help="input network")
    p.add_argument("--out", required=True, help="output network")
    p.add_argument("--cert", help="certificate path (default: next to --out)")
    _add_common(p)
    p.set_defaults(func=cmd_lower)

    p = sub.add_parser("rescale", help="rescale weights to a unit alphabet")
    p.add_argument("--to", required=True, choices=("unit",))
    p.add_argument("--in", dest="infile", required=True, help="input network")
    p.add_argument("--out", required=True, help="output network")
    _add_common(p)
    p.set_defaults(func=cmd_rescale)

    p = sub.add_parser("eval", help="evaluate a network at a point")
    p.add_argument("--net", required=True, help="network JSON path")
    p.add_argument("--x", required=True,
                   help='comma-separated coordinates; rationals like "3/10" allowed')
    p.add_argument("--implicit", action="store_true",
                   help="evaluate an approximator by cell lookup")
    _add_mode_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("equiv", help="compare two networks on seeded samples")
    p.add_argument("--a", required=True, help="first network")
    p.add_argument("--b", required=True, help="second network")
    p.add_argument("--samples", type=_positive_int, default=200)
    p.add_argument("--seed", type=_int_arg, default=0)
    p.add_argument("--tolerance", type=float, default=0.0)
    _add_mode_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_equiv)

    p = sub.add_parser("bounds", help="size bounds for a certified approximator")
    p.add_argument("--d", type=_positive_int, required=True)
    p.add_argument("--beta", type=_rational_arg, required=True)
    p.add_argument("--K", type=_rational_arg, required=True)
    p.add_argument("--N", type=_positive_int, required=True)
    p.add_argument("--m", type=_positive_int, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("report", help="sup-error CSV over built-in targets")
    p.add_argument("--targets", help="comma-separated names (default: all)")
    p.add_argument("--eps-list", required=True, dest="eps_list",
                   help="comma-separated accuracies")
    p.add_argument("--dims", default="1", help="comma-separated dimensions")
    p.add_argument("--grid", type=_positive_int, default=101,
                   help="scan points per axis")
    p.add_argument("--csv", required=True, help="output CSV path")
    _add_common(p)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        return args.func(args)
    except QlowerError as exc:
        _emit_error(exc)
        return 1
    except OSError as exc:
        _emit_error(exc)
        return 3


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
