"""
irrsum Command Line
Series files in; values, package decompositions, region boundaries and cancellation benchmarks out
"""

import sys
import os
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import argparse
import csv
import io
import json
import logging
from typing import Dict, List, Optional, Sequence

import mpmath
from mpmath import mpf

from config import get_settings, reload_settings
from core.dipp import dipp_sum
from core.domains import LogDomain, QuadDomain, boundary_rows
from core.errors import IrrsumError, InvalidParameter
from core.exponents import admissible_sequence
from core.numerics import adaptive_precision, to_decimal, workprec_bits
from core.series import load_series_file
from core.summation import (
    compare_methods,
    eval_decomposition,
    naive_sum,
    package_convergence,
    summate_by_packages,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_NOT_CONVERGED = 2


def parse_w(text: str):
    """'re,im' or a single real number"""
    parts = [p.strip() for p in str(text).split(',')]
    try:
        if len(parts) == 1:
            return mpf(parts[0])
        if len(parts) == 2:
            return mpmath.mpc(mpf(parts[0]), mpf(parts[1]))
    except (ValueError, TypeError) as e:
        raise InvalidParameter(f"cannot parse w from {text!r}") from e
    raise InvalidParameter(f"w must be 're,im' or a real number, got {text!r}")


def parse_precisions(text: str) -> List[int]:
    try:
        return [int(p) for p in text.split(',') if p.strip()]
    except ValueError as e:
        raise InvalidParameter(f"precisions must be comma-separated integers, got {text!r}") from e


def _resolve_bits(args) -> int:
    bits = args.prec if args.prec is not None else get_settings().precision.bits
    if bits < 53:
        raise InvalidParameter(f"precision must be at least 53 bits, got {bits}")
    return bits


def _emit_json(payload: Dict, out: Optional[str]):
    text = json.dumps(payload, indent=2)
    if out:
        with open(out, 'w') as f:
            f.write(text + "\n")
        logger.info("wrote %s", out)
    else:
        print(text)


def _emit_csv(header: Sequence[str], rows: List[Sequence], out: Optional[str]):
    buffer = io.StringIO()
    writer = csv.writer(buffer, delimiter=get_settings().output.csv_delimiter, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    if out:
        with open(out, 'w') as f:
            f.write(buffer.getvalue())
        logger.info("wrote %s", out)
    else:
        sys.stdout.write(buffer.getvalue())


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def evaluate_series(series, method: str, w, k, a, tol, n_max, bits: int) -> Dict[str, object]:
    """One evaluation at the working precision; returns value, tail, diagnostics and convergence"""
    settings = get_settings()
    extra = settings.output.extra_digits
    if method == "dipp":
        k = settings.dipp.k if k is None else k
        n_max = settings.dipp.n_max if n_max is None else n_max
        seq = admissible_sequence(k, series.support)
        result = dipp_sum(series, seq, w, tol=tol, n_max=n_max,
                          scan_min=settings.dipp.root_scan_min,
                          order_tol=mpf(2) ** -settings.dipp.order_tol_bits)
        return {"value": result.value, "tail": result.tail, "converged": result.converged,
                "diagnostics": result.to_dict(bits, extra)}
    if method == "packages":
        k = settings.summation.k if k is None else k
        a = settings.summation.a if a is None else a
        n_max = settings.summation.n_max if n_max is None else n_max
        dec, state = summate_by_packages(
            series, a=a, k=k, n_max=n_max,
            density_window=settings.summation.density_window,
            verify_bounds=settings.summation.verify_bounds,
            eps_cap_exponent=settings.summation.eps_cap_exponent,
            return_state=True)
        value, tail = eval_decomposition(dec, w)
        converged, residual = package_convergence(dec, state, w, value, tol)
        return {"value": value, "tail": tail,
                "converged": converged,
                "diagnostics": {
                    "packages": len(dec.terms),
                    "n_max": dec.n_max,
                    "k_prime": to_decimal(dec.k_prime, bits, extra),
                    "c": to_decimal(dec.c, bits, extra),
                    "r": to_decimal(dec.r, bits, extra),
                    "border_residual": to_decimal(residual, bits, extra),
                }}
    if method == "naive":
        value = naive_sum(series, w, bits)
        return {"value": value, "tail": mpf(0), "converged": True,
                "diagnostics": {"points": len(series)}}
    raise InvalidParameter(f"unknown method {method!r}")


def sum_payload(load_series, method: str, w_text, k=None, a=None, tol=None, n_max=None,
                bits: int = 256, adaptive: bool = False) -> Dict[str, object]:
    """
    Evaluate and serialize one sum

    load_series is called under the working precision so the series is built at that precision.
    """
    settings = get_settings()
    tol = settings.dipp.tol if tol is None else tol

    def evaluate():
        series = load_series()
        return evaluate_series(series, method, parse_w(w_text), k, a, tol, n_max, mpmath.mp.prec)

    if adaptive:
        outcome, bits = adaptive_precision(evaluate, tol, start_bits=bits,
                                           max_bits=settings.precision.max_bits,
                                           key=lambda r: r["value"])
    else:
        with workprec_bits(bits):
            outcome = evaluate()

    extra = settings.output.extra_digits
    return {
        "value": to_decimal(outcome["value"], bits, extra),
        "tail": to_decimal(outcome["tail"], bits, extra),
        "converged": outcome["converged"],
        "method": method,
        "precision_bits": bits,
        "diagnostics": outcome["diagnostics"],
    }


def cmd_sum(args) -> int:
    payload = sum_payload(lambda: load_series_file(args.file), args.method, args.w, k=args.k, a=args.a,
                          tol=args.tol, n_max=args.nmax, bits=_resolve_bits(args), adaptive=args.adaptive)
    _emit_json(payload, args.out)
    return EXIT_OK if payload["converged"] else EXIT_NOT_CONVERGED


def cmd_packages(args) -> int:
    bits = _resolve_bits(args)
    settings = get_settings()
    with workprec_bits(bits):
        series = load_series_file(args.file)
        dec = summate_by_packages(
            series,
            a=settings.summation.a if args.a is None else args.a,
            k=settings.summation.k if args.k is None else args.k,
            eps_degen=args.eps,
            n_max=settings.summation.n_max if args.nmax is None else args.nmax,
            density_window=settings.summation.density_window,
            verify_bounds=args.verify_bounds or settings.summation.verify_bounds,
            eps_cap_exponent=settings.summation.eps_cap_exponent)
        payload = dec.to_dict(bits, settings.output.extra_digits)
    payload["precision_bits"] = bits
    payload["series"] = series.describe()
    _emit_json(payload, args.out)
    return EXIT_OK


def cmd_region(args) -> int:
    bits = _resolve_bits(args)
    with workprec_bits(bits):
        if args.domain == "log":
            domain = LogDomain(args.a, args.k)
        else:
            domain = QuadDomain(args.C, args.a)
        rows = boundary_rows(domain, (args.ymin, args.ymax), args.count)
        table = [(mpmath.nstr(y, 17), mpmath.nstr(x, 17)) for y, x in rows]
    _emit_csv(("y", "x_boundary"), table, args.out)
    return EXIT_OK


def cmd_bench_cancel(args) -> int:
    bits = _resolve_bits(args)
    settings = get_settings()
    k = None if args.naive_only else (settings.summation.k if args.k is None else args.k)
    a = settings.summation.a if args.a is None else args.a
    precisions = parse_precisions(args.precisions)
    with workprec_bits(bits):
        series = load_series_file(args.file)
        report = compare_methods(series, parse_w(args.w), precisions, k=k, a=a, n_max=args.nmax,
                                 tol=settings.dipp.tol)
        table = [(row["method"], row["bits"], mpmath.nstr(row["relative_error"], 6),
                  f"{row['digits']:.2f}", str(row["converged"]).lower())
                 for row in report["rows"]]
    _emit_csv(("method", "bits", "relative_error", "digits", "converged"), table, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="irrsum", description="Summation of irrational exponential series")
    parser.add_argument("--verbose", "-v", action="store_true", help="Enable debug logging")
    parser.add_argument("--config", "-c", type=str, help="Path to configuration file")
    parser.add_argument("--prec", type=int, help="Working precision in bits (overrides IRRSUM_PRECISION)")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sum = sub.add_parser("sum", help="Evaluate a series at one point")
    p_sum.add_argument("file", help="Series JSON file")
    p_sum.add_argument("--w", required=True, help="Evaluation point as 're,im' or a real number")
    p_sum.add_argument("--method", choices=["dipp", "packages", "naive"], default="dipp")
    p_sum.add_argument("--a", type=float, help="Boundedness level of H_{a,k}")
    p_sum.add_argument("--k", type=float, help="Slope of the admissible sequence")
    p_sum.add_argument("--nmax", type=int, help="Last window")
    p_sum.add_argument("--tol", type=float, help="Convergence tolerance")
    p_sum.add_argument("--adaptive", action="store_true", help="Double precision until the value settles")
    p_sum.add_argument("--prec", type=int, default=argparse.SUPPRESS, help="Working precision in bits")
    p_sum.add_argument("--out", help="Write JSON here instead of stdout")
    p_sum.set_defaults(handler=cmd_sum)

    p_pack = sub.add_parser("packages", help="Decompose a series into Vandermonde packages")
    p_pack.add_argument("file", help="Series JSON file")
    p_pack.add_argument("--a", type=float)
    p_pack.add_argument("--k", type=float)
    p_pack.add_argument("--eps", type=float, help="Cluster spread for border atoms")
    p_pack.add_argument("--nmax", type=int)
    p_pack.add_argument("--verify-bounds", action="store_true", help="Check the coefficient bounds per window")
    p_pack.add_argument("--prec", type=int, default=argparse.SUPPRESS, help="Working precision in bits")
    p_pack.add_argument("--out", help="Write JSON here instead of stdout")
    p_pack.set_defaults(handler=cmd_packages)

    p_region = sub.add_parser("region", help="Sample the boundary of a neighborhood of -infinity")
    p_region.add_argument("--domain", choices=["log", "quad"], default="log")
    p_region.add_argument("--a", type=float, default=0.0)
    p_region.add_argument("--k", type=float, default=1.0, help="Slope of H_{a,k}")
    p_region.add_argument("--C", type=float, default=1.0, help="Constant of Omega_C")
    p_region.add_argument("--ymin", type=float, default=-10.0)
    p_region.add_argument("--ymax", type=float, default=10.0)
    p_region.add_argument("--count", type=int, default=101)
    p_region.add_argument("--prec", type=int, default=argparse.SUPPRESS, help="Working precision in bits")
    p_region.add_argument("--out", help="Write CSV here instead of stdout")
    p_region.set_defaults(handler=cmd_region)

    p_bench = sub.add_parser("bench-cancel", help="Relative errors of each method by precision")
    p_bench.add_argument("file", help="Series JSON file")
    p_bench.add_argument("--w", required=True)
    p_bench.add_argument("--precisions", default="53,128,256")
    p_bench.add_argument("--k", type=float, help="Slope for DIPP and packages (default summation.k)")
    p_bench.add_argument("--naive-only", action="store_true", help="Run naive summation only")
    p_bench.add_argument("--a", type=float)
    p_bench.add_argument("--nmax", type=int)
    p_bench.add_argument("--prec", type=int, default=argparse.SUPPRESS, help="Working precision in bits")
    p_bench.add_argument("--out", help="Write CSV here instead of stdout")
    p_bench.set_defaults(handler=cmd_bench_cancel)
    return parser


def _configure_logging(verbose: bool):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_INPUT_ERROR

    verbose = args.verbose or os.getenv('VERBOSE', '').lower() in ('true', '1', 'yes')
    _configure_logging(verbose)

    try:
        if args.config:
            reload_settings(args.config)
        return args.handler(args)
    except IrrsumError as e:
        logger.error("%s", e)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except OSError as e:
        logger.error("I/O failure: %s", e)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
