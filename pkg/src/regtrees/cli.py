"""Command-line interface.

Exit codes: 0 success, 2 contract violation (parity, ranges, bad flags),
3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from fractions import Fraction
from typing import List, Optional, Sequence

import mpmath

from . import __version__
from .exactnum import DEFAULT_PRECISION, format_rational
from .pairing import GENERATOR_ID

EXIT_OK = 0
EXIT_CONTRACT = 2
EXIT_VERIFY = 3

TABLE_DEGREES = (3, 4, 5, 6, 100)


class ContractError(Exception):
    pass


def _meta(args, **extra) -> dict:
    out = {
        "version": __version__,
        "precision": args.precision,
        "command": args.command,
        "seed": getattr(args, "seed", None),
        "generator": GENERATOR_ID,
    }
    out.update(extra)
    return out


def _emit_json(obj, out=None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_csv(header: Sequence[str], rows: List[Sequence], out=None, meta: Optional[dict] = None) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
        if meta is not None:
            _emit_json(meta, out + ".json")
    else:
        sys.stdout.write(buf.getvalue())


def _parity_ok(d: int, n: int) -> bool:
    return (d * n) % 2 == 0


def _fmt(x, digits=12) -> str:
    return mpmath.nstr(x, digits, strip_zeros=False)


def _valid_n(d: int, n_min: int, n_max: int) -> List[int]:
    return [n for n in range(n_min, n_max + 1) if _parity_ok(d, n)]


# -- commands ------------------------------------------------------------------

def cmd_expectation(args) -> int:
    from .moments import check_dn, expected_trees_asymptotic, expected_trees_exact

    check_dn(args.d, args.n)
    result = {"meta": _meta(args), "d": args.d, "n": args.n}
    if args.asymptotic:
        lv = expected_trees_asymptotic(args.d, args.n, args.precision)
        result.update(mode="asymptotic", log=_fmt(lv.log, 20), value=str(lv))
    else:
        ey = expected_trees_exact(args.d, args.n)
        result.update(mode="exact", exact=f"{ey.numerator}/{ey.denominator}", decimal=format_rational(ey, args.digits))
    _emit_json(result, args.out)
    return EXIT_OK


def cmd_table(args) -> int:
    from .moments import ratio_p

    rows = []
    for d in args.d_list:
        if _parity_ok(d, args.n):
            rows.append([d, args.n, mpmath.nstr(ratio_p(d, args.n, args.precision), args.digits, strip_zeros=False)])
        else:
            rows.append([d, args.n, "n/a (parity)"])
    if args.format == "json":
        _emit_json({"meta": _meta(args), "rows": [{"d": r[0], "n": r[1], "p": r[2]} for r in rows]}, args.out)
    else:
        _emit_csv(["d", "n", "p"], rows, args.out, _meta(args))
    return EXIT_OK


def figure_rows(d_list: Sequence[int], n_max: int, precision: int, n_min: int = 3, digits: int = 12):
    from .moments import ratio_p

    rows = []
    for d in d_list:
        for n in _valid_n(d, n_min, n_max):
            rows.append([d, n, mpmath.nstr(ratio_p(d, n, precision), digits, strip_zeros=False)])
    return rows


def render_svg(rows, width: int = 640, height: int = 400) -> str:
    """Minimal polyline plot of p against n, one line per degree."""
    pad = 40
    if not rows:
        return f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}"></svg>\n'
    ns = [r[1] for r in rows]
    ps = [float(r[2]) for r in rows]
    n_lo, n_hi = min(ns), max(ns)
    p_lo, p_hi = min(ps), max(ps)
    n_span = max(n_hi - n_lo, 1)
    p_span = max(p_hi - p_lo, 1e-12)
    colors = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"]
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">']
    for k, d in enumerate(dict.fromkeys(r[0] for r in rows)):
        pts = " ".join(
            f"{pad + (n - n_lo) / n_span * (width - 2 * pad):.2f},"
            f"{height - pad - (p - p_lo) / p_span * (height - 2 * pad):.2f}"
            for (dd, n, _), p in zip(rows, ps)
            if dd == d
        )
        color = colors[k % len(colors)]
        parts.append(f'<polyline fill="none" stroke="{color}" points="{pts}"><title>d={d}</title></polyline>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_figure(args) -> int:
    rows = figure_rows(args.d_list, args.n_max, args.precision, args.n_min, args.digits)
    _emit_csv(["d", "n", "p"], rows, args.out, _meta(args, d_list=list(args.d_list), n_max=args.n_max))
    if args.svg:
        with open(args.svg, "w", encoding="utf-8") as fh:
            fh.write(render_svg(rows))
    return EXIT_OK


def cmd_lambda(args) -> int:
    from .moments import janson_constants, lambda_prime_closed, lambda_prime_enumerate, lambda_prime_recurrence, MAX_ENUMERATE_J

    def q(x: Fraction) -> str:
        return f"{x.numerator}/{x.denominator}"

    rows = []
    all_equal = True
    for j in range(1, args.j_max + 1):
        c = janson_constants(args.d, j)
        closed = lambda_prime_closed(args.d, j)
        rec = lambda_prime_recurrence(args.d, j)
        enum = lambda_prime_enumerate(args.d, j) if j <= MAX_ENUMERATE_J else None
        equal = closed == rec == c.lambda_prime and (enum is None or enum == closed)
        all_equal &= equal
        rows.append([j, q(c.lam), q(c.zeta), q(closed), q(rec), "" if enum is None else q(enum), "yes" if equal else "NO"])
    header = ["j", "lambda", "zeta", "lambda_prime_closed", "lambda_prime_recurrence", "lambda_prime_enumerate", "equal"]
    if args.format == "json":
        _emit_json({"meta": _meta(args, d=args.d), "rows": [dict(zip(header, r)) for r in rows]}, args.out)
    else:
        _emit_csv(header, rows, args.out, _meta(args, d=args.d))
    return EXIT_OK if all_equal else EXIT_VERIFY


def cmd_saddle(args) -> int:
    from . import saddle

    beta, theta = saddle.find_stationary_point()
    H = saddle.hessian_at_star()
    gb, gt = saddle.gradient(saddle.BETA_STAR, 0)
    result = {
        "meta": _meta(args),
        "stationary_point": [_fmt(beta, 20), _fmt(theta, 5)],
        "gradient_norm": _fmt(mpmath.sqrt(abs(gb) ** 2 + abs(gt) ** 2), 5),
        "hessian": [[_fmt(x, 15) for x in row] for row in H],
        "phi_star": _fmt(mpmath.re(saddle.phi(saddle.BETA_STAR, 0)), 20),
        "psi_star": _fmt(saddle.psi(saddle.BETA_STAR), 20),
        "gaussian_constant": _fmt(saddle.gaussian_constant(), 20),
        "gaussian_constant_target": _fmt(144 * mpmath.pi / mpmath.sqrt(7), 20),
        "fn": [],
    }
    for n in args.n:
        ex, asy = saddle.fn_exact(n), saddle.fn_asymptotic(n)
        chk = saddle.ey2_asymptotic_check(n)
        result["fn"].append(
            {
                "n": n,
                "log_fn_exact": _fmt(ex.log, 15),
                "log_fn_asymptotic": _fmt(asy.log, 15),
                "ratio": _fmt(mpmath.exp(ex.log - asy.log), 10),
                "ey2_over_literal": _fmt(chk.ey2_ratio, 10),
                "ey2_over_corrected": _fmt(chk.ey2_corrected_ratio, 10),
                "normalized_second_moment": _fmt(chk.normalized_ratio, 10),
            }
        )
    _emit_json(result, args.out)
    return EXIT_OK


def cmd_dist(args) -> int:
    from .montecarlo import empirical_distribution_test

    res = empirical_distribution_test(3, args.n, args.graph_samples, args.w_samples, args.seed, workers=args.workers, j_max=args.j_max)
    _emit_json({"meta": _meta(args), **res.as_dict()}, args.out)
    return EXIT_OK


def cmd_sample(args) -> int:
    from .montecarlo import sample_batch

    batch = sample_batch(args.d, args.n, args.samples, args.seed, m=args.m, workers=args.workers)
    if args.out:
        batch.write_csv(args.out)
        _emit_json({**_meta(args), **batch.meta()}, args.out + ".json")
    else:
        buf = io.StringIO()
        batch.write_csv_stream(buf)
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def run_verify(suite: str) -> dict:
    from .moments import (
        exhaustive_moments,
        expected_trees_exact,
        lambda_prime_closed,
        lambda_prime_enumerate,
        lambda_prime_recurrence,
        second_moment_exact,
    )

    cases = [(3, 4), (4, 3)]
    if suite == "slow":
        cases.append((3, 6))
    checks = []
    for d, n in cases:
        ey, ey2 = exhaustive_moments(d, n)
        checks.append({"check": f"E[Y] d={d} n={n}", "oracle": str(ey), "formula": str(expected_trees_exact(d, n)), "ok": ey == expected_trees_exact(d, n)})
        checks.append({"check": f"E[Y^2] d={d} n={n}", "oracle": str(ey2), "formula": str(second_moment_exact(d, n)), "ok": ey2 == second_moment_exact(d, n)})
    ok = True
    for d in (3, 4, 5, 6):
        for j in range(1, 11):
            ok &= lambda_prime_enumerate(d, j) == lambda_prime_recurrence(d, j) == lambda_prime_closed(d, j)
    checks.append({"check": "lambda' three-way d<=6 j<=10", "ok": ok})
    return {"suite": suite, "checks": checks, "passed": all(c["ok"] for c in checks)}


def cmd_verify(args) -> int:
    report = run_verify(args.suite)
    _emit_json({"meta": _meta(args), **report}, args.out)
    return EXIT_OK if report["passed"] else EXIT_VERIFY


# -- argument handling ------------------------------------------------------------

def _int_list(text: str) -> List[int]:
    return [int(x) for x in text.replace(",", " ").split()]


def build_parser() -> argparse.ArgumentParser:
    env_prec = int(os.environ.get("REGTREES_PRECISION", DEFAULT_PRECISION))
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--precision", type=int, default=env_prec, help="working precision in bits (>= 64)")
    common.add_argument("--out", help="write output to this file instead of stdout")

    p = argparse.ArgumentParser(prog="regtrees", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--config", help="key=value file; command-line flags take precedence")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("expectation", parents=[common], help="E[Y] exactly or asymptotically")
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    mode = s.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true", default=True)
    mode.add_argument("--asymptotic", action="store_true")
    s.add_argument("--digits", type=int, default=30)
    s.set_defaults(func=cmd_expectation)

    s = sub.add_parser("table", parents=[common], help="p_d(n) for several degrees")
    s.add_argument("--n", type=int, default=100)
    s.add_argument("--d-list", type=_int_list, default=list(TABLE_DEGREES))
    s.add_argument("--digits", type=int, default=4)
    s.add_argument("--format", choices=["csv", "json"], default="csv")
    s.set_defaults(func=cmd_table)

    s = sub.add_parser("figure", parents=[common], help="p_d(n) curves as CSV (and SVG)")
    s.add_argument("--n-max", type=int, default=50)
    s.add_argument("--n-min", type=int, default=3)
    s.add_argument("--d-list", type=_int_list, default=list(TABLE_DEGREES))
    s.add_argument("--digits", type=int, default=12)
    s.add_argument("--svg", help="also write a polyline plot here")
    s.set_defaults(func=cmd_figure)

    s = sub.add_parser("lambda", parents=[common], help="short-cycle constants, three ways")
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--j-max", type=int, default=10)
    s.add_argument("--format", choices=["csv", "json"], default="csv")
    s.set_defaults(func=cmd_lambda)

    s = sub.add_parser("saddle", parents=[common], help="cubic saddle-point quantities")
    s.add_argument("--n", type=_int_list, default=[50, 100, 150, 200])
    s.set_defaults(func=cmd_saddle)

    s = sub.add_parser("dist", parents=[common], help="KS test of the cubic limit law")
    s.add_argument("--n", type=int, default=200)
    s.add_argument("--graph-samples", type=int, default=2000)
    s.add_argument("--w-samples", type=int, default=2000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--j-max", type=int, default=None)
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_dist)

    s = sub.add_parser("sample", parents=[common], help="raw pairing-model samples as CSV")
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--samples", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--m", type=int, default=2, help="record cycle counts X_1..X_m")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("verify", parents=[common], help="exhaustive-enumeration oracles")
    s.add_argument("--suite", choices=["small", "slow"], default="small")
    s.set_defaults(func=cmd_verify)
    return p


def read_config(path: str) -> List[str]:
    """Turn ``key=value`` lines into flags (``true`` becomes a bare switch)."""
    flags = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ContractError(f"{path}:{lineno}: expected key=value")
            key, value = (x.strip() for x in line.split("=", 1))
            flag = "--" + key.replace("_", "-")
            if value.lower() in ("true", "yes", "on"):
                flags.append(flag)
            elif value.lower() not in ("false", "no", "off"):
                flags.extend([flag, value])
    return flags


def _splice_config(argv: List[str]) -> List[str]:
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        raise ContractError("--config needs a path")
    path = argv[i + 1]
    rest = argv[:i] + argv[i + 2 :]
    cmd = next((k for k, a in enumerate(rest) if not a.startswith("-")), None)
    if cmd is None:
        raise ContractError("no command given")
    # config flags go first so explicit flags (parsed later) override them
    return rest[: cmd + 1] + read_config(path) + rest[cmd + 1 :]


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _splice_config(argv)
        parser = build_parser()
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return EXIT_OK if exc.code == 0 else EXIT_CONTRACT
        if args.precision < 64:
            raise ContractError("precision must be at least 64 bits")
        return args.func(args)
    except (ContractError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT


if __name__ == "__main__":
    sys.exit(main())
