"""Command-line interface: ``whitney {decompose,eval,grid,bounds,check}``.

Exit codes: 0 success, 1 failed invariant suite, 2 usage or input error,
3 empty set.  Diagnostics go to stderr; results go to stdout or ``--out``.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path

from .bump import PreconditionError, bprime, deriv_bounds
from .checks import SUITES, check_set_consistency, run_suite
from .closedset import EmptySetError, SetSpecError, TotalClosedSet, make_set
from .config import FORMATS, RunConfig
from .cubes import decomposition_for, sqrt_n
from .exact import CPoint, CReal, Dyadic, parse_rational
from .extend import jet_make, multi_indices, wetm_eval_detail

log = logging.getLogger("whitney")

MAX_RESOLUTION = 2 ** 12


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument parsing helpers

def _load_json(arg: str, what: str):
    text = arg
    if not arg.lstrip().startswith(("{", "[")):
        try:
            text = Path(arg).read_text()
        except OSError as exc:
            raise UsageError(f"cannot read {what} file {arg}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed {what} JSON: {exc}") from None


def _rationals(s: str, what: str) -> list[Fraction]:
    try:
        return [parse_rational(t) for t in s.split(",") if t.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"bad {what} {s!r}: {exc}") from None


def _region(s: str, n: int):
    if ":" not in s:
        raise UsageError("region must look like 'lo1,..,lon:hi1,..,hin'")
    a, b = s.split(":", 1)
    lo, hi = _rationals(a, "region"), _rationals(b, "region")
    if len(lo) == 1 and n > 1:
        lo, hi = lo * n, hi * n
    if len(lo) != n or len(hi) != n:
        raise UsageError(f"region has dimension {len(lo)}, set has dimension {n}")
    if any(x > y for x, y in zip(lo, hi)):
        raise UsageError("region lower corner exceeds upper corner")
    return lo, hi


def _levels(s: str) -> tuple[int, int]:
    try:
        a, b = (int(t) for t in s.replace(",", ":").split(":"))
    except ValueError:
        raise UsageError("levels must look like 'kmin:kmax'") from None
    if a > b:
        raise UsageError("kmin exceeds kmax")
    return a, b


def _deriv(s: str | None, n: int) -> tuple[int, ...]:
    if s is None:
        return (0,) * n
    try:
        k = tuple(int(t) for t in s.split(","))
    except ValueError:
        raise UsageError(f"bad multi-index {s!r}") from None
    if len(k) != n or any(v < 0 for v in k):
        raise UsageError(f"multi-index {s!r} does not fit dimension {n}")
    return k


def _dyadic_box(lo, hi):
    """Smallest dyadic box containing the rational box (decomposition needs dyadic corners)."""
    def down(q: Fraction) -> Dyadic:
        return Dyadic.coerce(q) if _is_dyadic(q) else Dyadic(q.numerator * 2 ** 64 // q.denominator, -64)

    def up(q: Fraction) -> Dyadic:
        return Dyadic.coerce(q) if _is_dyadic(q) else Dyadic(-((-q.numerator * 2 ** 64) // q.denominator), -64)

    return tuple(down(v) for v in lo), tuple(up(v) for v in hi)


def _is_dyadic(q: Fraction) -> bool:
    d = q.denominator
    return d & (d - 1) == 0


def _point(q: Fraction):
    return Dyadic.coerce(q) if _is_dyadic(q) else CReal.from_fraction(q)


def _fmt_number(q: Fraction) -> str:
    return Dyadic.coerce(q).to_decimal() if _is_dyadic(q) else f"{q.numerator}/{q.denominator}"


def _dyadic_json(v: Dyadic) -> dict:
    return {"mantissa": v.man, "exponent": v.exp}


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_set(cfg_args) -> TotalClosedSet:
    if not cfg_args.set:
        raise UsageError("--set is required")
    return make_set(_load_json(cfg_args.set, "set"))


# ---------------------------------------------------------------------------
# commands

def cmd_decompose(args, cfg: RunConfig) -> int:
    F = _load_set(args)
    if not args.region:
        raise UsageError("--region is required (no implicit window)")
    lo, hi = _dyadic_box(*_region(args.region, F.dim))
    kmin, kmax = _levels(args.levels or "-2:4")
    D = decomposition_for(F, cfg.eps)
    cubes = D.enum_region((lo, hi), kmin, kmax)
    slo, shi = sqrt_n(F.dim)
    rows = []
    for Q in cubes:
        d_lo, d_hi = F.box_dist_bounds(Q.lo(), Q.hi()) if F.closed_form else (None, None)
        verdict = None
        if d_lo is not None:
            verdict = bool(d_lo > (shi * Q.edge).shift(-1) and d_hi < slo * Q.edge * 5)
        rows.append((Q, d_lo, d_hi, verdict))
    if cfg.fmt == "json":
        payload = {
            "dim": F.dim, "levels": [kmin, kmax], "eps": str(cfg.eps),
            "cubes": [dict(Q.to_json(), dist_lower=str(a) if a is not None else None,
                           dist_upper=str(b) if b is not None else None, separation_ok=v)
                      for Q, a, b, v in rows],
        }
        _emit(json.dumps(payload, indent=1) + "\n", args.out)
    elif cfg.fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["level"] + [f"corner{c + 1}" for c in range(F.dim)] + ["dist_lower", "dist_upper", "separation_ok"])
        for Q, a, b, v in rows:
            w.writerow([Q.level, *Q.corner, a.to_decimal() if a is not None else "", b.to_decimal() if b is not None else "", v])
        _emit(buf.getvalue(), args.out)
    else:
        lines = [f"{str(Q):<40} d in [{a.to_decimal() if a is not None else '?'}, {b.to_decimal() if b is not None else '?'}]  {v}"
                 for Q, a, b, v in rows]
        _emit("\n".join(lines) + ("\n" if lines else ""), args.out)
    log.info("%d cubes", len(cubes))
    return 0


def _jet(args, F):
    if not args.jet:
        raise UsageError("--jet is required")
    try:
        return jet_make(_load_json(args.jet, "jet"), F)
    except (ValueError, TypeError, KeyError) as exc:
        raise UsageError(f"bad jet: {exc}") from None


def _evaluate(jet, x, k, i, eps):
    try:
        return wetm_eval_detail(jet, x, k, i, eps)
    except PreconditionError as exc:
        raise UsageError(str(exc)) from None


def cmd_eval(args, cfg: RunConfig) -> int:
    F = _load_set(args)
    jet = _jet(args, F)
    if not args.point:
        raise UsageError("--point is required")
    pt = _rationals(args.point, "point")
    if len(pt) != F.dim:
        raise UsageError(f"point has dimension {len(pt)}, set has dimension {F.dim}")
    k = _deriv(args.deriv, F.dim)
    if sum(k) > jet.order:
        raise UsageError(f"derivative order {sum(k)} exceeds jet order {jet.order}")
    r = _evaluate(jet, CPoint([_point(q) for q in pt]), k, cfg.precision, cfg.eps)
    if cfg.fmt == "json":
        out = {"value": str(r.value), **_dyadic_json(r.value), "decimal": r.value.to_decimal(),
               "precision": r.precision, "branch": r.branch}
        _emit(json.dumps(out) + "\n", args.out)
    elif cfg.fmt == "csv":
        _emit("value,precision,branch\n" + f"{r.value.to_decimal()},{r.precision},{r.branch}\n", args.out)
    else:
        _emit(f"{r.value.to_decimal()}  (precision 2^-{r.precision}, branch {r.branch})\n", args.out)
    return 0


def cmd_grid(args, cfg: RunConfig) -> int:
    F = _load_set(args)
    jet = _jet(args, F)
    if not args.region:
        raise UsageError("--region is required")
    lo, hi = _region(args.region, F.dim)
    N = args.resolution
    if N < 1 or N > MAX_RESOLUTION:
        raise UsageError(f"resolution must be between 1 and {MAX_RESOLUTION} per axis")
    k = _deriv(args.deriv, F.dim)
    if sum(k) > jet.order:
        raise UsageError(f"derivative order {sum(k)} exceeds jet order {jet.order}")
    axes = [[a if N == 1 else a + (b - a) * j / (N - 1) for j in range(N)] for a, b in zip(lo, hi)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x{c + 1}" for c in range(F.dim)] + ["value", "branch"])
    # row-major: the first coordinate varies slowest
    for coords in itertools.product(*axes):
        r = _evaluate(jet, CPoint([_point(q) for q in coords]), k, cfg.precision, cfg.eps)
        w.writerow([_fmt_number(q) for q in coords] + [r.value.to_decimal(), r.branch])
    _emit(buf.getvalue(), args.out)
    return 0


def cmd_bounds(args, cfg: RunConfig) -> int:
    order = args.order
    if order < 0 or order > 12:
        raise UsageError("--order must be between 0 and 12")
    n = args.dim
    t = deriv_bounds(order)
    rows = [{"k": k, "A": t.A[k], "H": t.H[k], "B": t.B[k]} for k in range(order + 1)]
    bp = [{"index": list(l), "Bprime": str(bprime(l))} for l in multi_indices(n, min(order, 4 if n > 1 else order))]
    if cfg.fmt == "json":
        _emit(json.dumps({"scalar": rows, "multi": bp}, indent=1) + "\n", args.out)
    elif cfg.fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "A", "H", "B"])
        for r in rows:
            w.writerow([r["k"], r["A"], r["H"], r["B"]])
        w.writerow([])
        w.writerow(["index", "Bprime"])
        for r in bp:
            w.writerow([" ".join(map(str, r["index"])), r["Bprime"]])
        _emit(buf.getvalue(), args.out)
    else:
        width = max(len(str(r["B"])) for r in rows) + 2
        lines = [f"{'k':>3} {'A':>{width}} {'H':>{width}} {'B':>{width}}"]
        lines += [f"{r['k']:>3} {r['A']:>{width}} {r['H']:>{width}} {r['B']:>{width}}" for r in rows]
        lines.append("")
        lines += [f"{str(tuple(r['index'])):<16} B' = {Dyadic.coerce(parse_rational(r['Bprime'])).to_decimal()}" for r in bp]
        _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_check(args, cfg: RunConfig) -> int:
    sets = [make_set(_load_json(args.set, "set"))] if args.set else None
    jets = [_jet(args, sets[0])] if args.jet and sets else None
    results = []
    if sets:
        results += check_set_consistency(sets[0], suite="set")
    results += run_suite(args.suite, cfg.seed, sets, jets, cfg.eps)
    if cfg.fmt == "json":
        text = "".join(json.dumps(r.to_json()) + "\n" for r in results)
    else:
        text = "".join(f"{'PASS' if r.passed else 'FAIL'}  {r.suite:<10} {r.name}  ({r.checked} checked{'; ' + r.detail if r.detail else ''})\n"
                       for r in results)
    _emit(text, args.out)
    failed = [r for r in results if not r.passed]
    for r in failed:
        log.error("invariant failed: %s / %s: %s", r.suite, r.name, r.counterexamples[:1])
    return 0 if not failed else 1


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="whitney", description="Certified Whitney extensions on computable closed sets.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--set", help="set JSON (file path or inline)")
    common.add_argument("--eps", default="1/8", help="cube enlargement (dyadic, < 1/5)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--precision", type=int, default=20, help="output accuracy 2^-precision")
    common.add_argument("--format", choices=FORMATS, default="json")
    common.add_argument("--out", help="output file (default stdout)")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("decompose", parents=[common], help="list decomposition cubes in a region")
    d.add_argument("--region", help="lo1,..:hi1,.. (use --region=-1:1 for negative numbers)")
    d.add_argument("--levels", help="kmin:kmax")

    for name, helptext in (("eval", "evaluate the extension at a point"), ("grid", "evaluate on a grid, CSV output")):
        e = sub.add_parser(name, parents=[common], help=helptext)
        e.add_argument("--jet", help="jet JSON (file path or inline)")
        e.add_argument("--deriv", help="multi-index, e.g. 1,0")
        if name == "eval":
            e.add_argument("--point", help="comma-separated rationals")
        else:
            e.add_argument("--region", help="lo1,..:hi1,..")
            e.add_argument("--resolution", type=int, default=33, help="points per axis")

    b = sub.add_parser("bounds", parents=[common], help="derivative bound tables")
    b.add_argument("--order", type=int, default=6)
    b.add_argument("--dim", type=int, default=1)

    c = sub.add_parser("check", parents=[common], help="run sampled invariant suites")
    c.add_argument("--suite", choices=SUITES, default="all")
    c.add_argument("--jet", help="jet JSON used by the extend suite")
    return p


COMMANDS = {"decompose": cmd_decompose, "eval": cmd_eval, "grid": cmd_grid, "bounds": cmd_bounds, "check": cmd_check}


def main(argv=None) -> int:
    level = os.environ.get("WHITNEY_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "check" and args.format == "csv":
        args.format = "text"
    try:
        cfg = RunConfig(eps=args.eps, seed=args.seed, precision=args.precision, fmt=args.format)
        return COMMANDS[args.command](args, cfg)
    except EmptySetError as exc:
        print(f"whitney: {exc}", file=sys.stderr)
        return 3
    except (UsageError, SetSpecError, ValueError) as exc:
        print(f"whitney: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
