"""Evaluate an extension and one derivative on a 1-D grid and write CSV.

Default: the jet of x**3 (order 2) on [-2, -1] u [1, 2], sampled across the gap.
"""
import argparse
import csv
import sys
from fractions import Fraction

from whitney.checks import default_jets
from whitney.exact import CPoint
from whitney.extend import Extender


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lo", default="-5/2")
    ap.add_argument("--hi", default="5/2")
    ap.add_argument("--points", type=int, default=81)
    ap.add_argument("--precision", type=int, default=20)
    ap.add_argument("--out", help="CSV path (default stdout)")
    args = ap.parse_args()
    J = default_jets()[0]
    ext = Extender(J)
    lo, hi = Fraction(args.lo), Fraction(args.hi)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["x", "g", "g1", "g2", "branch"])
    for j in range(args.points):
        # dyadic abscissae keep every value exactly representable
        x = lo + (hi - lo) * j / (args.points - 1)
        x = Fraction(round(x * 2**12), 2**12)
        X = CPoint((x,))
        rs = [ext.evaluate(X, (k,), args.precision) for k in range(3)]
        w.writerow([float(x)] + [r.value.to_decimal() for r in rs] + [rs[0].branch])
    if args.out:
        out.close()


if __name__ == "__main__":
    main()
