"""Central-difference error of the extension at points near cube boundaries.

For each step 2**-e prints the error and the error scaled by 4**e; a constant scaled
column means the extension is smooth there and the error is the usual O(h**2) term.
"""
from whitney.checks import default_jets
from whitney.exact import CPoint, parse_dyadic, two_pow
from whitney.extend import Extender

CASES = [
    ("x^3 on [-2,-1]u[1,2]", 0, ("0.52635991573333740234375",), (0,), 0),
    ("x^3 on [-2,-1]u[1,2]", 0, ("0.52635991573333740234375",), (1,), 0),
    ("sin(x+y) on the unit disc", 2, ("-0.341233789920806884765625", "1.97272241115570068359375"), (0, 0), 1),
]


def main():
    jets = default_jets()
    for label, which, point, kbar, axis in CASES:
        ext = Extender(jets[which])
        x = tuple(parse_dyadic(v) for v in point)
        up = tuple(k + (j == axis) for j, k in enumerate(kbar))
        d = ext.evaluate(CPoint(x), up, 40).value.to_fraction()
        print(f"{label}: derivative {up} along axis {axis} = {float(d):.6g}")
        for e in range(8, 20, 2):
            h = two_pow(-e)
            xp = tuple(v + h if j == axis else v for j, v in enumerate(x))
            xm = tuple(v - h if j == axis else v for j, v in enumerate(x))
            fd = (ext.evaluate(CPoint(xp), kbar, 40).value - ext.evaluate(CPoint(xm), kbar, 40).value).to_fraction()
            err = fd / (2 * h.to_fraction()) - d
            print(f"  h = 2^-{e:<2}  error {float(err):+.4e}  error*4^e {float(err) * 4**e:+.5e}")


if __name__ == "__main__":
    main()
