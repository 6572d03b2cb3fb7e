"""Print the decomposition of the complement of {0} in a window, with separation certificates."""
import argparse

from whitney.closedset import point_set
from whitney.cubes import Decomposition, sqrt_n


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--half-width", type=int, default=64)
    ap.add_argument("--kmin", type=int, default=-6)
    ap.add_argument("--kmax", type=int, default=8)
    args = ap.parse_args()
    F = point_set(0)
    D = Decomposition(F)
    w = args.half_width
    slo, shi = sqrt_n(1)
    cubes = sorted(D.enum_region(([-w], [w]), args.kmin, args.kmax), key=lambda Q: Q.lo()[0])
    for Q in cubes:
        d_lo, d_hi = F.box_dist_bounds(Q.lo(), Q.hi())
        ok = d_lo > (shi * Q.edge).shift(-1) and d_hi < slo * Q.edge * 5
        print(f"level {Q.level:>3}  [{Q.lo()[0].to_decimal()}, {Q.hi()[0].to_decimal()}]  separated: {ok}")
    print(f"{len(cubes)} cubes")


if __name__ == "__main__":
    main()
