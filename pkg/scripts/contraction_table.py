"""Slab contraction t_j for the linear bound and for each potential's envelope."""

import argparse
import math

from stripwave.comparison import flat_slab, iterate_tj
from stripwave.potential import build_f, compute_g, linear_bound, make_potential


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--h", type=float, default=1 / 32)
    ap.add_argument("--j-max", type=int, default=4)
    args = ap.parse_args()

    slab = flat_slab(h=args.h)
    seq = iterate_tj(slab, linear_bound(1.0), 1.0, args.j_max)
    print(f"linear f, c^2=1: theta={seq.theta:.6f} (1/cosh 1={1 / math.cosh(1):.6f}) "
          f"defect={seq.theta_defect:.1e}")
    print("  t_j:", " ".join(f"{t:.6f}" for t in seq.t))
    for family in ("scalar_quartic", "product_well"):
        P = make_potential(family)
        f = build_f(compute_g(P))
        t0 = P.r0 ** 2
        seq = iterate_tj(slab, f, t0, args.j_max)
        print(f"{family} envelope, t0=r0^2: strictly decreasing={seq.strictly_decreasing}")
        print("  t_j:", " ".join(f"{t:.6f}" for t in seq.t))


if __name__ == "__main__":
    main()
