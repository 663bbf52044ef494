"""Divided differences of the special curve through x_n = n^-n on dyadic grids.

Prints the maximum order-k divided difference on {0} u {2^-j : j <= k_max}
for each grid, with the ratio to the coarsest grid.
"""
import argparse

from prolim.curves import dyadic_divided_differences, special_curve
from prolim.spaces import Euclidean


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--order", type=int, default=3)
    ap.add_argument("--kmax", type=int, default=20)
    args = ap.parse_args()
    c = special_curve(lambda n: float(n) ** -n, 0.0, Euclidean(1))
    dd = dyadic_divided_differences(c, args.order, args.kmax)
    print("k,max_dd,ratio")
    for k, v in enumerate(dd, args.order - 1):
        print(f"{k},{v:.6e},{v / dd[0]:.4f}")


if __name__ == "__main__":
    main()
