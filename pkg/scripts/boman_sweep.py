"""Run the smoothness-probe harness on torus products of growing size.

For each factor count, probes a fixed cylindrical function and a planted
step function along random structure curves and prints pass counts.
"""
import argparse
import math

from prolim.curves import boman_harness
from prolim.cylinder import cyl_from_expression
from prolim.family import torus_family


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--factors", default="3,5,10,20")
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--order", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    print("factors,cyl_pass,cyl_max_ratio,step_fail")
    for n in (int(t) for t in args.factors.split(",")):
        fam = torus_family(n)
        f = cyl_from_expression(fam, frozenset({1, 2, 3}) & frozenset(range(1, n + 1)),
                                "cos(x1)*sin(x2) + 0.5*cos(x1 + 2*x3)" if n >= 3 else "cos(x1)")
        good = boman_harness(fam, f, args.trials, args.seed, args.order)
        bad = boman_harness(fam, lambda x: float((x[0] % (2 * math.pi)) < math.pi),
                            args.trials, args.seed, args.order)
        print(f"{n},{good.trials - good.failures},{good.max_ratio:.3e},{bad.failures}")


if __name__ == "__main__":
    main()
