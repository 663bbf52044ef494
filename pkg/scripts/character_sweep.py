"""Sweep character coherence and the series function across primes and levels.

Prints a CSV with, per prime and level pair, the worst deviation of
(chi_m)^(p^(m-n)) from chi_n in exact-phase and in float-power arithmetic.
"""
import argparse
from fractions import Fraction

import numpy as np

from prolim.padic import PadicInt
from prolim.solenoid import canonicalize, chi_n, chi_phase


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--primes", default="2,3,5")
    ap.add_argument("--levels", type=int, default=10)
    ap.add_argument("--points", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    print("p,n,m,exact_dev,float_dev")
    for p in (int(t) for t in args.primes.split(",")):
        pts = []
        for _ in range(args.points):
            digits = [int(d) for d in rng.integers(0, p, 24)]
            x = PadicInt.from_digits(digits, [int(rng.integers(p))], p)
            pts.append(canonicalize(Fraction(int(rng.integers(10 ** 9)), 10 ** 9), x))
        for m in range(2, args.levels + 1):
            for n in range(1, m):
                exact = flt = 0.0
                for pt in pts:
                    target = chi_n(pt, n)
                    q = chi_phase(pt, m) * p ** (m - n) % 1
                    exact = max(exact, abs(np.exp(2j * np.pi * float(q)) - target))
                    flt = max(flt, abs(chi_n(pt, m) ** (p ** (m - n)) - target))
                print(f"{p},{n},{m},{exact:.3e},{flt:.3e}")


if __name__ == "__main__":
    main()
