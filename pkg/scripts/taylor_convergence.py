"""Maturity derivatives of the averaged a(t) under grid refinement.

Solves the A-equation on successively doubled grids, averages against the
stationary density and fits a polynomial near maturity. The estimates are
printed next to the exact route-2 values from the recurrence engine.

    python3 scripts/taylor_convergence.py --levels 4
"""

import argparse
import time

from tsq.averaging import average_a, maturity_derivatives
from tsq.density import build_stationary_density
from tsq.model import LinearDrift, TwoFactorModel
from tsq.no1f import MomentSet, route2_taylor
from tsq.pricer2f import solve_A_pde


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--levels", type=int, default=4)
    ap.add_argument("--base-ny", type=int, default=100)
    ap.add_argument("--base-nt", type=int, default=500)
    args = ap.parse_args()

    m = TwoFactorModel.build(1.0, 0.05, 0.5, 5.0, 0.2, 0.1, LinearDrift(2.0, 0.04))
    f = build_stationary_density(m.drift, m.omega)
    exact = route2_taylor(m, MomentSet.from_density(f)).check
    print("n_y    n_t    a'(T)          a''(T)         a'''(T)        a''''(T)       seconds")
    print("exact         " + "  ".join(f"{v:+.10f}" for v in exact))
    for level in range(args.levels):
        n_y, n_t = args.base_ny * 2**level, args.base_nt * 2**level
        t0 = time.perf_counter()
        avg = average_a(solve_A_pde(m, n_y=n_y, n_t=n_t, density=f), f)
        d = maturity_derivatives(avg)
        print(f"{n_y:<6d} {n_t:<6d} " + "  ".join(f"{v:+.10f}" for v in d) + f"  {time.perf_counter() - t0:.2f}")


if __name__ == "__main__":
    main()
