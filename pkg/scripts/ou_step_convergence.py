"""Recursion residual of simulated OU paths as the step shrinks.

Prints one row per step: dt, residual, ratio to the previous residual.
"""

import argparse
import math

from apstat.levy import LevyTriplet
from apstat.simulate import Grid, coarsen, ou_ensemble, ou_from_stream, recursion_residual
from apstat.trig import TrigPolynomial

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--levels", type=int, default=4)
    ap.add_argument("--dt", type=float, default=1e-3, help="finest step")
    args = ap.parse_args()
    mu = TrigPolynomial(-1.0, ((0.5, 2 * math.pi, 0.0),))
    n = 2 ** (args.levels - 1) * 1000
    fine = ou_ensemble(mu, LevyTriplet.gaussian(1.0), Grid(0.0, args.dt, n), args.seed,
                       keep_increments=True)
    prev = None
    print("dt,residual,ratio")
    for lvl in reversed(range(args.levels)):
        s = coarsen(fine.increments, 2 ** lvl)
        x = ou_from_stream(mu, s, fine.values[0, 0])
        r = recursion_residual(x, mu, s)
        print(f"{s.grid.dt:.6g},{r:.6g},{'' if prev is None else f'{prev / r:.3f}'}")
        prev = r
