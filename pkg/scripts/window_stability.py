"""Certificate of a quasi-periodic OU process on a window and on its double.

The relative change of the largest gap between found shifts is the practical
check that the window is long enough.
"""

import argparse
import math

from apstat.aperiodicity import IntegralProcess, certify_ap
from apstat.kernels import OUKernel
from apstat.levy import LevyTriplet
from apstat.trig import TrigPolynomial

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eps", type=float, default=0.05)
    ap.add_argument("--window", type=float, default=120.0)
    ap.add_argument("--n-t", type=int, default=1024)
    args = ap.parse_args()
    mu = TrigPolynomial(-1.0, ((0.3, 1.0, 0.0), (0.3, math.sqrt(2), 0.0)))
    proc = IntegralProcess(OUKernel(mu), LevyTriplet.gaussian(1.0))
    gaps = []
    for w in (args.window, 2 * args.window):
        cert = certify_ap(proc, [args.eps], (0.0, w), n_t=args.n_t, K=6, gamma_t_points=64,
                          z_per_axis=32)
        prof = cert.profiles[args.eps]
        reps = prof.representatives()
        gaps.append(prof.max_gap)
        print(f"window {w:g}: {reps.size} clusters, max_gap {prof.max_gap:.4f}")
    print(f"relative change {abs(gaps[1] - gaps[0]) / gaps[0]:.2%}")
