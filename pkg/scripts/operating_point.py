"""Detection rate at one operating point, with the Gaussian prediction from the CRLB.

Usage: python scripts/operating_point.py --shots 17783 --lam 4 --delta 0.01 0.005 [--trials 5000]
Offsets are in units of pi.
"""
import argparse
import math
from statistics import NormalDist

from dcqd.estimation import crlb_theta
from dcqd.inference import tail_probability
from dcqd.montecarlo import ThetaPipeline, run_trials


def gaussian_pd(delta: float, n: int, lam: float) -> float:
    # W ~ noncentral chi^2 with one degree of freedom when the estimate is Gaussian at the bound
    sd = math.sqrt(crlb_theta(math.pi + delta, n, "rotated"))
    z = math.sqrt(lam) * math.sqrt(crlb_theta(math.pi, n, "rotated")) / sd
    mu = delta / sd
    nd = NormalDist()
    return 1 - (nd.cdf(z - mu) - nd.cdf(-z - mu))


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--shots", type=int, default=17783)
    ap.add_argument("--lam", type=float, default=4.0)
    ap.add_argument("--delta", type=float, nargs="+", default=[0.01, 0.005])
    ap.add_argument("--trials", type=int, default=5000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=4)
    args = ap.parse_args()
    print("delta/pi  pD(sim)   pD(gauss)")
    for d in args.delta:
        w = run_trials(ThetaPipeline(math.pi + d * math.pi, args.shots), args.trials, args.seed, args.workers)["W"]
        pd = float(tail_probability(w, [args.lam])[0])
        print(f"{d:<9g} {pd:.4f}    {gaussian_pd(d * math.pi, args.shots, args.lam):.4f}")
