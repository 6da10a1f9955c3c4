"""Monte Carlo diversity slopes against the analytic lower bounds.

Runs each deadline over an SNR grid and prints the fitted slope next to the
bound it should approach. Defaults mirror ``configs/sweep_siso.toml``.

    python scripts/slope_sweep.py --trials 1000000
"""

import argparse
import time

import numpy as np

from onebit_dmt import analytic
from onebit_dmt.channel import AntennaConfig, SnrPoint
from onebit_dmt.protocol import SchemeConfig, estimate_diversity, run_batch


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("-M", type=int, default=1)
    ap.add_argument("-N", type=int, default=1)
    ap.add_argument("-l", type=int, default=4)
    ap.add_argument("-r", type=float, default=0.25)
    ap.add_argument("--deadlines", default="1,2,3,inf")
    ap.add_argument("--db", default="20,50", help="low,high SNR in dB")
    ap.add_argument("--points", type=int, default=5)
    ap.add_argument("--trials", type=int, default=10**6)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    cfg = AntennaConfig(args.M, args.N)
    lo, hi = (float(x) for x in args.db.split(","))
    grid = [SnrPoint.from_db(db) for db in np.linspace(lo, hi, args.points)]
    curve = analytic.dmt_no_csi(cfg)
    print(f"{'deadline':>9} {'slope':>8} {'stderr':>8} {'pts':>4} {'bound':>8} {'sec':>6}")
    for tok in args.deadlines.split(","):
        D = None if tok.strip() == "inf" else int(tok)
        t0 = time.perf_counter()
        scheme = SchemeConfig(args.l, D, args.r)
        est = estimate_diversity(
            [run_batch(cfg, scheme, snr, args.trials, args.seed, workers=args.workers) for snr in grid]
        )
        if D is None:
            bound = analytic.theorem1_bound(cfg, args.l, args.r)
        elif D == 1 or args.l < cfg.M + cfg.N:
            bound = analytic.eval_curve(curve, args.r) if D == 1 else float("nan")
        else:
            bound = analytic.theorem2_bound(cfg, args.l, D, args.r)
        print(f"{tok:>9} {est.slope:8.3f} {est.stderr:8.3f} {len(est.snr_points):4d} {bound:8.3f} "
              f"{time.perf_counter() - t0:6.1f}")


if __name__ == "__main__":
    main()
