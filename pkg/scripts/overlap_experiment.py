"""Scaled overlap variance n E<R_{1,*}^2> against its limit 1/(1 - t lam).

Exact enumeration for small n, heat-bath MCMC for larger n.

Usage: python3 scripts/overlap_experiment.py --lam 0.5 --exact-n 8 12 16 --mcmc-n 50 100 300
"""
import argparse
import csv
import sys

from spiked_wigner.correction import correction_bundle, delta_rs
from spiked_wigner.prior import Prior
from spiked_wigner.simulator import (McmcConfig, aggregate_overlaps, mcmc_posterior,
                                     posterior_pair_correlations, sample_instance)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lam", type=float, default=0.5)
    ap.add_argument("--t", type=float, default=1.0)
    ap.add_argument("--exact-n", type=int, nargs="*", default=[8, 12, 16])
    ap.add_argument("--mcmc-n", type=int, nargs="*", default=[50, 100, 300])
    ap.add_argument("--instances", type=int, default=300)
    ap.add_argument("--seed", type=int, default=99)
    args = ap.parse_args(argv)

    prior = Prior.rademacher()
    limit = delta_rs(args.lam, args.t, correction_bundle(args.lam, prior))
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["n", "estimator", "instances", "n_r1s_sq", "stderr", "limit"])
    for n in args.exact_n:
        agg = aggregate_overlaps([
            posterior_pair_correlations(sample_instance(n, args.lam, prior, True, args.seed, k, t=args.t),
                                        prior)
            for k in range(args.instances)])
        w.writerow([n, agg.estimator, agg.count, *agg.scaled_r1s_sq(), limit])
        sys.stdout.flush()
    cfg = McmcConfig(sweeps=250, burn_in=50, thinning=300, chains=2, t=args.t)
    for n in args.mcmc_n:
        agg = aggregate_overlaps([
            mcmc_posterior(sample_instance(n, args.lam, prior, True, args.seed, k, t=args.t), prior, cfg)
            for k in range(args.instances)])
        w.writerow([n, agg.estimator, agg.count, *agg.scaled_r1s_sq(), limit])
        sys.stdout.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
