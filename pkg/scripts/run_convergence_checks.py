#!/usr/bin/env python3
"""Diffusive-scaling diagnostics for one environment configuration.

Estimates the time and space constants from first-renewal samples, then
runs the rescaling checks: normality of the rescaled endpoint, the
interval-count expectation bound, the multiplicity scaling table and the
touch-then-boundary trend.
"""

import argparse

from grdf.environment import EnvConfig
from grdf.errors import InsufficientData
from grdf import forest, stats


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=float, default=0.7)
    ap.add_argument("--w-pmf", default="1.0",
                    help="comma-separated pmf for W = 1, 2, ...")
    ap.add_argument("--seed", type=int, default=20260808)
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--trials", type=int, default=4000)
    ap.add_argument("--horizon", type=int, default=10**5)
    args = ap.parse_args()

    pmf = tuple(float(x) for x in args.w_pmf.split(","))
    cfg = EnvConfig(p=args.p, w_pmf=pmf, seed=args.seed)

    est = stats.estimate_constants(cfg, args.trials, horizon=args.horizon)
    print(f"gamma_hat = {est.gamma_hat:.4f} +- {est.gamma_se:.4f}")
    print(f"sigma_hat = {est.sigma_hat:.4f} +- {est.sigma_se:.4f}")

    target = args.n * args.n * est.gamma_hat
    vals = forest.endpoint_trials(cfg, args.trials, target, offset=10**6)
    try:
        d, pval = stats.ks_normal(vals / (args.n * est.sigma_hat))
        print(f"endpoint normality at n={args.n}: KS = {d:.4f} (p = {pval:.3f})")
    except InsufficientData as exc:
        print(f"endpoint normality skipped: {exc}")

    out = stats.condition_E_check(cfg, args.n, 1.0, 0.0, 1.0,
                                  max(200, args.trials // 4),
                                  est.gamma_hat, est.sigma_hat,
                                  offset=2 * 10**6)
    print(f"interval-count mean {out['mean_eta']:.3f} vs bound "
          f"{out['bound']:.3f} (se {out['se']:.3f})")

    rows = stats.condition_b_scaling(cfg, [100, 1000], [1, 2, 4],
                                     [args.trials // 2, args.trials // 4])
    for r in rows:
        flag = " (low sample)" if r["low_sample"] else ""
        print(f"multiplicity k={r['k']} m={r['m']}: p_hat={r['p_hat']:.4f} "
              f"scaled={r['scaled']:.3f}{flag}")

    rows = stats.condition_T_curve(cfg, max(10, args.n // 2), 0.5,
                                   [0.4, 0.2, 0.1], max(100, args.trials // 20),
                                   est.gamma_hat, est.sigma_hat,
                                   offset=3 * 10**6)
    for r in rows:
        print(f"boundary event t={r['t']}: hits {r['hits']}/{r['trials']} "
              f"p/t = {r['p_over_t']:.5f}")


if __name__ == "__main__":
    main()
