#!/usr/bin/env python3
"""Bound tightening from subdomain ("partial") mean information.

The hidden truth is a product of truncated Gaussians.  Beyond the full-range
means, the solver successively learns, coordinate by coordinate, the mass
and first moment restricted to the upper half [0.5, 1] of that coordinate.
"""

import argparse
import time

from pofbounds.baselines import monte_carlo_pof
from pofbounds.constraints import CaseSpec, build_case_constraints
from pofbounds.distributions import LhsConfig, ProductDistribution, TruncatedGaussianLaw, lhs_sample
from pofbounds.measures import BoxDomain
from pofbounds.response import DeflectionModel, ThresholdIndicator, evaluate_rows
from pofbounds.solver import OuqProblem, solve
from pofbounds.surrogate import LabeledDataset, TrainConfig, train


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threshold", type=float, default=1.03)
    parser.add_argument("--restarts", type=int, default=16)
    parser.add_argument("--loc", type=float, default=0.5)
    parser.add_argument("--scale", type=float, default=0.2)
    args = parser.parse_args()

    model = DeflectionModel()
    domain = BoxDomain.unit(5)
    X = lhs_sample(domain, LhsConfig(strata=2000, per_stratum=1, seed=42))
    y = evaluate_rows(model, X)
    net = train(
        LabeledDataset.from_response(X, y, args.threshold),
        TrainConfig(train_size=1500, test_size=500, hidden=(64, 64),
                    batch_size=128, epochs=200, seed=7),
    )
    print(f"classifier: accuracy={net.test_accuracy:.3f}")

    indicator = ThresholdIndicator(args.threshold, model)
    truth = ProductDistribution.iid(TruncatedGaussianLaw(args.loc, args.scale), 5)
    mc = monte_carlo_pof(truth, indicator, 12_000, seed=args.seed + 1)
    print(f"hidden-truth failure probability: {mc.estimate:.4f} +- {mc.stderr:.4f}")

    print(f"{'partial dims':>12} {'K':>4} {'U':>8} {'L':>8} {'width':>8} {'secs':>6}")
    for ndims in range(6):
        t0 = time.perf_counter()
        case = CaseSpec("partial", dims=tuple(range(ndims))) if ndims else CaseSpec("mean")
        aset = build_case_constraints(case, truth)
        up = solve(OuqProblem("upper", aset, net.model, exact_indicator=indicator,
                              restarts=args.restarts, seed=args.seed + 100 + 10 * ndims))
        lo = solve(OuqProblem("lower", aset, net.model, exact_indicator=indicator,
                              restarts=args.restarts, seed=args.seed + 105 + 10 * ndims))
        print(f"{ndims:>12} {aset.num_constraints:>4} {up.exact_value:>8.4f} "
              f"{lo.exact_value:>8.4f} {up.exact_value - lo.exact_value:>8.4f} "
              f"{time.perf_counter()-t0:>6.1f}")


if __name__ == "__main__":
    main()
