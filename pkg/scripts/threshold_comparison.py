#!/usr/bin/env python3
"""Bound pair versus Monte Carlo and McDiarmid across failure thresholds.

Runs the comparison the `baseline` pipeline stage automates, standalone:
for each threshold, train a classifier, solve both bounds under mean
constraints, and print them next to the MC estimate and the concentration
bound.  Writes the comparison CSV when --out is given.
"""

import argparse
import time

from pofbounds.baselines import (
    OscSearchConfig,
    estimate_oscillations,
    mcdiarmid_bound,
    monte_carlo_mean,
    monte_carlo_pof,
)
from pofbounds.certify import write_comparison_csv
from pofbounds.constraints import CaseSpec, build_case_constraints
from pofbounds.distributions import LhsConfig, ProductDistribution, UniformLaw, lhs_sample
from pofbounds.measures import BoxDomain
from pofbounds.response import DeflectionModel, ThresholdIndicator, evaluate_rows
from pofbounds.solver import OuqProblem, solve
from pofbounds.surrogate import LabeledDataset, TrainConfig, train


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--restarts", type=int, default=16)
    parser.add_argument("--thresholds", type=float, nargs="+",
                        default=[1.00, 1.05, 1.10, 1.15, 1.20, 1.25])
    parser.add_argument("--out", default=None, help="optional comparison CSV path")
    args = parser.parse_args()

    model = DeflectionModel()
    domain = BoxDomain.unit(5)
    X = lhs_sample(domain, LhsConfig(strata=2000, per_stratum=1, seed=42))
    y = evaluate_rows(model, X)
    truth = ProductDistribution.iid(UniformLaw(), 5)
    aset = build_case_constraints(CaseSpec("mean"), truth)
    osc = estimate_oscillations(model, domain, OscSearchConfig(seed=5))
    mean_response = monte_carlo_mean(truth, model, 12_000, seed=9)

    rows = []
    print(f"{'Y_T':>6} {'MC':>8} {'U':>8} {'L':>8} {'CoM':>8} {'secs':>6}")
    for i, threshold in enumerate(args.thresholds):
        t0 = time.perf_counter()
        net = train(
            LabeledDataset.from_response(X, y, threshold),
            TrainConfig(train_size=1500, test_size=500, hidden=(64, 64),
                        batch_size=128, epochs=200, seed=7),
        ).model
        indicator = ThresholdIndicator(threshold, model)
        mc = monte_carlo_pof(truth, indicator, 12_000, seed=9)
        com = mcdiarmid_bound(model, domain, mean_response, threshold, oscillations=osc)
        up = solve(OuqProblem("upper", aset, net, exact_indicator=indicator,
                              restarts=args.restarts, seed=args.seed + 100 * i))
        lo = solve(OuqProblem("lower", aset, net, exact_indicator=indicator,
                              restarts=args.restarts, seed=args.seed + 100 * i + 7))
        rows.append((threshold, mc, com, up, lo))
        print(f"{threshold:>6.2f} {mc.estimate:>8.4f} {up.exact_value:>8.4f} "
              f"{lo.exact_value:>8.4f} {com.value:>8.4f} {time.perf_counter()-t0:>6.1f}")
    if args.out:
        write_comparison_csv(args.out, rows)
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
