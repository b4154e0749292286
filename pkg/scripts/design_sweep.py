#!/usr/bin/env python3
"""Certification map over a design parameter: bounds versus the mean of one
normalized material parameter, with the other means pinned at 0.5.

Prints the bound pair per grid value and the certify / cannot-decide /
decertify verdict at each failure tolerance.
"""

import argparse
import time

from pofbounds.certify import design_sweep, verdict, write_region_csv, write_sweep_csv
from pofbounds.config import SolverSpec
from pofbounds.distributions import LhsConfig, lhs_sample
from pofbounds.measures import BoxDomain
from pofbounds.response import DeflectionModel, ThresholdIndicator, evaluate_rows
from pofbounds.surrogate import LabeledDataset, TrainConfig, train


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--restarts", type=int, default=16)
    parser.add_argument("--threshold", type=float, default=1.0)
    parser.add_argument("--design-dim", type=int, default=1, help="1-based, matching x1..x5")
    parser.add_argument("--grid", type=float, nargs="+", default=[0.1, 0.3, 0.5, 0.7, 0.9])
    parser.add_argument("--eps", type=float, nargs="+", default=[0.05, 0.1, 0.2])
    parser.add_argument("--out", default=None, help="optional sweep CSV path")
    args = parser.parse_args()

    model = DeflectionModel()
    domain = BoxDomain.unit(5)
    X = lhs_sample(domain, LhsConfig(strata=2000, per_stratum=1, seed=42))
    y = evaluate_rows(model, X)
    t0 = time.perf_counter()
    net = train(
        LabeledDataset.from_response(X, y, args.threshold),
        TrainConfig(train_size=1500, test_size=500, hidden=(64, 64),
                    batch_size=128, epochs=200, seed=7),
    ).model
    print(f"classifier trained ({time.perf_counter()-t0:.1f}s)")

    indicator = ThresholdIndicator(args.threshold, model)
    sweep = design_sweep(
        net, indicator, 5, args.design_dim - 1, args.grid,
        SolverSpec(restarts=args.restarts), seed=args.seed,
    )
    header = f"{'mean':>6} {'U':>8} {'L':>8}" + "".join(f" {'eps=' + str(e):>14}" for e in args.eps)
    print(header)
    for point in sweep.points:
        if point.error is not None:
            print(f"{point.mean_value:>6.2f}  solver failure: {point.error}")
            continue
        cells = "".join(
            f" {verdict(point.upper.exact_value, point.lower.exact_value, e).status:>14}"
            for e in args.eps
        )
        print(f"{point.mean_value:>6.2f} {point.upper.exact_value:>8.4f} "
              f"{point.lower.exact_value:>8.4f}{cells}")
    if args.out:
        write_sweep_csv(args.out, sweep)
        write_region_csv(args.out.replace(".csv", "_regions.csv"), sweep, args.eps)
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
