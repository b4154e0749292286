"""Shared fixtures: the synthetic response, its LHS dataset, and trained
classifiers at the thresholds the test suite exercises.

Session-scoped because training is the expensive part; every consumer treats
the models as read-only.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import pytest

from pofbounds.distributions import LhsConfig, lhs_sample
from pofbounds.measures import BoxDomain
from pofbounds.response import DeflectionModel, ThresholdIndicator, evaluate_rows
from pofbounds.surrogate import LabeledDataset, MlpModel, TrainConfig, train


@pytest.fixture(scope="session")
def deflection_model() -> DeflectionModel:
    return DeflectionModel()


@pytest.fixture(scope="session")
def lhs_dataset(deflection_model):
    """2000 LHS points of the synthetic response (the training design)."""
    X = lhs_sample(BoxDomain.unit(5), LhsConfig(strata=2000, per_stratum=1, seed=42))
    y = evaluate_rows(deflection_model, X)
    return X, y


@dataclass(frozen=True)
class TrainedSurrogate:
    model: MlpModel
    threshold: float
    test_accuracy: float
    test_bce: float
    train_seconds: float


def _fit(X, y, threshold, hidden, epochs, seed=7) -> TrainedSurrogate:
    t0 = time.perf_counter()
    result = train(
        LabeledDataset.from_response(X, y, threshold),
        TrainConfig(
            train_size=1500, test_size=500, hidden=hidden,
            batch_size=128, epochs=epochs, seed=seed,
        ),
    )
    return TrainedSurrogate(
        model=result.model,
        threshold=threshold,
        test_accuracy=result.test_accuracy,
        test_bce=result.final_test_loss,
        train_seconds=time.perf_counter() - t0,
    )


@pytest.fixture(scope="session")
def paper_surrogate(lhs_dataset) -> TrainedSurrogate:
    """Full training protocol: 1500/500 split, 4 hidden layers of 200."""
    X, y = lhs_dataset
    return _fit(X, y, 1.03, hidden=(200, 200, 200, 200), epochs=150)


@pytest.fixture(scope="session")
def surrogate_bank(lhs_dataset):
    """Small (2x64) classifiers per threshold for the solver-heavy tests."""
    X, y = lhs_dataset
    return {
        thr: _fit(X, y, thr, hidden=(64, 64), epochs=200)
        for thr in (1.00, 1.03, 1.05, 1.10, 1.15, 1.20, 1.25)
    }


@dataclass(frozen=True)
class ToyProblem:
    """1-d ramp response with failure at 0.5: the sharp-bound testbed."""

    model: MlpModel
    indicator: ThresholdIndicator
    domain: BoxDomain
    build_seconds: float


@pytest.fixture(scope="session")
def toy_1d() -> ToyProblem:
    t0 = time.perf_counter()
    response = lambda x: float(np.atleast_1d(x)[0])
    domain = BoxDomain.unit(1)
    X = lhs_sample(domain, LhsConfig(strata=600, per_stratum=1, seed=11))
    y = np.array([response(x) for x in X])
    result = train(
        LabeledDataset.from_response(X, y, 0.5),
        TrainConfig(train_size=450, test_size=150, hidden=(32, 32),
                    batch_size=450, epochs=400, seed=3),
    )
    return ToyProblem(
        model=result.model,
        indicator=ThresholdIndicator(0.5, response),
        domain=domain,
        build_seconds=time.perf_counter() - t0,
    )
