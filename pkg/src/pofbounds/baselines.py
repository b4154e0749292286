"""Reference estimators: Monte Carlo failure probability and the McDiarmid
concentration-of-measure upper bound.

Both need strictly more information than the bound solver (a fully specified
truth measure, or response oscillations over the whole box), which is what
makes them useful comparison points: the Monte Carlo estimate must land
inside the optimal bounds, and the concentration bound must sit above the
optimal upper bound wherever it is informative.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .distributions import ProductDistribution, lhs_sample_distribution
from .measures import BoxDomain


@dataclass(frozen=True)
class McEstimate:
    """Plain Monte Carlo point estimate with its binomial standard error."""

    estimate: float
    samples: int
    stderr: float

    def __post_init__(self):
        if not (0.0 <= self.estimate <= 1.0) or self.samples < 1:
            raise ValueError("estimate must lie in [0, 1] with at least one sample")


def monte_carlo_pof(
    truth: ProductDistribution,
    indicator: Callable,
    n: int,
    seed: int = 0,
) -> McEstimate:
    """Failure fraction over a Latin hypercube draw from the truth measure."""
    if n < 1:
        raise ValueError("sample count must be positive")
    X = lhs_sample_distribution(truth, n, seed=seed)
    hits = np.asarray([float(indicator(x)) for x in X])
    p = float(hits.mean())
    return McEstimate(estimate=p, samples=n, stderr=float(np.sqrt(p * (1.0 - p) / n)))


def monte_carlo_mean(
    truth: ProductDistribution,
    fn: Callable,
    n: int,
    seed: int = 0,
) -> float:
    """Mean of an arbitrary scalar response over a Latin hypercube draw."""
    if n < 1:
        raise ValueError("sample count must be positive")
    X = lhs_sample_distribution(truth, n, seed=seed)
    return float(np.mean([float(fn(x)) for x in X]))


@dataclass(frozen=True)
class OscSearchConfig:
    """Deterministic coordinate-wise oscillation search: ``levels`` grid
    values per coordinate swept at ``base_points`` random anchors."""

    levels: int = 32
    base_points: int = 256
    seed: int = 0

    def __post_init__(self):
        if self.levels < 2 or self.base_points < 1:
            raise ValueError("need at least 2 levels and 1 base point")


@dataclass(frozen=True)
class ComBound:
    """McDiarmid bound value together with the pieces it was built from."""

    mean_response: float
    oscillations: np.ndarray
    diameter_sq: float
    threshold: float
    value: float

    def __post_init__(self):
        osc = np.asarray(self.oscillations, dtype=float)
        if np.any(osc < 0):
            raise ValueError("oscillations are nonnegative by construction")
        if not 0.0 <= self.value <= 1.0:
            raise ValueError("bound must lie in [0, 1]")
        object.__setattr__(self, "oscillations", osc)


def estimate_oscillations(
    response: Callable,
    domain: BoxDomain,
    config: OscSearchConfig = OscSearchConfig(),
) -> np.ndarray:
    """Per-coordinate oscillation  max |F(x) - F(x')|  over pairs differing in
    one coordinate, estimated by sweeping grid levels at random anchors.

    The level grid includes both coordinate endpoints, so for responses
    monotone in each coordinate the estimate is exact and refining the grid
    can only grow it.
    """
    rng = np.random.default_rng(config.seed)
    m = domain.dimension
    bases = domain.lower + rng.random((config.base_points, m)) * (domain.upper - domain.lower)
    osc = np.zeros(m)
    for d in range(m):
        levels = np.linspace(domain.lower[d], domain.upper[d], config.levels)
        for base in bases:
            values = np.empty(config.levels)
            point = base.copy()
            for k, level in enumerate(levels):
                point[d] = level
                values[k] = float(response(point))
            if not np.all(np.isfinite(values)):
                raise ValueError(f"response returned a non-finite value sweeping coordinate {d}")
            osc[d] = max(osc[d], float(values.max() - values.min()))
    return osc


def mcdiarmid_bound(
    response: Callable,
    domain: BoxDomain,
    mean_response: float,
    threshold: float,
    config: OscSearchConfig = OscSearchConfig(),
    oscillations: np.ndarray | None = None,
) -> ComBound:
    """One-sided McDiarmid tail bound on P[Y >= threshold].

    bound = exp(-2 (threshold - E[Y])_+^2 / sum_d osc_d^2), clamped to [0, 1];
    vacuous (exactly 1) when the threshold does not exceed the mean response.
    Assumes independent inputs, which is exactly why the optimal bounds can
    be tighter.
    """
    if oscillations is None:
        oscillations = estimate_oscillations(response, domain, config)
    osc = np.asarray(oscillations, dtype=float)
    diameter_sq = float(np.sum(osc ** 2))
    gap = threshold - mean_response
    if gap <= 0.0 or diameter_sq == 0.0:
        value = 1.0
    else:
        value = float(np.clip(np.exp(-2.0 * gap ** 2 / diameter_sq), 0.0, 1.0))
    return ComBound(
        mean_response=float(mean_response),
        oscillations=osc,
        diameter_sq=diameter_sq,
        threshold=float(threshold),
        value=value,
    )
