"""Finitely supported probability measures on the normalized input box.

The optimization variable of the bound solver is a convex combination of
point masses; everything here is a pure function of (support points, weights).
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Callable

import numpy as np

WEIGHT_SUM_TOL = 1e-9


class MeasureError(ValueError):
    """A discrete measure violated one of its invariants."""


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box of admissible input points."""

    dimension: int
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float)).copy()
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float)).copy()
        if lower.shape != (self.dimension,) or upper.shape != (self.dimension,):
            raise ValueError("bounds must have one entry per dimension")
        if not np.all(lower < upper):
            raise ValueError("lower bounds must be strictly below upper bounds")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def unit(cls, dimension: int) -> "BoxDomain":
        return cls(dimension, np.zeros(dimension), np.ones(dimension))

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))


@dataclass(frozen=True)
class DiscreteMeasure:
    """Convex combination of point masses on the unit box.

    ``points`` has shape (Q, m) and every coordinate must lie in [0, 1];
    ``weights`` has shape (Q,), entries in [0, 1], and must sum to one within
    ``WEIGHT_SUM_TOL``.  Instances are immutable and safe to share.
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        points = np.atleast_2d(np.asarray(self.points, dtype=float)).copy()
        weights = np.atleast_1d(np.asarray(self.weights, dtype=float)).copy()
        if points.ndim != 2:
            raise MeasureError("points must form a 2-d array of shape (Q, m)")
        if weights.ndim != 1 or weights.shape[0] != points.shape[0]:
            raise MeasureError("need exactly one weight per support point")
        if points.shape[0] < 1:
            raise MeasureError("a measure needs at least one support point")
        if not (np.all(np.isfinite(points)) and np.all(np.isfinite(weights))):
            raise MeasureError("support points and weights must be finite")
        if np.any(weights < -WEIGHT_SUM_TOL) or np.any(weights > 1.0 + WEIGHT_SUM_TOL):
            raise MeasureError("weights must lie in [0, 1]")
        if abs(float(weights.sum()) - 1.0) > WEIGHT_SUM_TOL:
            raise MeasureError(
                f"weights sum to {weights.sum()!r}, expected 1 within {WEIGHT_SUM_TOL}"
            )
        if np.any(points < 0.0) or np.any(points > 1.0):
            raise MeasureError("support points must lie in the unit box")
        points.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    @property
    def support_size(self) -> int:
        return self.points.shape[0]

    @property
    def dimension(self) -> int:
        return self.points.shape[1]


def dirac_membership(z: float, set_lower: float, set_upper: float = np.inf) -> int:
    """Point-mass membership of the half-open interval [set_lower, set_upper).

    The lower endpoint belongs to the set, the upper does not; an infinite
    upper endpoint gives the one-sided set [set_lower, +inf).
    """
    if not set_lower <= set_upper:
        raise ValueError("interval endpoints out of order")
    return int(set_lower <= z < set_upper)


def expectation(measure: DiscreteMeasure, f: Callable) -> float:
    """Weighted sum of f over the support points.  Rejects NaN values of f."""
    values = np.asarray([float(f(p)) for p in measure.points], dtype=float)
    if np.any(np.isnan(values)):
        bad = int(np.flatnonzero(np.isnan(values))[0])
        raise ValueError(f"integrand returned NaN at support point {bad}")
    return float(measure.weights @ values)


def pof_under_measure(measure: DiscreteMeasure, indicator: Callable) -> float:
    """Probability mass the measure assigns to the failure event.

    ``indicator`` maps a point to {0, 1}; the result is the weighted fraction
    of support points flagged as failures, clipped to [0, 1] (the weight-sum
    tolerance plus accumulation rounding can leave the raw sum a few ulp
    outside the unit interval).
    """
    values = np.asarray([float(indicator(p)) for p in measure.points], dtype=float)
    return float(np.clip(measure.weights @ values, 0.0, 1.0))


def project_to_simplex(raw_weights) -> np.ndarray:
    """Euclidean projection of a weight vector onto the probability simplex.

    Used to turn the raw weights left behind by penalized optimization into
    exact probabilities for reporting; not used inside the optimization loop.
    """
    w = np.atleast_1d(np.asarray(raw_weights, dtype=float))
    if w.size == 0:
        raise ValueError("cannot project an empty weight vector")
    if not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite to project onto the simplex")
    u = np.sort(w)[::-1]
    css = np.cumsum(u)
    idx = np.arange(1, w.size + 1)
    rho = int(np.max(idx[u - (css - 1.0) / idx > 0.0]))
    tau = (css[rho - 1] - 1.0) / rho
    return np.maximum(w - tau, 0.0)


def measure_to_csv(measure: DiscreteMeasure) -> str:
    """One row per support point, columns x1..xm,weight, 17 significant digits."""
    m = measure.dimension
    header = ",".join([f"x{d + 1}" for d in range(m)] + ["weight"])
    lines = [header]
    for point, weight in zip(measure.points, measure.weights):
        cells = [f"{v:.17g}" for v in point] + [f"{weight:.17g}"]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def measure_from_csv(text: str) -> DiscreteMeasure:
    """Inverse of :func:`measure_to_csv`."""
    rows = np.loadtxt(io.StringIO(text), delimiter=",", skiprows=1, ndmin=2)
    return DiscreteMeasure(points=rows[:, :-1], weights=rows[:, -1])
