"""Admissible-set specification: moment equality constraints on measures.

A constraint fixes either a (possibly subdomain-restricted) marginal moment
or the mass of a subdomain box.  During gradient-based optimization the box
membership is smoothed by logistic ramps; reported residuals always use the
exact indicator.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import distributions as dists
from .measures import BoxDomain, DiscreteMeasure
from .numerics import stable_sigmoid

DEFAULT_PENALTY = 1e3
DEFAULT_SMOOTH_SHARPNESS = 200.0

CONSTRAINT_KINDS = ("moment", "subdomain_mass")


@dataclass(frozen=True)
class MomentConstraint:
    """Equality constraint  sum_i t_i g(X_i) = target.

    For kind "moment", g(X) = X_dim^order * 1_S(X); for "subdomain_mass",
    g(X) = 1_S(X).  ``subdomain`` is an axis-aligned box (None means the full
    domain).  ``dim`` is a 0-based coordinate index.
    """

    dim: int
    order: int
    target: float
    kind: str = "moment"
    subdomain: Optional[BoxDomain] = None

    def __post_init__(self):
        if self.kind not in CONSTRAINT_KINDS:
            raise ValueError(f"unknown constraint kind {self.kind!r}")
        if self.dim < 0:
            raise ValueError("dim is a 0-based coordinate index")
        if self.order < 1:
            raise ValueError("moment order must be at least 1")
        if not np.isfinite(self.target):
            raise ValueError("constraint target must be finite")
        if not 0.0 <= self.target <= 1.0:
            # On [0,1]^m every attainable moment/mass lies in [0,1]; an
            # out-of-range target makes the admissible set empty, which the
            # solver reports as infeasible rather than refusing up front.
            warnings.warn(
                f"target {self.target} is outside the attainable range [0, 1]",
                UserWarning,
            )


@dataclass(frozen=True)
class AdmissibleSet:
    """Input box plus K moment constraints; extremal measures need at most
    K + 1 support points."""

    domain: BoxDomain
    constraints: tuple = ()

    def __post_init__(self):
        constraints = tuple(self.constraints)
        for c in constraints:
            if c.dim >= self.domain.dimension:
                raise ValueError(f"constraint dim {c.dim} outside the domain")
            if c.subdomain is not None and c.subdomain.dimension != self.domain.dimension:
                raise ValueError("subdomain box must match the domain dimension")
        object.__setattr__(self, "constraints", constraints)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    @property
    def max_support_size(self) -> int:
        return self.num_constraints + 1


@dataclass(frozen=True)
class PenaltyWeights:
    """Positive quadratic penalty coefficients: one for the normalization
    defect, one per constraint."""

    normalization: float
    constraint: np.ndarray

    def __post_init__(self):
        constraint = np.atleast_1d(np.asarray(self.constraint, dtype=float)).copy()
        if not (self.normalization > 0 and np.all(constraint > 0)):
            raise ValueError("penalty weights must be positive")
        if not (np.isfinite(self.normalization) and np.all(np.isfinite(constraint))):
            raise ValueError("penalty weights must be finite")
        constraint.setflags(write=False)
        object.__setattr__(self, "constraint", constraint)

    @classmethod
    def uniform(cls, num_constraints: int, value: float = DEFAULT_PENALTY) -> "PenaltyWeights":
        return cls(value, np.full(num_constraints, value))


def _active_faces(box: BoxDomain, domain: BoxDomain):
    """Faces of the subdomain box that cut strictly inside the domain.

    A face flush with the domain boundary imposes nothing: the membership
    convention is half-open [lo, hi) on interior faces and closed where the
    box meets the domain edge, matching the half-open failure set.
    """
    lower_active = box.lower > domain.lower
    upper_active = box.upper < domain.upper
    return lower_active, upper_active


def box_membership(X: np.ndarray, box: Optional[BoxDomain], domain: BoxDomain) -> np.ndarray:
    """Exact {0,1} membership of each row in the subdomain box."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if box is None:
        return np.ones(X.shape[0])
    lower_active, upper_active = _active_faces(box, domain)
    inside = np.ones(X.shape[0], dtype=bool)
    for d in range(domain.dimension):
        if lower_active[d]:
            inside &= X[:, d] >= box.lower[d]
        if upper_active[d]:
            inside &= X[:, d] < box.upper[d]
    return inside.astype(float)


def smooth_box_membership(
    X: np.ndarray,
    box: Optional[BoxDomain],
    domain: BoxDomain,
    sharpness: float = DEFAULT_SMOOTH_SHARPNESS,
    with_grad: bool = False,
):
    """Differentiable surrogate for box membership: a product of logistic
    ramps over the active faces, converging to the exact indicator as the
    sharpness grows."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n, m = X.shape
    if box is None:
        s = np.ones(n)
        return (s, np.zeros((n, m))) if with_grad else s
    lower_active, upper_active = _active_faces(box, domain)
    s = np.ones(n)
    dlog = np.zeros((n, m))
    for d in range(m):
        if lower_active[d]:
            u = sharpness * (X[:, d] - box.lower[d])
            s = s * stable_sigmoid(u)
            dlog[:, d] += sharpness * stable_sigmoid(-u)
        if upper_active[d]:
            u = sharpness * (box.upper[d] - X[:, d])
            s = s * stable_sigmoid(u)
            dlog[:, d] -= sharpness * stable_sigmoid(-u)
    if with_grad:
        return s, s[:, None] * dlog
    return s


def constraint_terms(
    constraint: MomentConstraint,
    X: np.ndarray,
    domain: BoxDomain,
    smooth: bool = False,
    sharpness: float = DEFAULT_SMOOTH_SHARPNESS,
    with_grad: bool = False,
):
    """Per-point values g(X_i) of the constraint function, optionally with
    d g / d X_i (only meaningful in smooth mode; the exact indicator has a
    zero gradient almost everywhere)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n, m = X.shape
    if smooth:
        s, ds = smooth_box_membership(X, constraint.subdomain, domain, sharpness, with_grad=True)
    else:
        s = box_membership(X, constraint.subdomain, domain)
        ds = np.zeros((n, m))
    if constraint.kind == "subdomain_mass":
        vals = s
        grads = ds
    else:
        xd = X[:, constraint.dim]
        base = xd ** constraint.order
        vals = base * s
        grads = base[:, None] * ds
        grads[:, constraint.dim] += constraint.order * xd ** (constraint.order - 1) * s
    if with_grad:
        return vals, grads
    return vals


def residual_arrays(
    constraint: MomentConstraint,
    points: np.ndarray,
    weights: np.ndarray,
    domain: BoxDomain,
    smooth: bool = False,
    sharpness: float = DEFAULT_SMOOTH_SHARPNESS,
) -> float:
    vals = constraint_terms(constraint, points, domain, smooth=smooth, sharpness=sharpness)
    return float(np.asarray(weights) @ vals - constraint.target)


def residual(
    constraint: MomentConstraint,
    measure: DiscreteMeasure,
    smooth: bool = False,
    sharpness: float = DEFAULT_SMOOTH_SHARPNESS,
    domain: Optional[BoxDomain] = None,
) -> float:
    """Constraint defect  sum_i t_i g(X_i) - target  of a discrete measure."""
    domain = domain or BoxDomain.unit(measure.dimension)
    return residual_arrays(
        constraint, measure.points, measure.weights, domain, smooth=smooth, sharpness=sharpness
    )


def penalty_term(
    admissible: AdmissibleSet,
    weights: PenaltyWeights,
    measure: DiscreteMeasure,
    smooth: bool = False,
    sharpness: float = DEFAULT_SMOOTH_SHARPNESS,
) -> float:
    """Quadratic penalty: normalization defect plus all constraint defects."""
    return penalty_term_arrays(
        admissible, weights, measure.points, measure.weights, smooth=smooth, sharpness=sharpness
    )


def penalty_term_arrays(
    admissible: AdmissibleSet,
    weights: PenaltyWeights,
    points: np.ndarray,
    mass: np.ndarray,
    smooth: bool = False,
    sharpness: float = DEFAULT_SMOOTH_SHARPNESS,
) -> float:
    if weights.constraint.shape[0] != admissible.num_constraints:
        raise ValueError("need one penalty weight per constraint")
    mass = np.asarray(mass, dtype=float)
    total = weights.normalization * (float(mass.sum()) - 1.0) ** 2
    for lam, constraint in zip(weights.constraint, admissible.constraints):
        r = residual_arrays(
            constraint, points, mass, admissible.domain, smooth=smooth, sharpness=sharpness
        )
        total += lam * r ** 2
    return float(total)


def interval_subdomain(domain: BoxDomain, dim: int, lo: float, hi: float) -> BoxDomain:
    """Box restricting a single coordinate to [lo, hi], full range elsewhere."""
    lower = domain.lower.copy()
    upper = domain.upper.copy()
    lower[dim] = lo
    upper[dim] = hi
    return BoxDomain(domain.dimension, lower, upper)


@dataclass(frozen=True)
class CaseSpec:
    """Which family of constraints to build from a truth distribution.

    kind "mean": first moments on every coordinate.
    kind "moments": all orders 1..max_order on every coordinate.
    kind "partial": full-domain means everywhere plus, per selected
    coordinate, a subdomain-mass and a subdomain first-moment pair.
    """

    kind: str
    max_order: int = 1
    dims: tuple = ()
    sub: tuple = (0.5, 1.0)

    def __post_init__(self):
        if self.kind not in ("mean", "moments", "partial"):
            raise ValueError(f"unknown constraint case {self.kind!r}")
        if self.kind == "moments" and self.max_order < 1:
            raise ValueError("max_order must be at least 1")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))


def build_case_constraints(
    case: CaseSpec,
    truth: dists.ProductDistribution,
    subdomain: Optional[tuple] = None,
) -> AdmissibleSet:
    """Constraint targets computed from the truth distribution's moments."""
    m = truth.dimension
    domain = BoxDomain.unit(m)
    constraints: list[MomentConstraint] = []
    if case.kind == "mean":
        for d in range(m):
            constraints.append(MomentConstraint(d, 1, dists.moment(truth, 1, d)))
    elif case.kind == "moments":
        for d in range(m):
            for j in range(1, case.max_order + 1):
                constraints.append(MomentConstraint(d, j, dists.moment(truth, j, d)))
    else:
        lo, hi = subdomain if subdomain is not None else case.sub
        for d in range(m):
            constraints.append(MomentConstraint(d, 1, dists.moment(truth, 1, d)))
        for d in case.dims:
            mass, pmoment = dists.partial_moment(truth, 1, d, lo, hi)
            box = interval_subdomain(domain, d, lo, hi)
            constraints.append(
                MomentConstraint(d, 1, mass, kind="subdomain_mass", subdomain=box)
            )
            constraints.append(MomentConstraint(d, 1, pmoment, subdomain=box))
    return AdmissibleSet(domain, tuple(constraints))
