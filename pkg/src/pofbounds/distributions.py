"""Ground-truth input distributions for data generation and baselines.

Product distributions of truncated univariate laws on [0, 1], Latin hypercube
sampling, and moments computed analytically or by adaptive quadrature.  Only
the truth-generation side assumes independence across coordinates; the bound
solver itself never does.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np
from scipy import integrate
from scipy.special import ndtr, ndtri

from .measures import BoxDomain

QUAD_ABS_TOL = 1e-10


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


def _quad(f, a: float, b: float) -> float:
    value, err = integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-11, limit=200)
    if err > QUAD_ABS_TOL:
        raise QuadratureError(
            f"quadrature error estimate {err:.3e} exceeds {QUAD_ABS_TOL:.1e} on [{a}, {b}]"
        )
    return float(value)


@dataclass(frozen=True)
class UniformLaw:
    """Uniform law on [0, 1]."""

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= 0.0) & (x <= 1.0), 1.0, 0.0)

    def cdf(self, x):
        return np.clip(np.asarray(x, dtype=float), 0.0, 1.0)

    def ppf(self, q):
        return np.asarray(q, dtype=float)

    def moment(self, order: int) -> float:
        return 1.0 / (order + 1.0)

    def mass(self, lo: float, hi: float) -> float:
        return float(np.clip(hi, 0, 1) - np.clip(lo, 0, 1))

    def partial_moment(self, order: int, lo: float, hi: float) -> float:
        # exact: integral of x^j on [lo, hi]
        return (hi ** (order + 1) - lo ** (order + 1)) / (order + 1.0)


@dataclass(frozen=True)
class TruncatedGaussianLaw:
    """Gaussian with location/scale, renormalized to [0, 1] through its CDF.

    Truncation by CDF renormalization keeps inverse-CDF sampling and
    quadrature normalization exact (no rejection step).  Implemented on the
    raw normal-CDF ufuncs so large sample transforms stay cheap.
    """

    loc: float
    scale: float

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    @cached_property
    def _norm(self) -> tuple:
        cdf_lo = float(ndtr((0.0 - self.loc) / self.scale))
        cdf_hi = float(ndtr((1.0 - self.loc) / self.scale))
        return cdf_lo, cdf_hi - cdf_lo

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        _, z = self._norm
        t = (x - self.loc) / self.scale
        density = np.exp(-0.5 * t ** 2) / (self.scale * np.sqrt(2.0 * np.pi) * z)
        return np.where((x >= 0.0) & (x <= 1.0), density, 0.0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        cdf_lo, z = self._norm
        return np.clip((ndtr((x - self.loc) / self.scale) - cdf_lo) / z, 0.0, 1.0)

    def ppf(self, q):
        q = np.asarray(q, dtype=float)
        cdf_lo, z = self._norm
        return np.clip(self.loc + self.scale * ndtri(cdf_lo + q * z), 0.0, 1.0)

    def moment(self, order: int) -> float:
        return _quad(lambda x: x ** order * self.pdf(x), 0.0, 1.0)

    def mass(self, lo: float, hi: float) -> float:
        return float(self.cdf(hi) - self.cdf(lo))

    def partial_moment(self, order: int, lo: float, hi: float) -> float:
        return _quad(lambda x: x ** order * self.pdf(x), lo, hi)


@dataclass(frozen=True)
class BimodalMixtureLaw:
    """Two-component mixture of truncated Gaussians on [0, 1]."""

    first: TruncatedGaussianLaw
    second: TruncatedGaussianLaw
    weight: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.weight < 1.0:
            raise ValueError("mixture weight must lie strictly inside (0, 1)")

    @classmethod
    def default(cls) -> "BimodalMixtureLaw":
        """Symmetric bimodal law with modes near 0.25 and 0.75."""
        return cls(
            TruncatedGaussianLaw(0.25, 0.1),
            TruncatedGaussianLaw(0.75, 0.1),
            weight=0.5,
        )

    def pdf(self, x):
        return self.weight * self.first.pdf(x) + (1.0 - self.weight) * self.second.pdf(x)

    def cdf(self, x):
        return self.weight * self.first.cdf(x) + (1.0 - self.weight) * self.second.cdf(x)

    def ppf(self, q):
        # The mixture CDF has no closed inverse; vectorized bisection to
        # double precision (2^-60 interval width) keeps large draws fast.
        q = np.asarray(q, dtype=float)
        flat = np.atleast_1d(q).astype(float)
        lo = np.zeros_like(flat)
        hi = np.ones_like(flat)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            go_right = self.cdf(mid) < flat
            lo = np.where(go_right, mid, lo)
            hi = np.where(go_right, hi, mid)
        out = np.clip(0.5 * (lo + hi), 0.0, 1.0)
        out = np.where(flat <= 0.0, 0.0, np.where(flat >= 1.0, 1.0, out))
        return out.reshape(q.shape) if q.shape else float(out[0])

    def moment(self, order: int) -> float:
        return (
            self.weight * self.first.moment(order)
            + (1.0 - self.weight) * self.second.moment(order)
        )

    def mass(self, lo: float, hi: float) -> float:
        return self.weight * self.first.mass(lo, hi) + (1.0 - self.weight) * self.second.mass(lo, hi)

    def partial_moment(self, order: int, lo: float, hi: float) -> float:
        return (
            self.weight * self.first.partial_moment(order, lo, hi)
            + (1.0 - self.weight) * self.second.partial_moment(order, lo, hi)
        )


UnivariateLaw = Union[UniformLaw, TruncatedGaussianLaw, BimodalMixtureLaw]


def make_law(kind: str, **params) -> UnivariateLaw:
    """Build a univariate law from a config-file style (kind, parameters) spec."""
    kind = kind.strip().lower()
    if kind == "uniform":
        return UniformLaw()
    if kind == "truncated_gaussian":
        return TruncatedGaussianLaw(loc=float(params["loc"]), scale=float(params["scale"]))
    if kind in ("bimodal", "bimodal_mixture"):
        if not params:
            return BimodalMixtureLaw.default()
        return BimodalMixtureLaw(
            TruncatedGaussianLaw(float(params["loc1"]), float(params["scale1"])),
            TruncatedGaussianLaw(float(params["loc2"]), float(params["scale2"])),
            weight=float(params.get("weight", 0.5)),
        )
    raise ValueError(f"unknown law kind {kind!r}")


@dataclass(frozen=True)
class ProductDistribution:
    """Independent product of univariate laws, one per coordinate."""

    laws: tuple

    def __post_init__(self):
        laws = tuple(self.laws)
        if len(laws) < 1:
            raise ValueError("a product distribution needs at least one coordinate")
        object.__setattr__(self, "laws", laws)

    @classmethod
    def iid(cls, law: UnivariateLaw, dimension: int) -> "ProductDistribution":
        return cls(tuple(law for _ in range(dimension)))

    @property
    def dimension(self) -> int:
        return len(self.laws)


@dataclass(frozen=True)
class LhsConfig:
    """Latin hypercube layout: ``strata`` equal-width bins per coordinate,
    ``per_stratum`` samples in each bin."""

    strata: int
    per_stratum: int = 1
    seed: int = 0
    max_samples: int = 10_000_000

    def __post_init__(self):
        if self.strata < 1 or self.per_stratum < 1:
            raise ValueError("strata and per_stratum must be at least 1")

    @property
    def total(self) -> int:
        return self.strata * self.per_stratum


def _lhs_unit(dimension: int, config: LhsConfig) -> np.ndarray:
    n = config.total
    if n > config.max_samples:
        raise ValueError(
            f"requested {n} samples exceeds configured maximum {config.max_samples}"
        )
    rng = np.random.default_rng(config.seed)
    bins = np.repeat(np.arange(config.strata), config.per_stratum)
    sample = np.empty((n, dimension))
    for d in range(dimension):
        order = rng.permutation(n)
        sample[:, d] = (bins[order] + rng.random(n)) / config.strata
    return sample


def lhs_sample(domain: BoxDomain, config: LhsConfig) -> np.ndarray:
    """Stratified sample of the box: per coordinate, every bin holds exactly
    ``per_stratum`` points.  Deterministic for a fixed seed."""
    unit = _lhs_unit(domain.dimension, config)
    return domain.lower + unit * (domain.upper - domain.lower)


def sample_iid(dist: ProductDistribution, n: int, seed: int = 0) -> np.ndarray:
    """i.i.d. draws from the product law via per-coordinate inverse CDF."""
    if n < 1:
        raise ValueError("sample count must be positive")
    rng = np.random.default_rng(seed)
    u = rng.random((n, dist.dimension))
    out = np.empty_like(u)
    for d, law in enumerate(dist.laws):
        out[:, d] = law.ppf(u[:, d])
    return out


def lhs_sample_distribution(dist: ProductDistribution, n: int, seed: int = 0) -> np.ndarray:
    """Latin hypercube draws from the product law (stratified uniforms pushed
    through each coordinate's inverse CDF)."""
    unit = _lhs_unit(dist.dimension, LhsConfig(strata=n, per_stratum=1, seed=seed))
    out = np.empty_like(unit)
    for d, law in enumerate(dist.laws):
        out[:, d] = law.ppf(unit[:, d])
    return out


def moment(dist: ProductDistribution, order: int, coordinate: int) -> float:
    """Marginal raw moment of the given coordinate."""
    if order < 1:
        raise ValueError("moment order must be a positive integer")
    return float(dist.laws[coordinate].moment(order))


def partial_moment(
    dist: ProductDistribution,
    order: int,
    coordinate: int,
    sub_lower: float,
    sub_upper: float,
) -> tuple[float, float]:
    """Mass and unnormalized partial expectation of x^order on a subinterval.

    Returns ``(mass, moment)`` where mass is the marginal probability of the
    subinterval and moment integrates x^order against the (unnormalized)
    marginal law restricted to it.
    """
    if order < 1:
        raise ValueError("moment order must be a positive integer")
    if not (0.0 <= sub_lower < sub_upper <= 1.0):
        raise ValueError("subinterval must be a nonempty subset of [0, 1]")
    law = dist.laws[coordinate]
    return float(law.mass(sub_lower, sub_upper)), float(
        law.partial_moment(order, sub_lower, sub_upper)
    )
