"""System response functions and the exact performance indicator.

The constitutive core is the Johnson-Cook flow stress for AZ31B magnesium.
The plate-impact simulation that would normally map material parameters to a
backface deflection is replaced by an analytic proxy: deflection falls off as
an inverse power of the flow stress at a fixed representative loading state,
calibrated so the midpoint of the parameter box deflects 1.05 cm.  The proxy
is deterministic, strictly decreasing in the normalized yield stress and
hardening modulus, and pluggable — any callable mapping a normalized point to
a deflection (or a precomputed CSV table of such pairs) can stand in for it.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

PARAMETER_NAMES = ("A", "B", "n", "C", "m")

# Calibrated parameter ranges for AZ31B (95% confidence intervals):
# A [MPa] yield stress, B [MPa] hardening modulus, n hardening exponent,
# C strain-rate coefficient, m thermal-softening exponent.
AZ31B_LOWER = np.array([200.372, 150.682, 0.160, 0.012, 1.523])
AZ31B_UPPER = np.array([249.970, 186.010, 0.324, 0.014, 1.577])


class FlowStressWarning(UserWarning):
    """The flow-stress model left its physically meaningful range."""


@dataclass(frozen=True)
class JohnsonCookParams:
    """Johnson-Cook material parameters.

    ``m_exp`` is the thermal-softening exponent (named to avoid clashing with
    the input-space dimension).
    """

    A: float
    B: float
    n: float
    C: float
    m_exp: float

    def __post_init__(self):
        if not self.n > 0:
            raise ValueError("strain-hardening exponent must be positive")

    def as_array(self) -> np.ndarray:
        return np.array([self.A, self.B, self.n, self.C, self.m_exp])

    @classmethod
    def from_array(cls, values) -> "JohnsonCookParams":
        values = np.asarray(values, dtype=float)
        return cls(*[float(v) for v in values])


@dataclass(frozen=True)
class ParamBounds:
    """Per-parameter lower/upper bounds used for min-max normalization."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float).copy()
        upper = np.asarray(self.upper, dtype=float).copy()
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ValueError("lower and upper must be 1-d arrays of equal length")
        if not np.all(lower < upper):
            raise ValueError("each lower bound must be strictly below its upper bound")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def az31b(cls) -> "ParamBounds":
        return cls(AZ31B_LOWER, AZ31B_UPPER)

    @property
    def dimension(self) -> int:
        return self.lower.shape[0]


@dataclass(frozen=True)
class FixedMaterialParams:
    """Reference state for the rate and temperature normalizations.

    Defaults are the AZ31B values: reference strain rate 1e-3 1/s, reference
    temperature 298 K, melting temperature 905 K.
    """

    strain_rate_ref: float = 1e-3
    temp_ref: float = 298.0
    temp_melt: float = 905.0

    def __post_init__(self):
        if not self.strain_rate_ref > 0:
            raise ValueError("reference strain rate must be positive")
        if not self.temp_melt > self.temp_ref > 0:
            raise ValueError("need temp_melt > temp_ref > 0")


def denormalize(x, bounds: ParamBounds) -> JohnsonCookParams:
    """Map a point of the unit box to physical Johnson-Cook parameters."""
    x = np.asarray(x, dtype=float)
    values = bounds.lower + x * (bounds.upper - bounds.lower)
    return JohnsonCookParams.from_array(values)


def normalize(params: JohnsonCookParams, bounds: ParamBounds) -> np.ndarray:
    """Inverse of :func:`denormalize` (min-max feature scaling)."""
    return (params.as_array() - bounds.lower) / (bounds.upper - bounds.lower)


def jc_flow_stress(
    params: JohnsonCookParams,
    fixed: FixedMaterialParams,
    plastic_strain: float,
    strain_rate: float,
    temperature: float,
) -> float:
    """Johnson-Cook von Mises flow stress in MPa.

    sigma = [A + B eps^n] [1 + C ln(rate/rate_ref)] [1 - T*^m] with the
    homologous temperature T* = (T - T_ref)/(T_melt - T_ref).  A negative
    result (possible at extremely low strain rates) is reported as a warning,
    not clamped.
    """
    if plastic_strain < 0:
        raise ValueError("plastic strain must be nonnegative")
    if not strain_rate > 0:
        raise ValueError("strain rate must be positive")
    if not fixed.temp_ref <= temperature <= fixed.temp_melt:
        raise ValueError("temperature must lie between the reference and melting points")
    hardening = params.A + params.B * plastic_strain ** params.n
    rate = 1.0 + params.C * np.log(strain_rate / fixed.strain_rate_ref)
    t_star = (temperature - fixed.temp_ref) / (fixed.temp_melt - fixed.temp_ref)
    thermal = 1.0 - t_star ** params.m_exp
    sigma = float(hardening * rate * thermal)
    if sigma < 0:
        warnings.warn(
            f"flow stress is negative ({sigma:.3g} MPa) at this state", FlowStressWarning
        )
    return sigma


@dataclass(frozen=True)
class DeflectionModel:
    """Analytic backface-deflection proxy y = kappa / sigma^gamma [cm].

    ``sigma`` is the flow stress at a fixed impact-like state (default: 20%
    plastic strain, 1e4 1/s, 350 K); stronger material deflects less.  kappa
    is set so the box midpoint deflects ``anchor_deflection`` centimeters.
    """

    bounds: ParamBounds = field(default_factory=ParamBounds.az31b)
    fixed: FixedMaterialParams = field(default_factory=FixedMaterialParams)
    plastic_strain: float = 0.2
    strain_rate: float = 1e4
    temperature: float = 350.0
    anchor_deflection: float = 1.05
    stress_exponent: float = 2.0

    def __post_init__(self):
        if not self.anchor_deflection > 0:
            raise ValueError("anchor deflection must be positive")
        if not self.stress_exponent > 0:
            raise ValueError("stress exponent must be positive")

    def reference_stress(self, x) -> float:
        params = denormalize(np.asarray(x, dtype=float), self.bounds)
        return jc_flow_stress(
            params, self.fixed, self.plastic_strain, self.strain_rate, self.temperature
        )

    @cached_property
    def _kappa(self) -> float:
        center = np.full(self.bounds.dimension, 0.5)
        return self.anchor_deflection * self.reference_stress(center) ** self.stress_exponent

    def deflection(self, x) -> float:
        sigma = self.reference_stress(x)
        if not np.isfinite(sigma) or sigma <= 0:
            raise ValueError(f"reference flow stress {sigma!r} is outside the model's range")
        return float(self._kappa / sigma ** self.stress_exponent)

    def __call__(self, x) -> float:
        return self.deflection(x)


@dataclass(frozen=True)
class ThresholdIndicator:
    """Exact performance indicator: 1 when the response reaches the threshold.

    The failure set is the half-open interval [threshold, +inf), so a response
    exactly at the threshold counts as a failure.
    """

    threshold: float
    response: Callable

    def __post_init__(self):
        if not self.threshold > 0:
            raise ValueError("threshold must be positive")

    def __call__(self, x) -> int:
        return int(float(self.response(x)) >= self.threshold)


def evaluate_rows(fn: Callable, X) -> np.ndarray:
    """Apply a scalar point function to each row of a sample matrix."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.asarray([float(fn(row)) for row in X])


def write_xy_csv(path, X, y) -> None:
    """Input/response table: header x1..xm,y, 17 significant digits."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if y.shape[0] != X.shape[0]:
        raise ValueError("X and y must have the same number of rows")
    header = ",".join([f"x{d + 1}" for d in range(X.shape[1])] + ["y"])
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row, value in zip(X, y):
            fh.write(",".join(f"{v:.17g}" for v in row) + f",{value:.17g}\n")


def read_xy_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read an input/response table written by :func:`write_xy_csv`.

    This is the file-based response adapter: an external simulator can drop a
    table of (normalized input, deflection) rows and the training stage will
    consume the rows directly, with no interpolation.
    """
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] < 2:
        raise ValueError(f"{path}: expected at least one input column plus a response column")
    return data[:, :-1], data[:, -1]
