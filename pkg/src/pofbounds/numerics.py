"""Numerically stable scalar maps shared across the package.

These exist because the measure optimizer drives logistic arguments far into
the saturated regime, where the naive expressions round to 0/1 and kill the
gradient signal.
"""

from __future__ import annotations

import numpy as np


def stable_sigmoid(u):
    """Logistic function, safe for arguments of any magnitude."""
    u = np.asarray(u, dtype=float)
    t = np.exp(-np.abs(u))
    return np.where(u >= 0.0, 1.0 / (1.0 + t), t / (1.0 + t))


def sigmoid_slope(u):
    """Derivative of the logistic function, computed without forming p*(1-p).

    The product form underflows to exactly zero once the logistic output
    rounds to 1.0; exp(-|u|) stays representable down to ~1e-308.
    """
    u = np.asarray(u, dtype=float)
    t = np.exp(-np.abs(u))
    return t / (1.0 + t) ** 2


def logit(p):
    """Inverse of the logistic function on (0, 1)."""
    p = np.asarray(p, dtype=float)
    return np.log(p) - np.log1p(-p)
