"""ADAM optimizer and finite-difference gradient checking.

One first-order engine serves both classifier training and the measure
optimization; both hand it a flat parameter vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class NonFiniteGradientError(RuntimeError):
    """A gradient passed to the optimizer contained NaN or infinity."""


@dataclass(frozen=True)
class AdamConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    max_iter: int = 1000
    grad_tol: float = 1e-6

    def __post_init__(self):
        if not self.lr > 0:
            raise ValueError("learning rate must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("decay rates must lie in [0, 1)")
        if not self.eps > 0:
            raise ValueError("eps must be positive")


@dataclass(frozen=True)
class AdamState:
    """First/second moment accumulators plus the step counter."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def zeros(cls, shape) -> "AdamState":
        return cls(m=np.zeros(shape), v=np.zeros(shape), step=0)


def adam_step(
    state: AdamState, params: np.ndarray, gradient: np.ndarray, config: AdamConfig
) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected ADAM update.  Pure: returns fresh arrays."""
    params = np.asarray(params, dtype=float)
    gradient = np.asarray(gradient, dtype=float)
    if params.shape != gradient.shape or state.m.shape != params.shape:
        raise ValueError("params, gradient and accumulators must share a shape")
    if not np.all(np.isfinite(gradient)):
        bad = int(np.flatnonzero(~np.isfinite(gradient))[0])
        raise NonFiniteGradientError(f"non-finite gradient entry at index {bad}")
    t = state.step + 1
    m = config.beta1 * state.m + (1.0 - config.beta1) * gradient
    v = config.beta2 * state.v + (1.0 - config.beta2) * gradient ** 2
    m_hat = m / (1.0 - config.beta1 ** t)
    v_hat = v / (1.0 - config.beta2 ** t)
    new_params = params - config.lr * m_hat / (np.sqrt(v_hat) + config.eps)
    return new_params, AdamState(m=m, v=v, step=t)


@dataclass(frozen=True)
class AdamRunInfo:
    iterations: int
    grad_norm: float
    converged: bool


def run_adam(value_and_grad, x0: np.ndarray, config: AdamConfig):
    """Iterate ADAM until the gradient norm drops below tolerance or the
    iteration cap is hit, whichever comes first."""
    x = np.asarray(x0, dtype=float).copy()
    state = AdamState.zeros(x.shape)
    grad_norm = np.inf
    iterations = 0
    for iterations in range(1, config.max_iter + 1):
        _, grad = value_and_grad(x)
        grad_norm = float(np.max(np.abs(grad))) if grad.size else 0.0
        if grad_norm < config.grad_tol:
            return x, AdamRunInfo(iterations - 1, grad_norm, True)
        x, state = adam_step(state, x, grad, config)
    return x, AdamRunInfo(iterations, grad_norm, grad_norm < config.grad_tol)


def finite_difference_gradient(f, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient estimate of a scalar function."""
    if not h > 0:
        raise ValueError("step size must be positive")
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for d in range(x.size):
        step = np.zeros_like(x)
        step.flat[d] = h
        hi = float(f(x + step))
        lo = float(f(x - step))
        if not (np.isfinite(hi) and np.isfinite(lo)):
            raise ValueError(f"function returned a non-finite value near coordinate {d}")
        grad.flat[d] = (hi - lo) / (2.0 * h)
    return grad
