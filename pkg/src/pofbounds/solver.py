"""Optimal-bound solver: penalized measure optimization with multistart ADAM.

The bound problem maximizes (or minimizes) the surrogate-predicted failure
probability of a discrete measure with K+1 support points, subject to soft
moment constraints.  Support points are kept inside the box by logistic
squashing of unconstrained coordinates; weights are squashed to [0, 1] and a
quadratic penalty pulls their sum to one.

Because the trained classifier ramps from 0 to 1 over a finite transition
width, the optimum of the smoothed objective sits a transition-width away
from the true extremal measure.  The solver therefore anneals a logit
temperature over a few stages (graduated sharpening): early stages see a wide
ramp that guides points from anywhere in the box, late stages see a nearly
binary classifier that removes the smoothing bias.  ADAM's per-coordinate
normalization keeps tiny but consistent late-stage gradients effective.

After every stage each restart's support points are re-weighted exactly: a
small linear program picks the objective-optimal simplex weights with the
minimal constraint slack (simplex projection of the squashed weights is the
fallback), the candidate is scored under the *exact* indicator, and the best
feasible snapshot per restart is kept.  The reported bound always comes from
that exact evaluation; restarts whose exact residuals exceed the feasibility
tolerance are rejected, and if none survive, the least-infeasible candidate
is returned flagged.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from scipy.optimize import linprog

from .constraints import (
    AdmissibleSet,
    PenaltyWeights,
    constraint_terms,
    residual_arrays,
)
from .measures import DiscreteMeasure, project_to_simplex
from .numerics import logit, sigmoid_slope, stable_sigmoid
from .optim import AdamConfig, AdamState, adam_step

DEFAULT_FEASIBILITY_TOL = 1e-2


class SolverError(RuntimeError):
    """The bound solver could not produce a usable result."""


@dataclass(frozen=True)
class AnalyticLogitSurrogate:
    """Differentiable classifier built from a smooth margin function.

    ``margin`` maps a point to (value, gradient) with positive values on the
    failure side; the logit is sharpness * value.  Useful when an analytic
    response is available and no network needs training.
    """

    margin: Callable
    sharpness: float = 100.0

    def logits_and_input_gradient(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        z = np.empty(X.shape[0])
        G = np.empty_like(X)
        for i, row in enumerate(X):
            value, grad = self.margin(row)
            z[i] = self.sharpness * value
            G[i] = self.sharpness * np.asarray(grad, dtype=float)
        return z, G


@dataclass(frozen=True)
class MeasureParams:
    """Unconstrained parameterization of a candidate measure.

    Logistic squashing maps ``point_logits`` to box coordinates and
    ``weight_logits`` to masses in [0, 1]; the sum-to-one defect is handled
    by the penalty, not the parameterization.
    """

    point_logits: np.ndarray
    weight_logits: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.point_logits, dtype=float))
        wts = np.atleast_1d(np.asarray(self.weight_logits, dtype=float))
        if pts.shape[0] != wts.shape[0]:
            raise ValueError("one weight logit per support point required")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(wts))):
            raise ValueError("measure parameters must be finite")
        object.__setattr__(self, "point_logits", pts)
        object.__setattr__(self, "weight_logits", wts)

    def flat(self) -> np.ndarray:
        return np.concatenate([self.point_logits.ravel(), self.weight_logits])

    @classmethod
    def from_flat(cls, flat, support_size: int, dimension: int) -> "MeasureParams":
        flat = np.asarray(flat, dtype=float)
        split = support_size * dimension
        return cls(flat[:split].reshape(support_size, dimension), flat[split:])

    def to_measure(self) -> DiscreteMeasure:
        points = stable_sigmoid(self.point_logits)
        weights = project_to_simplex(stable_sigmoid(self.weight_logits))
        return DiscreteMeasure(points, weights)


@dataclass(frozen=True)
class OuqProblem:
    """One bound computation: direction, constraints, surrogate, settings."""

    direction: str
    admissible: AdmissibleSet
    surrogate: object
    exact_indicator: Optional[Callable] = None
    penalties: Optional[PenaltyWeights] = None
    adam: AdamConfig = field(default_factory=lambda: AdamConfig(lr=2e-2, max_iter=600))
    restarts: int = 50
    seed: int = 0
    sharpen_stages: int = 7
    temp_start: float = 8.0
    temp_end: float = 0.0625
    box_sharpness_start: float = 25.0
    box_sharpness_end: float = 3200.0
    lr_decay: float = 1.0 / 8.0
    feasibility_tol: Optional[float] = DEFAULT_FEASIBILITY_TOL

    def __post_init__(self):
        if self.direction not in ("upper", "lower"):
            raise ValueError("direction must be 'upper' or 'lower'")
        if self.restarts < 1:
            raise ValueError("need at least one restart")
        if self.sharpen_stages < 1:
            raise ValueError("sharpening schedule needs at least one stage")
        if not (self.temp_start >= self.temp_end > 0):
            raise ValueError("temperatures must decrease toward a positive floor")
        if not (0 < self.box_sharpness_start <= self.box_sharpness_end):
            raise ValueError("box sharpness must increase along the schedule")
        if self.penalties is None:
            object.__setattr__(
                self, "penalties", PenaltyWeights.uniform(self.admissible.num_constraints)
            )
        elif self.penalties.constraint.shape[0] != self.admissible.num_constraints:
            raise ValueError("one penalty weight per constraint required")

    def schedule(self) -> list:
        """(temperature, box sharpness, learning rate) per stage.

        All three ramp geometrically.  The learning rate shrinks with the
        temperature because once the classifier is nearly binary its pull is
        confined to a boundary layer of width ~ temperature / logit-slope;
        steps larger than that layer throw support points across it.
        """
        S = self.sharpen_stages
        if S == 1:
            return [(self.temp_end, self.box_sharpness_end, self.adam.lr * self.lr_decay)]
        steps = np.arange(S) / (S - 1)
        temps = self.temp_start * (self.temp_end / self.temp_start) ** steps
        boxes = self.box_sharpness_start * (self.box_sharpness_end / self.box_sharpness_start) ** steps
        rates = self.adam.lr * self.lr_decay ** steps
        return list(zip(temps.tolist(), boxes.tolist(), rates.tolist()))

    @property
    def support_size(self) -> int:
        return self.admissible.max_support_size

    @property
    def sign(self) -> float:
        return -1.0 if self.direction == "upper" else 1.0


def _surrogate_probs(problem: OuqProblem, X: np.ndarray, temperature: float):
    """Tempered classifier probability and its input gradient on rows of X."""
    z, G = problem.surrogate.logits_and_input_gradient(X)
    u = np.asarray(z, dtype=float) / temperature
    p = stable_sigmoid(u)
    dp = (sigmoid_slope(u) / temperature)[:, None] * np.asarray(G, dtype=float)
    return p, dp


def _batched_loss_and_grad(
    P: np.ndarray,
    problem: OuqProblem,
    temperature: float,
    box_sharpness: Optional[float] = None,
):
    """Sum of per-restart penalized losses and its gradient.

    ``P`` has one row per restart; restarts never interact, so the summed
    loss keeps their gradient blocks independent while amortizing the
    surrogate evaluation across the whole batch.
    """
    R = P.shape[0]
    Q = problem.support_size
    m = problem.admissible.domain.dimension
    Z = P[:, : Q * m].reshape(R, Q, m)
    omega = P[:, Q * m :]
    X = stable_sigmoid(Z)
    t = stable_sigmoid(omega)
    rows = X.reshape(R * Q, m)

    p_rows, dp_rows = _surrogate_probs(problem, rows, temperature)
    p = p_rows.reshape(R, Q)
    dp = dp_rows.reshape(R, Q, m)

    sign = problem.sign
    loss = sign * (t * p).sum(axis=1)
    grad_t = sign * p
    grad_X = sign * t[:, :, None] * dp

    lam0 = problem.penalties.normalization
    r0 = t.sum(axis=1) - 1.0
    loss = loss + lam0 * r0 ** 2
    grad_t = grad_t + 2.0 * lam0 * r0[:, None]

    domain = problem.admissible.domain
    sharpness = problem.box_sharpness_end if box_sharpness is None else box_sharpness
    for lam, constraint in zip(problem.penalties.constraint, problem.admissible.constraints):
        vals_rows, grads_rows = constraint_terms(
            constraint, rows, domain,
            smooth=True, sharpness=sharpness, with_grad=True,
        )
        vals = vals_rows.reshape(R, Q)
        grads = grads_rows.reshape(R, Q, m)
        r = (t * vals).sum(axis=1) - constraint.target
        loss = loss + lam * r ** 2
        grad_t = grad_t + 2.0 * lam * r[:, None] * vals
        grad_X = grad_X + (2.0 * lam * r)[:, None, None] * t[:, :, None] * grads

    gZ = grad_X * sigmoid_slope(Z)
    gw = grad_t * sigmoid_slope(omega)
    grad = np.concatenate([gZ.reshape(R, Q * m), gw], axis=1)
    return float(loss.sum()), grad, loss


def ouq_loss(params: MeasureParams, problem: OuqProblem, temperature: float = 1.0):
    """Penalized objective of one candidate measure, with its gradient.

    Returns ``(loss, grad)`` where the gradient is laid out like
    ``params.flat()``.  For the upper bound the predicted failure mass enters
    negatively (the solver minimizes), for the lower bound positively.
    """
    P = params.flat()[None, :]
    loss, grad, _ = _batched_loss_and_grad(P, problem, temperature)
    if not np.isfinite(loss):
        raise SolverError("non-finite penalized loss; check the surrogate and constraints")
    return loss, grad[0]


@dataclass(frozen=True)
class BoundResult:
    """Outcome of a bound computation.

    ``exact_value`` is the reported bound: the selected measure's failure
    mass under the exact indicator.  ``value`` is the surrogate's smoothed
    objective on the same measure, so the smoothing gap is visible.
    """

    direction: str
    value: float
    exact_value: float
    measure: Optional[DiscreteMeasure]
    max_residual: float
    restart_values: np.ndarray
    restart_residuals: np.ndarray
    feasible_count: int
    infeasible: bool
    surrogate_only: bool

    @property
    def smoothing_gap(self) -> float:
        return abs(self.value - self.exact_value)


def _initial_params(problem: OuqProblem) -> np.ndarray:
    """Per-restart random initialization: points uniform in the box, weights
    uniform then normalized.  Restart r draws from seed + r."""
    Q = problem.support_size
    m = problem.admissible.domain.dimension
    P0 = np.empty((problem.restarts, Q * m + Q))
    for r in range(problem.restarts):
        rng = np.random.default_rng(problem.seed + r)
        pts = np.clip(rng.random((Q, m)), 1e-9, 1.0 - 1e-9)
        w = rng.random(Q)
        w = np.clip(w / w.sum(), 1e-3, 1.0 - 1e-3)
        P0[r] = np.concatenate([logit(pts).ravel(), logit(w)])
    return P0


def _exact_indicator_values(problem: OuqProblem, points: np.ndarray):
    """Indicator used for reporting: the exact one if available, otherwise
    the surrogate thresholded at 1/2 (flagged via ``surrogate_only``)."""
    if problem.exact_indicator is not None:
        vals = np.asarray([float(problem.exact_indicator(x)) for x in points])
        return vals, False
    z, _ = problem.surrogate.logits_and_input_gradient(points)
    return (stable_sigmoid(np.asarray(z)) >= 0.5).astype(float), True


def _exact_weight_solve(problem: OuqProblem, points: np.ndarray, ind: np.ndarray):
    """Optimal weights for fixed support points, by linear programming.

    With the points frozen, the bound problem is exactly linear: optimize
    sum_i w_i * indicator(X_i) over the simplex subject to the (exact)
    constraint columns.  Solving it closes the gap between the smoothed
    penalty optimum, which happily parks points on subdomain faces with
    fractional membership, and a measure the exact residual check accepts.

    Exact equality on an arbitrary finite support is often unattainable
    (and the feasibility check is tolerance-based anyway), so the solve is
    lexicographic: first find the smallest shared residual slack s* any
    simplex weighting of these points allows (capped at half the
    feasibility tolerance), then optimize the objective among weightings
    within s*.  When equality is attainable, s* is ~0 and the result is the
    exact-equality optimum; slack is never spent to improve the objective.
    Returns None when even the maximal slack is insufficient.
    """
    aset = problem.admissible
    tol = problem.feasibility_tol if problem.feasibility_tol is not None else DEFAULT_FEASIBILITY_TOL
    band = 0.5 * tol
    n = points.shape[0]
    sign = 1.0 if problem.direction == "upper" else -1.0
    if not aset.constraints:
        best = int(np.argmax(ind)) if problem.direction == "upper" else int(np.argmin(ind))
        w = np.zeros(n)
        w[best] = 1.0
        return w
    A = np.vstack(
        [constraint_terms(c, points, aset.domain, smooth=False) for c in aset.constraints]
    )
    targets = np.array([c.target for c in aset.constraints])
    K = A.shape[0]
    # variables: [w_1..w_n, s]; residual rows |A w - c| <= s
    A_ub = np.block([[A, -np.ones((K, 1))], [-A, -np.ones((K, 1))]])
    b_ub = np.concatenate([targets, -targets])
    A_eq = np.concatenate([np.ones(n), [0.0]])[None, :]
    bounds = [(0.0, 1.0)] * n + [(0.0, band)]
    phase1 = linprog(
        c=np.concatenate([np.zeros(n), [1.0]]),
        A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=np.array([1.0]),
        bounds=bounds, method="highs",
    )
    if not phase1.success:
        return None
    s_star = min(float(phase1.x[-1]) + 1e-9, band)
    bounds[-1] = (0.0, s_star)
    phase2 = linprog(
        c=np.concatenate([-sign * ind, [0.0]]),
        A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=np.array([1.0]),
        bounds=bounds, method="highs",
    )
    if not phase2.success:
        return None
    w = np.clip(phase2.x[:n], 0.0, None)
    total = w.sum()
    if total <= 0.0:
        return None
    return w / total


def _evaluate_measures(problem: OuqProblem, P: np.ndarray):
    """Exact-indicator objective and exact residuals of each restart's
    candidate measure.

    Weights are re-solved exactly per restart (LP over the simplex); when
    the LP finds no feasible weighting of the current support points, the
    simplex projection of the squashed weight parameters is reported
    instead, so the restart still yields a least-infeasible candidate.
    """
    R = P.shape[0]
    Q = problem.support_size
    m = problem.admissible.domain.dimension
    exact_vals = np.empty(R)
    smooth_vals = np.empty(R)
    residuals = np.empty(R)
    measures = []
    surrogate_only = False
    for r in range(R):
        params = MeasureParams.from_flat(P[r], Q, m)
        points = stable_sigmoid(params.point_logits)
        ind, surrogate_only = _exact_indicator_values(problem, points)
        weights = _exact_weight_solve(problem, points, ind)
        if weights is None:
            weights = project_to_simplex(stable_sigmoid(params.weight_logits))
        measure = DiscreteMeasure(points, weights)
        measures.append(measure)
        exact_vals[r] = float(measure.weights @ ind)
        z, _ = problem.surrogate.logits_and_input_gradient(measure.points)
        smooth_vals[r] = float(measure.weights @ stable_sigmoid(np.asarray(z)))
        res = 0.0
        for constraint in problem.admissible.constraints:
            res = max(
                res,
                abs(
                    residual_arrays(
                        constraint, measure.points, measure.weights,
                        problem.admissible.domain, smooth=False,
                    )
                ),
            )
        residuals[r] = res
    return exact_vals, smooth_vals, residuals, measures, surrogate_only


@dataclass
class _Incumbent:
    """Best exact-feasible snapshot a restart has produced so far."""

    exact: float = np.nan
    smooth: float = np.nan
    residual: float = np.inf
    measure: Optional[DiscreteMeasure] = None
    feasible: bool = False


def _update_incumbents(problem: OuqProblem, incumbents, P):
    tol = problem.feasibility_tol if problem.feasibility_tol is not None else np.inf
    exact_vals, smooth_vals, residuals, measures, surrogate_only = _evaluate_measures(problem, P)
    better = (lambda a, b: a > b) if problem.direction == "upper" else (lambda a, b: a < b)
    for r, inc in enumerate(incumbents):
        feas = residuals[r] < tol
        replace_inc = (
            (feas and not inc.feasible)
            or (feas and inc.feasible and better(exact_vals[r], inc.exact))
            or (not feas and not inc.feasible and residuals[r] < inc.residual)
        )
        if replace_inc:
            inc.exact = exact_vals[r]
            inc.smooth = smooth_vals[r]
            inc.residual = residuals[r]
            inc.measure = measures[r]
            inc.feasible = feas
    return surrogate_only


def _select_result(problem: OuqProblem, incumbents, surrogate_only: bool) -> BoundResult:
    exact_vals = np.array([inc.exact for inc in incumbents])
    residuals = np.array([inc.residual for inc in incumbents])
    feasible = np.array([inc.feasible for inc in incumbents])
    feasible_count = int(feasible.sum())
    if feasible_count > 0:
        candidates = np.where(feasible, exact_vals, -np.inf if problem.direction == "upper" else np.inf)
        best = int(np.argmax(candidates)) if problem.direction == "upper" else int(np.argmin(candidates))
        infeasible = False
    else:
        best = int(np.argmin(residuals))
        infeasible = True
    chosen = incumbents[best]
    return BoundResult(
        direction=problem.direction,
        value=chosen.smooth,
        exact_value=chosen.exact,
        measure=chosen.measure,
        max_residual=chosen.residual,
        restart_values=exact_vals,
        restart_residuals=residuals,
        feasible_count=feasible_count,
        infeasible=infeasible,
        surrogate_only=surrogate_only,
    )


def _run_multistart(problem: OuqProblem) -> BoundResult:
    """Sharpening schedule with per-restart incumbent tracking.

    Early stages soften the classifier (temperature above one) so distant
    support points still feel a pull toward the failure region; late stages
    are close to binary, removing the smoothing bias and forcing points to
    commit to one side of every subdomain face.  After every stage each
    restart's candidate measure is re-evaluated under the exact indicator
    and its best feasible snapshot is kept, so a restart that later falls
    off the thin sharpened boundary layer does not lose its optimum.
    """
    P = _initial_params(problem)
    incumbents = [_Incumbent() for _ in range(problem.restarts)]
    surrogate_only = _update_incumbents(problem, incumbents, P)
    for temperature, box_sharpness, lr in problem.schedule():
        stage_adam = replace(problem.adam, lr=lr)
        state = AdamState.zeros(P.shape)
        for _ in range(problem.adam.max_iter):
            _, grad, _ = _batched_loss_and_grad(P, problem, temperature, box_sharpness)
            bad = ~np.all(np.isfinite(grad), axis=1)
            if np.any(bad):
                # A diverged restart is frozen, not fatal; the rest continue.
                grad[bad] = 0.0
            if float(np.max(np.abs(grad))) < problem.adam.grad_tol:
                break
            P, state = adam_step(state, P, grad, stage_adam)
        surrogate_only = _update_incumbents(problem, incumbents, P)
    return _select_result(problem, incumbents, surrogate_only)


def optimize_restart(problem: OuqProblem, seed: int) -> BoundResult:
    """Run a single restart from the given seed (no multistart selection)."""
    single = replace(problem, seed=seed, restarts=1)
    return _run_multistart(single)


def solve(problem: OuqProblem) -> BoundResult:
    """Multistart bound computation.

    All restarts run the same sharpening schedule (batched for efficiency;
    restart r initializes from seed + r), then the best exact-indicator
    objective among restarts within the feasibility tolerance wins.  If no
    restart is feasible the least-infeasible one is returned with the
    ``infeasible`` flag set.
    """
    return _run_multistart(problem)


def brute_force_bound(
    problem: OuqProblem,
    grid_resolution: int = 200,
    max_evaluations: int = 100_000_000,
) -> BoundResult:
    """Exhaustive oracle for small problems (dimension <= 2, K <= 1).

    Enumerates support points on a regular grid; with one constraint the
    second weight is eliminated through the equality, so only pairs that
    straddle the target are admissible.  Exact indicators only.
    """
    aset = problem.admissible
    K = aset.num_constraints
    m = aset.domain.dimension
    if m > 2 or K > 1:
        raise ValueError("brute force oracle is limited to dimension <= 2 and K <= 1")
    if problem.exact_indicator is None:
        raise ValueError("brute force requires the exact indicator")

    axes = [
        np.linspace(aset.domain.lower[d], aset.domain.upper[d], grid_resolution)
        for d in range(m)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    grid = np.stack([g.ravel() for g in mesh], axis=1)
    n_grid = grid.shape[0]
    if (n_grid if K == 0 else n_grid * n_grid) > max_evaluations:
        raise ValueError("grid enumeration would exceed the evaluation budget")

    ind = np.asarray([float(problem.exact_indicator(x)) for x in grid])
    upper = problem.direction == "upper"

    if K == 0:
        best = int(np.argmax(ind)) if upper else int(np.argmin(ind))
        measure = DiscreteMeasure(grid[best][None, :], np.array([1.0]))
        value = float(ind[best])
        return BoundResult(
            direction=problem.direction, value=value, exact_value=value,
            measure=measure, max_residual=0.0,
            restart_values=np.array([value]), restart_residuals=np.array([0.0]),
            feasible_count=1, infeasible=False, surrogate_only=False,
        )

    constraint = aset.constraints[0]
    g = constraint_terms(constraint, grid, aset.domain, smooth=False)
    target = constraint.target
    best_val = -np.inf if upper else np.inf
    best_pair = None
    best_w = None
    for i in range(n_grid):
        denom = g[i] - g
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(np.abs(denom) > 1e-12, (target - g) / denom, np.nan)
        valid = np.isfinite(w) & (w >= 0.0) & (w <= 1.0)
        if not np.any(valid):
            continue
        w_safe = np.where(valid, w, 0.0)
        obj = np.where(valid, w_safe * ind[i] + (1.0 - w_safe) * ind, np.nan)
        j = int(np.nanargmax(obj)) if upper else int(np.nanargmin(obj))
        if valid[j]:
            val = float(obj[j])
            if (upper and val > best_val) or (not upper and val < best_val):
                best_val = val
                best_pair = (i, j)
                best_w = float(w[j])

    if best_pair is None:
        return BoundResult(
            direction=problem.direction, value=float("nan"), exact_value=float("nan"),
            measure=None, max_residual=float("inf"),
            restart_values=np.array([]), restart_residuals=np.array([]),
            feasible_count=0, infeasible=True, surrogate_only=False,
        )
    i, j = best_pair
    points = np.vstack([grid[i], grid[j]])
    weights = project_to_simplex(np.array([best_w, 1.0 - best_w]))
    measure = DiscreteMeasure(points, weights)
    res = abs(residual_arrays(constraint, points, weights, aset.domain, smooth=False))
    return BoundResult(
        direction=problem.direction, value=best_val, exact_value=best_val,
        measure=measure, max_residual=res,
        restart_values=np.array([best_val]), restart_residuals=np.array([res]),
        feasible_count=1, infeasible=False, surrogate_only=False,
    )
