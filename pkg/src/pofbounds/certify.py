"""Certification verdicts, design sweeps, and the end-to-end pipeline.

The pipeline is gen-data -> train -> bound -> baseline -> sweep, each stage
writing diff-able CSV artifacts plus a JSON manifest of seeds, config hash,
timings and paths.  The failure tolerance enters only at verdict time; the
bounds themselves are tolerance-free.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import __version__ as _package_version
from .baselines import (
    OscSearchConfig,
    estimate_oscillations,
    mcdiarmid_bound,
    monte_carlo_mean,
    monte_carlo_pof,
)
from .config import RunConfig
from .constraints import (
    AdmissibleSet,
    MomentConstraint,
    PenaltyWeights,
    build_case_constraints,
    interval_subdomain,
)
from .distributions import LhsConfig, ProductDistribution, lhs_sample, moment, partial_moment
from .measures import BoxDomain, measure_to_csv
from .optim import AdamConfig
from .response import DeflectionModel, ThresholdIndicator, evaluate_rows, read_xy_csv, write_xy_csv
from .solver import BoundResult, OuqProblem, solve
from .surrogate import LabeledDataset, TrainConfig, load_model, save_model, train

VERDICT_SWAP_TOL = 2e-2

CERTIFIED = "certified"
DECERTIFIED = "decertified"
CANNOT_DECIDE = "cannot_decide"


class InconsistentBoundsError(ValueError):
    """Lower bound exceeds upper bound by more than optimizer noise allows."""


class PipelineStageError(RuntimeError):
    """A pipeline stage failed; partial artifacts are kept on disk."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"stage '{stage}': {message}")
        self.stage = stage


@dataclass(frozen=True)
class Verdict:
    """Certification outcome for a failure tolerance.

    certified     <=>  upper <= tolerance
    decertified   <=>  tolerance < lower
    cannot_decide <=>  lower <= tolerance < upper
    """

    status: str
    upper: float
    lower: float
    tolerance: float


def verdict(upper: float, lower: float, tolerance: float) -> Verdict:
    """Map a bound pair and tolerance to a certification verdict.

    A lower bound above the upper bound by at most VERDICT_SWAP_TOL is
    treated as optimizer noise (swapped with a warning); a larger inversion
    is an inconsistency error.
    """
    if lower > upper:
        if lower - upper > VERDICT_SWAP_TOL:
            raise InconsistentBoundsError(
                f"lower bound {lower} exceeds upper bound {upper} beyond tolerance"
            )
        warnings.warn(
            f"bound pair inverted by {lower - upper:.2e}; swapping", UserWarning
        )
        lower, upper = upper, lower
    if upper <= tolerance:
        status = CERTIFIED
    elif tolerance < lower:
        status = DECERTIFIED
    else:
        status = CANNOT_DECIDE
    return Verdict(status=status, upper=upper, lower=lower, tolerance=tolerance)


def mean_constraint_set(dimension: int, targets: Sequence[float]) -> AdmissibleSet:
    """First-moment constraints with explicit per-coordinate targets."""
    domain = BoxDomain.unit(dimension)
    cons = tuple(MomentConstraint(d, 1, float(t)) for d, t in enumerate(targets))
    return AdmissibleSet(domain, cons)


@dataclass(frozen=True)
class SweepPoint:
    mean_value: float
    upper: Optional[BoundResult]
    lower: Optional[BoundResult]
    error: Optional[str] = None


@dataclass(frozen=True)
class SweepResult:
    """Bound pair per design-parameter grid value, plus the three-region map."""

    design_dim: int
    grid: tuple
    points: tuple

    def uppers(self) -> np.ndarray:
        return np.array([p.upper.exact_value if p.error is None else np.nan for p in self.points])

    def lowers(self) -> np.ndarray:
        return np.array([p.lower.exact_value if p.error is None else np.nan for p in self.points])

    def region_map(self, eps_values: Sequence[float]) -> list:
        """(mean_value, eps, status) cells classified by the verdict rule."""
        cells = []
        for p in self.points:
            if p.error is not None:
                continue
            for eps in eps_values:
                v = verdict(p.upper.exact_value, p.lower.exact_value, eps)
                cells.append((p.mean_value, eps, v.status))
        return cells


def _solver_problem(
    direction: str,
    admissible: AdmissibleSet,
    model,
    indicator: Optional[Callable],
    spec,
    seed: int,
) -> OuqProblem:
    return OuqProblem(
        direction=direction,
        admissible=admissible,
        surrogate=model,
        exact_indicator=indicator,
        penalties=PenaltyWeights.uniform(admissible.num_constraints, spec.penalty),
        adam=AdamConfig(lr=spec.lr, max_iter=spec.iters),
        restarts=spec.restarts,
        seed=seed,
        sharpen_stages=spec.stages,
        temp_start=spec.temp_start,
        temp_end=spec.temp_end,
        box_sharpness_start=spec.box_sharp_start,
        box_sharpness_end=spec.box_sharp_end,
        feasibility_tol=spec.feasibility_tol,
    )


def solve_pair(
    admissible: AdmissibleSet,
    model,
    indicator: Optional[Callable],
    spec,
    seed: int,
) -> tuple[BoundResult, BoundResult]:
    """Upper and lower bound for the same admissible set."""
    up = solve(_solver_problem("upper", admissible, model, indicator, spec, seed))
    lo = solve(_solver_problem("lower", admissible, model, indicator, spec, seed + 10_000))
    return up, lo


def design_sweep(
    model,
    indicator: Optional[Callable],
    dimension: int,
    design_dim: int,
    mean_grid: Sequence[float],
    solver_spec,
    seed: int = 0,
    base_mean: float = 0.5,
) -> SweepResult:
    """Bounds across a grid of design means.

    Each grid value g fixes the mean of the design coordinate to g and every
    other coordinate's mean to ``base_mean``; per-point solver failures are
    recorded and the sweep continues.
    """
    points = []
    for k, g in enumerate(mean_grid):
        targets = [base_mean] * dimension
        targets[design_dim] = float(g)
        admissible = mean_constraint_set(dimension, targets)
        try:
            up, lo = solve_pair(admissible, model, indicator, solver_spec, seed + 1000 * k)
            points.append(SweepPoint(float(g), up, lo))
        except Exception as exc:  # keep sweeping; report per-point failure
            points.append(SweepPoint(float(g), None, None, error=str(exc)))
    return SweepResult(design_dim=design_dim, grid=tuple(mean_grid), points=tuple(points))


# ---------------------------------------------------------------------------
# Timing: surrogate evaluation against the direct pipeline it replaces.

def time_surrogate_eval(model, x, repeats: int = 50) -> float:
    """Median seconds for a single surrogate evaluation."""
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        model.forward(x)
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def time_direct_batch(
    response: Callable,
    X: np.ndarray,
    threshold: float,
    repeats: int = 3,
) -> float:
    """Median seconds to regenerate the response/label batch directly.

    This is what answering one indicator query costs without the surrogate:
    rerunning the response model over the training design and thresholding.
    """
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        y = evaluate_rows(response, X)
        _ = y >= threshold
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


# ---------------------------------------------------------------------------
# CSV artifacts

def _fmt(value: float) -> str:
    return f"{value:.17g}"


def write_bounds_csv(path, rows) -> None:
    """rows: (threshold, direction, bound, exact_bound, max_residual, restarts_feasible)"""
    with open(path, "w") as fh:
        fh.write("threshold,direction,bound,exact_bound,max_residual,restarts_feasible\n")
        for threshold, direction, result in rows:
            fh.write(
                f"{_fmt(threshold)},{direction},{_fmt(result.value)},"
                f"{_fmt(result.exact_value)},{_fmt(result.max_residual)},"
                f"{result.feasible_count}\n"
            )


def write_restart_trace_csv(path, rows) -> None:
    """Audit trail: every restart's exact objective and residual."""
    with open(path, "w") as fh:
        fh.write("threshold,direction,restart,exact_value,max_residual\n")
        for threshold, direction, result in rows:
            for r, (value, residual) in enumerate(
                zip(result.restart_values, result.restart_residuals)
            ):
                fh.write(
                    f"{_fmt(threshold)},{direction},{r},{_fmt(value)},{_fmt(residual)}\n"
                )


def write_comparison_csv(path, rows) -> None:
    """Fig-style comparison: MC estimate with error bar, CoM bound, bound pair."""
    with open(path, "w") as fh:
        fh.write("threshold,mc_estimate,mc_stderr,com_bound,ouq_upper,ouq_lower\n")
        for threshold, mc, com, upper, lower in rows:
            fh.write(
                f"{_fmt(threshold)},{_fmt(mc.estimate)},{_fmt(mc.stderr)},"
                f"{_fmt(com.value)},{_fmt(upper.exact_value)},{_fmt(lower.exact_value)}\n"
            )


def write_sweep_csv(path, sweep: SweepResult) -> None:
    with open(path, "w") as fh:
        fh.write("design_dim,mean_value,U,L\n")
        for p in sweep.points:
            if p.error is not None:
                continue
            fh.write(
                f"{sweep.design_dim + 1},{_fmt(p.mean_value)},"
                f"{_fmt(p.upper.exact_value)},{_fmt(p.lower.exact_value)}\n"
            )


def write_region_csv(path, sweep: SweepResult, eps_values) -> None:
    with open(path, "w") as fh:
        fh.write("design_dim,mean_value,eps,verdict\n")
        for mean_value, eps, status in sweep.region_map(eps_values):
            fh.write(f"{sweep.design_dim + 1},{_fmt(mean_value)},{_fmt(eps)},{status}\n")


# ---------------------------------------------------------------------------
# Pipeline

def _config_hash(config: RunConfig) -> str:
    blob = json.dumps(repr(config), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def build_response(config: RunConfig):
    """The exact response callable, or None in external-table mode."""
    if config.response.kind != "synthetic":
        return None
    return DeflectionModel(
        plastic_strain=config.response.strain,
        strain_rate=config.response.strain_rate,
        temperature=config.response.temperature,
        anchor_deflection=config.response.anchor,
        stress_exponent=config.response.gamma,
    )


def build_admissible(config: RunConfig, truth: ProductDistribution) -> AdmissibleSet:
    """Admissible set from explicit constraint rows or the configured case."""
    if config.constraints.explicit:
        domain = BoxDomain.unit(config.dimension)
        cons = []
        for row in config.constraints.explicit:
            sub = None
            if row["sub"] is not None:
                lo, hi = row["sub"]
                sub = interval_subdomain(domain, row["dim"], lo, hi)
            if row["target"] == "from_truth":
                if row["kind"] == "subdomain_mass":
                    target, _ = partial_moment(truth, 1, row["dim"], *row["sub"])
                elif sub is not None:
                    _, target = partial_moment(truth, row["order"], row["dim"], *row["sub"])
                else:
                    target = moment(truth, row["order"], row["dim"])
            else:
                target = float(row["target"])
            cons.append(
                MomentConstraint(row["dim"], row["order"], target, kind=row["kind"], subdomain=sub)
            )
        return AdmissibleSet(domain, tuple(cons))
    return build_case_constraints(config.constraints.case, truth)


@dataclass
class PipelineArtifacts:
    outdir: str
    dataset_csv: str
    model_files: dict
    bounds_csv: Optional[str]
    comparison_csv: Optional[str]
    sweep_csv: Optional[str]
    manifest_json: str
    manifest: dict


def run_pipeline(config: RunConfig, stages: Sequence[str] = ("gen-data", "train", "bound", "baseline", "sweep")) -> PipelineArtifacts:
    """Execute the configured stages in order, writing artifacts and manifest.

    A stage failure raises PipelineStageError with the stage name; artifacts
    written so far stay on disk.
    """
    os.makedirs(config.output, exist_ok=True)
    manifest: dict = {
        "package_version": _package_version,
        "numpy_version": np.__version__,
        "seed": config.seed,
        "config_hash": _config_hash(config),
        "stages": {},
        "artifacts": {},
    }
    timings = manifest["stages"]
    response = build_response(config)
    truth = config.truth.build(config.dimension)

    dataset_csv = os.path.join(config.output, "dataset.csv")
    model_files: dict = {}
    bounds_csv = comparison_csv = sweep_csv = None
    bound_rows_by_threshold: dict = {}

    # -- stage: gen-data ----------------------------------------------------
    if "gen-data" in stages:
        t0 = time.perf_counter()
        try:
            if config.response.kind == "external":
                X, y = read_xy_csv(config.response.table)
                if X.shape[1] != config.dimension:
                    raise ValueError(
                        f"table {config.response.table} has {X.shape[1]} input columns, "
                        f"expected {config.dimension}"
                    )
            else:
                strata = config.data.samples // config.data.per_stratum
                lhs_cfg = LhsConfig(strata=strata, per_stratum=config.data.per_stratum, seed=config.seed)
                X = lhs_sample(BoxDomain.unit(config.dimension), lhs_cfg)
                y = evaluate_rows(response, X)
            write_xy_csv(dataset_csv, X, y)
            manifest["artifacts"]["dataset"] = dataset_csv
            manifest["samples"] = int(X.shape[0])
        except Exception as exc:
            raise PipelineStageError("gen-data", str(exc)) from exc
        timings["gen-data"] = time.perf_counter() - t0
    else:
        if not os.path.exists(dataset_csv):
            raise PipelineStageError(
                "gen-data", f"dataset not found at {dataset_csv}; run the gen-data stage first"
            )
        X, y = read_xy_csv(dataset_csv)

    # -- stage: train ---------------------------------------------------------
    models: dict = {}
    if "train" in stages:
        t0 = time.perf_counter()
        try:
            manifest["training"] = {}
            for threshold in config.thresholds:
                dataset = LabeledDataset.from_response(X, y, threshold)
                tc = TrainConfig(
                    train_size=config.surrogate.train,
                    test_size=config.surrogate.test,
                    hidden=config.surrogate.hidden,
                    batch_size=config.surrogate.batch,
                    epochs=config.surrogate.epochs,
                    adam=AdamConfig(lr=config.surrogate.lr),
                    seed=config.seed + 1,
                )
                result = train(dataset, tc)
                models[threshold] = result.model
                path = os.path.join(config.output, f"model_{threshold:g}.npz")
                save_model(result.model, path)
                model_files[threshold] = path
                manifest["training"][f"{threshold:g}"] = {
                    "train_size": tc.train_size,
                    "test_size": tc.test_size,
                    "test_accuracy": result.test_accuracy,
                    "test_bce": result.final_test_loss,
                }
            manifest["artifacts"]["models"] = model_files
        except Exception as exc:
            raise PipelineStageError("train", str(exc)) from exc
        timings["train"] = time.perf_counter() - t0
    else:
        for threshold in config.thresholds:
            path = os.path.join(config.output, f"model_{threshold:g}.npz")
            if os.path.exists(path):
                models[threshold] = load_model(path)
                model_files[threshold] = path

    # surrogate speed versus the direct pipeline it stands in for
    if models:
        first_model = next(iter(models.values()))
        probe = np.full(config.dimension, 0.5)
        surrogate_s = time_surrogate_eval(first_model, probe)
        manifest["surrogate_eval_seconds"] = surrogate_s
        if response is not None:
            direct_s = time_direct_batch(response, X, config.thresholds[0])
            manifest["direct_batch_seconds"] = direct_s
            manifest["surrogate_speedup"] = direct_s / surrogate_s

    # -- stage: bound ---------------------------------------------------------
    if "bound" in stages:
        t0 = time.perf_counter()
        try:
            if not models:
                raise ValueError(
                    f"no trained models found under {config.output}; run the train stage first"
                )
            admissible = build_admissible(config, truth)
            rows = []
            for i, threshold in enumerate(config.thresholds):
                indicator = (
                    ThresholdIndicator(threshold, response) if response is not None else None
                )
                up, lo = solve_pair(
                    admissible, models[threshold], indicator, config.solver,
                    seed=config.seed + 100 * i,
                )
                rows.append((threshold, "upper", up))
                rows.append((threshold, "lower", lo))
                bound_rows_by_threshold[threshold] = (up, lo)
                for direction, result in (("upper", up), ("lower", lo)):
                    if result.measure is not None:
                        measure_path = os.path.join(
                            config.output, f"measure_{threshold:g}_{direction}.csv"
                        )
                        with open(measure_path, "w") as fh:
                            fh.write(measure_to_csv(result.measure))
            bounds_csv = os.path.join(config.output, "bounds.csv")
            write_bounds_csv(bounds_csv, rows)
            write_restart_trace_csv(os.path.join(config.output, "bounds_restarts.csv"), rows)
            manifest["artifacts"]["bounds"] = bounds_csv
        except Exception as exc:
            raise PipelineStageError("bound", str(exc)) from exc
        timings["bound"] = time.perf_counter() - t0

    # -- stage: baseline --------------------------------------------------------
    if "baseline" in stages and config.baseline.enabled:
        t0 = time.perf_counter()
        try:
            if response is None:
                manifest["baseline"] = "skipped: no exact response in external mode"
            else:
                osc_cfg = OscSearchConfig(
                    levels=config.baseline.osc_levels,
                    base_points=config.baseline.osc_bases,
                    seed=config.seed + 7,
                )
                domain = BoxDomain.unit(config.dimension)
                osc = estimate_oscillations(response, domain, osc_cfg)
                mean_response = monte_carlo_mean(
                    truth, response, config.baseline.mc_samples, seed=config.seed + 11
                )
                comp_rows = []
                for threshold in config.thresholds:
                    indicator = ThresholdIndicator(threshold, response)
                    mc = monte_carlo_pof(truth, indicator, config.baseline.mc_samples, seed=config.seed + 11)
                    com = mcdiarmid_bound(
                        response, domain, mean_response, threshold, osc_cfg, oscillations=osc
                    )
                    pair = bound_rows_by_threshold.get(threshold)
                    if pair is None:
                        continue
                    comp_rows.append((threshold, mc, com, pair[0], pair[1]))
                comparison_csv = os.path.join(config.output, "comparison.csv")
                write_comparison_csv(comparison_csv, comp_rows)
                manifest["artifacts"]["comparison"] = comparison_csv
        except Exception as exc:
            raise PipelineStageError("baseline", str(exc)) from exc
        timings["baseline"] = time.perf_counter() - t0

    # -- stage: sweep ------------------------------------------------------------
    if "sweep" in stages and config.sweep.enabled:
        t0 = time.perf_counter()
        try:
            threshold = config.sweep.threshold
            if threshold in models:
                sweep_model = models[threshold]
            else:
                dataset = LabeledDataset.from_response(X, y, threshold)
                tc = TrainConfig(
                    train_size=config.surrogate.train,
                    test_size=config.surrogate.test,
                    hidden=config.surrogate.hidden,
                    batch_size=config.surrogate.batch,
                    epochs=config.surrogate.epochs,
                    adam=AdamConfig(lr=config.surrogate.lr),
                    seed=config.seed + 1,
                )
                sweep_model = train(dataset, tc).model
            indicator = ThresholdIndicator(threshold, response) if response is not None else None
            sweep = design_sweep(
                sweep_model, indicator, config.dimension, config.sweep.design_dim,
                config.sweep.grid, config.solver, seed=config.seed + 999,
                base_mean=config.sweep.base_mean,
            )
            sweep_csv = os.path.join(config.output, "sweep.csv")
            write_sweep_csv(sweep_csv, sweep)
            write_region_csv(os.path.join(config.output, "sweep_regions.csv"), sweep, config.sweep.eps)
            manifest["artifacts"]["sweep"] = sweep_csv
        except Exception as exc:
            raise PipelineStageError("sweep", str(exc)) from exc
        timings["sweep"] = time.perf_counter() - t0

    manifest_json = os.path.join(config.output, "manifest.json")
    with open(manifest_json, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return PipelineArtifacts(
        outdir=config.output,
        dataset_csv=dataset_csv,
        model_files=model_files,
        bounds_csv=bounds_csv,
        comparison_csv=comparison_csv,
        sweep_csv=sweep_csv,
        manifest_json=manifest_json,
        manifest=manifest,
    )


# ---------------------------------------------------------------------------
# Built-in invariant checks (the `verify` CLI subcommand)

def verify_invariants() -> list:
    """Fast self-checks of the core numerical invariants.

    Returns (name, passed, detail) triples; meant as a smoke screen for an
    installation, not a replacement for the test suite.
    """
    from .distributions import LhsConfig as _LhsConfig, lhs_sample as _lhs
    from .measures import dirac_membership, project_to_simplex
    from .optim import AdamConfig as _AdamConfig, AdamState, adam_step, finite_difference_gradient
    from .response import (
        AZ31B_LOWER,
        AZ31B_UPPER,
        FixedMaterialParams,
        JohnsonCookParams,
        jc_flow_stress,
    )
    from .surrogate import MlpModel

    checks = []

    proj = project_to_simplex([0.6, 0.6])
    twice = project_to_simplex(proj)
    ok = np.allclose(proj, [0.5, 0.5]) and np.allclose(proj, twice, atol=1e-12)
    checks.append(("simplex projection", ok, f"project([0.6, 0.6]) = {proj}"))

    ok = (
        dirac_membership(0.4, 0.4) == 1
        and dirac_membership(0.39, 0.4) == 0
        and dirac_membership(0.5, 0.4) == 1
    )
    checks.append(("half-open membership", ok, "boundary belongs to the failure set"))

    sample = _lhs(BoxDomain.unit(2), _LhsConfig(strata=8, per_stratum=3, seed=3))
    counts_ok = True
    for d in range(2):
        bins = np.floor(sample[:, d] * 8).astype(int)
        counts_ok = counts_ok and np.all(np.bincount(bins, minlength=8) == 3)
    checks.append(("LHS stratification", counts_ok, "every bin holds per_stratum points"))

    params = np.array([1.0, -2.0])
    state = AdamState.zeros(params.shape)
    updated, _ = adam_step(state, params, np.zeros_like(params), _AdamConfig())
    checks.append(("ADAM zero-gradient no-op", np.array_equal(updated, params), "params unchanged"))

    model = MlpModel.initialize((3, 8, 1), seed=5)
    x = np.array([0.3, 0.6, 0.2])
    analytic = model.input_gradient(x)
    numeric = finite_difference_gradient(lambda v: model.forward(v), x, h=1e-6)
    rel = np.max(np.abs(analytic - numeric)) / max(np.max(np.abs(numeric)), 1e-12)
    checks.append(("surrogate input gradient", rel < 1e-5, f"rel err {rel:.2e}"))

    fixed = FixedMaterialParams()
    corner_ok = True
    for values in (AZ31B_LOWER, AZ31B_UPPER):
        p = JohnsonCookParams.from_array(values)
        corner_ok = corner_ok and jc_flow_stress(p, fixed, 0.0, fixed.strain_rate_ref, fixed.temp_ref) == p.A
        corner_ok = corner_ok and jc_flow_stress(p, fixed, 0.1, 1.0, fixed.temp_melt) == 0.0
    checks.append(("flow-stress identities", corner_ok, "sigma=A at reference, 0 at melt"))

    v1 = verdict(0.05, 0.01, 0.1).status == CERTIFIED
    v2 = verdict(0.5, 0.2, 0.1).status == DECERTIFIED
    v3 = verdict(0.3, 0.05, 0.1).status == CANNOT_DECIDE
    checks.append(("verdict rule", v1 and v2 and v3, "three-way split"))

    model5 = DeflectionModel()
    base = np.full(5, 0.5)
    stronger = base.copy()
    stronger[0] = 0.9
    checks.append(
        (
            "deflection monotone in yield stress",
            model5(stronger) < model5(base),
            "larger normalized A deflects less",
        )
    )
    return checks
