"""Optimal probability-of-failure bounds under partial distribution information.

Given box-constrained inputs and a handful of (possibly subdomain) moment
constraints, the package computes the least upper and greatest lower bound on
a system's failure probability by optimizing over finitely supported extremal
measures, guided by a trained neural classifier standing in for the exact
pass/fail indicator.
"""

__version__ = "0.1.0"

from .baselines import ComBound, McEstimate, mcdiarmid_bound, monte_carlo_pof
from .certify import Verdict, design_sweep, run_pipeline, solve_pair, verdict
from .config import RunConfig, load_config
from .constraints import (
    AdmissibleSet,
    CaseSpec,
    MomentConstraint,
    PenaltyWeights,
    build_case_constraints,
    penalty_term,
    residual,
)
from .distributions import (
    BimodalMixtureLaw,
    LhsConfig,
    ProductDistribution,
    TruncatedGaussianLaw,
    UniformLaw,
    lhs_sample,
    moment,
    partial_moment,
    sample_iid,
)
from .measures import (
    BoxDomain,
    DiscreteMeasure,
    dirac_membership,
    expectation,
    pof_under_measure,
    project_to_simplex,
)
from .optim import AdamConfig, AdamState, adam_step, finite_difference_gradient
from .response import (
    DeflectionModel,
    FixedMaterialParams,
    JohnsonCookParams,
    ParamBounds,
    ThresholdIndicator,
    denormalize,
    jc_flow_stress,
    normalize,
)
from .solver import (
    AnalyticLogitSurrogate,
    BoundResult,
    MeasureParams,
    OuqProblem,
    brute_force_bound,
    optimize_restart,
    ouq_loss,
    solve,
)
from .surrogate import (
    LabeledDataset,
    MlpModel,
    TrainConfig,
    bce_loss,
    load_model,
    save_model,
    train,
)
