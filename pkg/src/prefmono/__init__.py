"""Monotonicity audits for comparison-based preference learning."""

from .audit import (
    AuditPrediction,
    AuditReport,
    Verdict,
    audit_fully_pairwise_and_probability,
    audit_global_ladder,
    audit_gradient_descent,
    audit_individual_score,
    audit_local_pairwise,
    audit_local_pairwise_sweep,
    predict_local_delta,
)
from .data import Comparison, Dataset, add_unequivocal, intensify, loss_of
from .losses import (
    BINARY,
    REAL_LINE,
    UNIT_INTERVAL,
    ComparisonDomain,
    LossFamily,
    RootLaw,
    check_assumption_cross,
    check_assumption_max,
    cumulant,
    cumulant_prime,
    d2loss_ds2,
    dcds_cross,
    dloss_ds,
    loss_value,
)
from .scores import DPOSoftmaxModel, LinearModel, OneHotModel, ProblemSpace
from .solver import Problem, Regularizer, SolverSettings, certify_minimum, minimize

__version__ = "0.1.0"
