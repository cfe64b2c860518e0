"""Executable monotonicity audits.

Each audit perturbs a dataset in favour of ``y`` over ``z`` under ``x``
(either by adding a small-weight maximal comparison, ``mode="unequivocal"``,
or by intensifying existing comparisons, ``mode="intensification"``), then
compares the re-solved minimizer with the first-order prediction

    s_yz(theta_eps) - s_yz(theta_star) ~= eps * alpha * g' H^{-1} g,

where ``g`` is the gradient of ``s_yz`` at the optimum and ``H`` the loss
Hessian there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from .data import add_unequivocal, intensify
from .errors import NondifferentiableError, PreconditionError, SingularMatrixError
from .losses import (
    check_assumption_cross,
    check_assumption_max,
    dcds_cross,
    dloss_ds,
)
from .solver import Problem, SolverSettings, certify_minimum, minimize
from .spectral import is_max_diag_dominant

VIOLATION_TOL = 1e-9
DEFAULT_EPS = (1e-2, 1e-3, 1e-4)
MODES = ("unequivocal", "intensification")
BASIN_FACTOR = 10.0


class Verdict(str, Enum):
    HOLDS = "holds"
    VIOLATED = "violated"
    NOT_APPLICABLE = "not_applicable"

    @classmethod
    def of(cls, ok: bool) -> Verdict:
        return cls.HOLDS if ok else cls.VIOLATED


FLAVORS = ("pairwise", "fully_pairwise", "individual_score_y", "individual_score_z", "individual_probability")


def _blank_verdicts() -> dict[str, Verdict]:
    return {k: Verdict.NOT_APPLICABLE for k in FLAVORS}


@dataclass
class AuditReport:
    scenario: str
    flavor: str
    mode: str
    triple: tuple[str, str, str]
    eps: float | None = None
    theta_star: np.ndarray | None = None
    theta_eps: np.ndarray | None = None
    alpha: float | None = None
    rate_beta: float | None = None
    predicted_delta: float | None = None
    realized_delta: float | None = None
    verdicts: dict[str, Verdict] = field(default_factory=_blank_verdicts)
    assumptions: dict[str, Any] = field(default_factory=dict)
    status: str = "ok"
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def relative_residual(self) -> float | None:
        if self.predicted_delta is None or self.realized_delta is None:
            return None
        diff = abs(self.realized_delta - self.predicted_delta)
        if self.predicted_delta == 0:
            return diff
        return diff / abs(self.predicted_delta)

    def to_dict(self) -> dict:
        def conv(v):
            if isinstance(v, np.ndarray):
                return v.tolist()
            if isinstance(v, Enum):
                return v.value
            if isinstance(v, dict):
                return {str(k): conv(u) for k, u in v.items()}
            if isinstance(v, (list, tuple)):
                return [conv(u) for u in v]
            if isinstance(v, (np.floating, np.integer, np.bool_)):
                return v.item()
            if hasattr(v, "to_dict"):
                return v.to_dict()
            return v

        return {
            "scenario": self.scenario,
            "flavor": self.flavor,
            "mode": self.mode,
            "triple": list(self.triple),
            "eps": self.eps,
            "status": self.status,
            "alpha": self.alpha,
            "rate_beta": self.rate_beta,
            "predicted_delta": self.predicted_delta,
            "realized_delta": self.realized_delta,
            "relative_residual": self.relative_residual,
            "verdicts": conv(self.verdicts),
            "assumptions": conv(self.assumptions),
            "theta_star": conv(self.theta_star),
            "theta_eps": conv(self.theta_eps),
            "details": conv(self.details),
        }


@dataclass(frozen=True)
class AuditPrediction:
    alpha: float
    rate_beta: float
    gradient_s: np.ndarray
    mode: str
    direction: np.ndarray
    occurrences: int = 1

    def predicted_delta(self, eps: float) -> float:
        return eps * self.rate_beta


# --------------------------------------------------------------------------
# Hypotheses and first-order prediction
# --------------------------------------------------------------------------


def _check_mode(mode):
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def _grad_sdiff(problem: Problem, theta, x, y, z):
    return problem.model.score_gradient(theta, x, y) - problem.model.score_gradient(theta, x, z)


def _sensitivity(problem: Problem, theta, x, y, z, mode) -> tuple[float, int]:
    """Loss sensitivity alpha and the number of contributing records."""
    fam = problem.family
    sdiff = problem.model.score_difference(theta, x, y, z)
    if mode == "unequivocal":
        return -float(dloss_ds(fam, sdiff, fam.domain.max)), 1
    dom = fam.domain
    alpha, count = 0.0, 0
    for i, orient in problem.dataset.occurrences(x, y, z):
        rec = problem.dataset.comparisons[i]
        # a record already at the boundary in the push direction is clipped
        if dom.has_max and ((orient > 0 and rec.c >= dom.max) or (orient < 0 and rec.c <= dom.min)):
            continue
        s_i = orient * sdiff
        alpha += rec.weight * -float(dcds_cross(fam, s_i, rec.c))
        count += 1
    return alpha, count


def check_hypotheses(problem: Problem, theta, x, y, z, mode, s_grid=None) -> dict[str, Any]:
    """Evaluate every hypothesis of the local theorems at ``theta``.

    The returned dict maps hypothesis names to booleans, plus the assumption
    verdicts and the minimum certificate for reporting.
    """
    _check_mode(mode)
    fam = problem.family
    cert = certify_minimum(problem, theta)
    out: dict[str, Any] = {"certificate": cert, "strict_minimum": cert.is_strict_local_min}
    g = _grad_sdiff(problem, theta, x, y, z)
    out["gradient_nonzero"] = bool(np.any(g != 0))
    if mode == "unequivocal":
        out["domain_ok"] = fam.domain.has_max
        if fam.domain.has_max:
            verdict = check_assumption_max(fam, s_grid)
            s_star = problem.model.score_difference(theta, x, y, z)
            try:
                d = float(dloss_ds(fam, s_star, fam.domain.max))
            except NondifferentiableError:
                d = math.nan
            out["max_comparison"] = verdict
            out["max_comparison_at_optimum"] = {"s": s_star, "dloss_ds": d, "holds": bool(d < 0)}
            out["assumption_ok"] = verdict.holds
        else:
            out["assumption_ok"] = False
    else:
        out["domain_ok"] = fam.domain.is_interval and fam.is_gbt
        out["triple_present"] = bool(problem.dataset.occurrences(x, y, z))
        if out["domain_ok"]:
            verdict = check_assumption_cross(fam, s_grid)
            out["negative_cross_partial"] = verdict
            out["assumption_ok"] = verdict.holds
        else:
            out["assumption_ok"] = False
        # hypothesis quantified over the whole dataset
        all_nonzero = True
        for rec in problem.dataset:
            if not np.any(_grad_sdiff(problem, theta, rec.x, rec.y, rec.z) != 0):
                all_nonzero = False
                break
        out["gradient_nonzero_all_data"] = all_nonzero
    return out


def _require(hyp: dict, mode: str):
    if not hyp["domain_ok"]:
        if mode == "unequivocal":
            raise PreconditionError("domain_max", "unequivocal additions need a comparison domain with a maximum")
        raise PreconditionError("interval_domain", "intensification needs a GBT loss on an interval domain")
    if mode == "intensification" and not hyp["triple_present"]:
        raise PreconditionError("triple_present", "the audited triple does not occur in the dataset")
    if not hyp["strict_minimum"]:
        cert = hyp["certificate"]
        raise PreconditionError(
            "strict_minimum",
            f"theta is not a certified strict minimum (|grad|={cert.grad_norm:.3g}, "
            f"min eigenvalue={cert.min_eigenvalue:.3g})",
        )


def _solve_linear(H, v):
    try:
        return np.linalg.solve(H, v)
    except np.linalg.LinAlgError:
        raise SingularMatrixError("loss Hessian is singular at theta") from None


def predict_local_delta(problem: Problem, theta_star, x, y, z, mode, strict: bool = True) -> AuditPrediction:
    """First-order slope of ``s_yz`` in the perturbation weight.

    With ``strict=True`` every theorem hypothesis other than the nonzero
    gradient must hold, else ``PreconditionError`` names the first failure.
    With ``strict=False`` only structural requirements are enforced and the
    slope is computed even when its sign is not guaranteed.
    """
    _check_mode(mode)
    theta_star = problem.model.check_theta(theta_star)
    hyp = check_hypotheses(problem, theta_star, x, y, z, mode)
    if strict:
        _require(hyp, mode)
        if not hyp["assumption_ok"]:
            name = "max_comparison" if mode == "unequivocal" else "negative_cross_partial"
            raise PreconditionError(name, f"loss assumption fails: {hyp.get(name)}")
    elif not hyp["domain_ok"]:
        _require(hyp, mode)
    alpha, count = _sensitivity(problem, theta_star, x, y, z, mode)
    g = _grad_sdiff(problem, theta_star, x, y, z)
    u = _solve_linear(problem.hessian(theta_star), g)
    beta = alpha * float(g @ u)
    return AuditPrediction(alpha, beta, g, mode, alpha * u, count)


def perturb(problem: Problem, x, y, z, mode, eps) -> Problem:
    _check_mode(mode)
    if mode == "unequivocal":
        return problem.with_dataset(add_unequivocal(problem.dataset, x, y, z, eps))
    return problem.with_dataset(intensify(problem.dataset, x, y, z, eps))


def solve_base(problem: Problem, settings: SolverSettings | None = None, theta_init=None) -> np.ndarray:
    res = minimize(problem, theta_init, settings)
    return res.theta_star


def _assumption_summary(hyp: dict) -> dict:
    keep = {}
    for k, v in hyp.items():
        keep[k] = v.to_dict() if hasattr(v, "to_dict") else v
    return keep


# --------------------------------------------------------------------------
# Local pairwise audit
# --------------------------------------------------------------------------


def audit_local_pairwise(problem: Problem, x, y, z, mode, eps, theta_star=None,
                         settings: SolverSettings | None = None, scenario: str = "") -> AuditReport:
    return audit_local_pairwise_sweep(problem, x, y, z, mode, [eps], theta_star, settings, scenario)[0]


def audit_local_pairwise_sweep(problem: Problem, x, y, z, mode, eps_list=DEFAULT_EPS, theta_star=None,
                               settings: SolverSettings | None = None, scenario: str = "") -> list[AuditReport]:
    """Re-solve after each perturbation size and compare with the prediction.

    Raises ``PreconditionError`` when the audit is structurally meaningless
    (no strict minimum, wrong domain, triple absent).  Loss assumptions
    that fail are recorded rather than raised, so counterexamples can be
    reproduced.
    """
    _check_mode(mode)
    settings = settings or SolverSettings()
    if theta_star is None:
        base = minimize(problem, None, settings)
        theta_star = base.theta_star
    theta_star = problem.model.check_theta(theta_star)
    hyp = check_hypotheses(problem, theta_star, x, y, z, mode)
    _require(hyp, mode)
    pred = predict_local_delta(problem, theta_star, x, y, z, mode, strict=False)
    s0 = problem.model.score_difference(theta_star, x, y, z)
    # ||theta_eps - theta_star|| <= C * eps with C = 10 * |alpha| * ||H^{-1} g||
    basin_c = BASIN_FACTOR * float(np.linalg.norm(pred.direction))
    reports = []
    for eps in eps_list:
        eps = float(eps)
        if eps < 0:
            raise ValueError(f"eps must be nonnegative, got {eps}")
        rep = AuditReport(scenario, "local_pairwise", mode, (x, y, z), eps, theta_star.copy(),
                          alpha=pred.alpha, rate_beta=pred.rate_beta, predicted_delta=eps * pred.rate_beta,
                          assumptions=_assumption_summary(hyp))
        res = minimize(perturb(problem, x, y, z, mode, eps), theta_star, settings)
        rep.theta_eps = res.theta_star
        rep.details["solver"] = {"converged": res.converged, "iterations": res.iterations, "grad_norm": res.grad_norm}
        if not res.converged:
            rep.status = "inconclusive"
            reports.append(rep)
            continue
        rep.realized_delta = problem.model.score_difference(res.theta_star, x, y, z) - s0
        step = float(np.linalg.norm(res.theta_star - theta_star))
        rep.details["step_norm"] = step
        rep.details["in_basin"] = bool(step <= basin_c * eps + 1e-12)
        rep.details["occurrences"] = pred.occurrences
        rep.verdicts["pairwise"] = Verdict.of(rep.realized_delta >= -VIOLATION_TOL)
        reports.append(rep)
    return reports


# --------------------------------------------------------------------------
# Global ladder
# --------------------------------------------------------------------------


def global_preconditions(problem: Problem, mode) -> list[str]:
    """Reasons the global (strongly convex) theorem does not apply; empty if it does."""
    _check_mode(mode)
    reasons = []
    if problem.regularizer.kind != "l2":
        reasons.append("regularizer is not strongly convex (need l2)")
    if not (problem.family.convex and problem.family.smooth):
        reasons.append(f"{problem.family.kind} loss is not smooth and convex")
    if not problem.model.zero_score_hessian:
        reasons.append(f"{problem.model.kind} scores are not linear in theta")
    if mode == "unequivocal":
        if not problem.family.domain.has_max or not check_assumption_max(problem.family).holds:
            reasons.append("maximal-comparison assumption fails")
    else:
        if not problem.family.domain.is_interval or not problem.family.is_gbt \
                or not check_assumption_cross(problem.family).holds:
            reasons.append("negative cross-partial assumption fails")
    return reasons


def audit_global_ladder(problem: Problem, x, y, z, mode, eps_ladder, settings: SolverSettings | None = None,
                        scenario: str = "") -> AuditReport:
    """Re-solve along an increasing ladder of cumulative perturbation sizes
    and check that ``s_yz`` never decreases."""
    _check_mode(mode)
    ladder = [float(e) for e in eps_ladder]
    if any(b < a for a, b in zip(ladder, ladder[1:])) or any(e < 0 for e in ladder):
        raise ValueError(f"eps ladder must be nonnegative and nondecreasing: {ladder}")
    settings = settings or SolverSettings()
    rep = AuditReport(scenario, "global_ladder", mode, (x, y, z))
    reasons = global_preconditions(problem, mode)
    if reasons:
        rep.status = "not_applicable"
        rep.details["reasons"] = reasons
        return rep
    base = minimize(problem, None, settings)
    rep.theta_star = base.theta_star
    seq = [problem.model.score_difference(base.theta_star, x, y, z)]
    theta = base.theta_star
    converged = base.converged
    for eps in ladder:
        res = minimize(perturb(problem, x, y, z, mode, eps), theta, settings)
        converged = converged and res.converged
        theta = res.theta_star
        seq.append(problem.model.score_difference(theta, x, y, z))
    rep.theta_eps = theta
    rep.eps = ladder[-1] if ladder else 0.0
    rep.realized_delta = seq[-1] - seq[0]
    steps = np.diff(seq)
    rep.details["ladder"] = ladder
    rep.details["sequence"] = seq
    rep.details["min_step"] = float(steps.min()) if steps.size else 0.0
    if not converged:
        rep.status = "inconclusive"
        return rep
    rep.verdicts["pairwise"] = Verdict.of(bool(np.all(steps >= -VIOLATION_TOL)))
    return rep


# --------------------------------------------------------------------------
# Individual-score audit
# --------------------------------------------------------------------------


def influence_matrix(problem: Problem, theta, x) -> np.ndarray:
    """G = J H^{-1} J' with J the score gradients of all alternatives of x."""
    J = problem.model.background_jacobian(theta, x)
    return J @ _solve_linear(problem.hessian(theta), J.T)


def _link(dominant: bool, violated: bool) -> str:
    if dominant and not violated:
        return "dominance holds; individual-score monotonicity realized as guaranteed"
    if dominant and violated:
        return "dominance holds yet a violation was realized: inconsistent with the sufficient condition"
    if violated:
        return "dominance fails; individual-score violation realized"
    return "dominance fails; no violation realized (condition is sufficient, not necessary)"


def audit_individual_score(problem: Problem, x, y, z, eps, theta_star=None, settings: SolverSettings | None = None,
                           scenario: str = "", mode: str = "intensification") -> AuditReport:
    """Check ``s_y`` rises and ``s_z`` falls, and relate the outcome to
    max-diagonal dominance of the influence matrix G."""
    settings = settings or SolverSettings()
    rep = AuditReport(scenario, "individual_score", mode, (x, y, z), float(eps))
    sp = problem.model.space
    if sp.n_alternatives < 2:
        rep.status = "not_applicable"
        rep.details["reasons"] = ["background has fewer than two alternatives"]
        return rep
    if theta_star is None:
        theta_star = minimize(problem, None, settings).theta_star
    hyp = check_hypotheses(problem, theta_star, x, y, z, mode)
    _require(hyp, mode)
    rep.assumptions = _assumption_summary(hyp)
    rep.theta_star = theta_star
    alpha, _ = _sensitivity(problem, theta_star, x, y, z, mode)
    G = influence_matrix(problem, theta_star, x)
    iy, iz = sp.aindex(y), sp.aindex(z)
    dom = is_max_diag_dominant(G)
    rate_y = alpha * (G[iy, iy] - G[iy, iz])
    rate_z = alpha * (G[iz, iy] - G[iz, iz])
    rep.alpha = alpha
    rep.rate_beta = rate_y - rate_z
    rep.predicted_delta = rep.eps * rep.rate_beta
    rep.details.update({
        "G": G,
        "G_yz_block": G[np.ix_([iy, iz], [iy, iz])],
        "dominance": dom.to_dict(),
        "predicted_rate_y": rate_y,
        "predicted_rate_z": rate_z,
    })
    res = minimize(perturb(problem, x, y, z, mode, rep.eps), theta_star, settings)
    rep.theta_eps = res.theta_star
    if not res.converged:
        rep.status = "inconclusive"
        return rep
    m = problem.model
    dy = m.score(res.theta_star, x, y) - m.score(theta_star, x, y)
    dz = m.score(res.theta_star, x, z) - m.score(theta_star, x, z)
    rep.realized_delta = dy - dz
    rep.details["realized_delta_y"] = dy
    rep.details["realized_delta_z"] = dz
    rep.verdicts["pairwise"] = Verdict.of(rep.realized_delta >= -VIOLATION_TOL)
    rep.verdicts["individual_score_y"] = Verdict.of(dy >= -VIOLATION_TOL)
    rep.verdicts["individual_score_z"] = Verdict.of(dz <= VIOLATION_TOL)
    violated = dy < -VIOLATION_TOL or dz > VIOLATION_TOL
    rep.details["link"] = _link(dom.holds, violated)
    return rep


# --------------------------------------------------------------------------
# Fully-pairwise and probability audit
# --------------------------------------------------------------------------


def default_mode(problem: Problem) -> str:
    fam = problem.family
    return "intensification" if fam.is_gbt and fam.domain.is_interval else "unequivocal"


def _fully_pairwise_outcome(m, theta0, theta1, x, y, z) -> dict:
    sp = m.space
    s0 = m.scores(theta0)[sp.bindex(x)]
    s1 = m.scores(theta1)[sp.bindex(x)]
    iy, iz = sp.aindex(y), sp.aindex(z)
    others_y = [w for w in range(sp.n_alternatives) if w != iy]
    others_z = [w for w in range(sp.n_alternatives) if w != iz]
    d_yw = {sp.alternatives[w]: float((s1[iy] - s1[w]) - (s0[iy] - s0[w])) for w in others_y}
    d_zw = {sp.alternatives[w]: float((s1[iz] - s1[w]) - (s0[iz] - s0[w])) for w in others_z}
    p0 = m.probabilities(theta0, x)
    p1 = m.probabilities(theta1, x)
    fp_y = all(v >= -VIOLATION_TOL for v in d_yw.values())
    fp_z = all(v <= VIOLATION_TOL for v in d_zw.values())
    dpy, dpz = float(p1[iy] - p0[iy]), float(p1[iz] - p0[iz])
    prob_y = dpy >= -VIOLATION_TOL
    prob_z = dpz <= VIOLATION_TOL
    return {
        "delta_s_yw": d_yw,
        "delta_s_zw": d_zw,
        "delta_prob_y": dpy,
        "delta_prob_z": dpz,
        "fully_pairwise_y": fp_y,
        "fully_pairwise_z": fp_z,
        "probability_y": prob_y,
        "probability_z": prob_z,
        # softmax probabilities are increasing in each s_yw
        "implication_consistent": (not fp_y or prob_y) and (not fp_z or prob_z),
    }


def audit_fully_pairwise_and_probability(problem: Problem, x, y, z, eps, mode: str | None = None, theta_star=None,
                                         settings: SolverSettings | None = None, scenario: str = "") -> AuditReport:
    """Check every ``s_yw`` rises (and every ``s_zw`` falls) and the induced
    probability movements; ``details['implication_consistent']`` records
    whether fully-pairwise monotonicity carried over to probabilities."""
    settings = settings or SolverSettings()
    mode = mode or default_mode(problem)
    rep = AuditReport(scenario, "fully_pairwise", mode, (x, y, z), float(eps))
    if theta_star is None:
        theta_star = minimize(problem, None, settings).theta_star
    hyp = check_hypotheses(problem, theta_star, x, y, z, mode)
    _require(hyp, mode)
    rep.assumptions = _assumption_summary(hyp)
    rep.theta_star = theta_star
    pred = predict_local_delta(problem, theta_star, x, y, z, mode, strict=False)
    rep.alpha, rep.rate_beta = pred.alpha, pred.rate_beta
    rep.predicted_delta = rep.eps * pred.rate_beta
    res = minimize(perturb(problem, x, y, z, mode, rep.eps), theta_star, settings)
    rep.theta_eps = res.theta_star
    if not res.converged:
        rep.status = "inconclusive"
        return rep
    m = problem.model
    rep.realized_delta = m.score_difference(res.theta_star, x, y, z) - m.score_difference(theta_star, x, y, z)
    out = _fully_pairwise_outcome(m, theta_star, res.theta_star, x, y, z)
    rep.details.update(out)
    rep.verdicts["pairwise"] = Verdict.of(rep.realized_delta >= -VIOLATION_TOL)
    rep.verdicts["fully_pairwise"] = Verdict.of(out["fully_pairwise_y"] and out["fully_pairwise_z"])
    rep.verdicts["individual_probability"] = Verdict.of(out["probability_y"] and out["probability_z"])
    return rep


# --------------------------------------------------------------------------
# Single gradient step
# --------------------------------------------------------------------------


def gradient_step_analysis(model, family, theta, x, y, z, lr: float) -> dict:
    """One explicit gradient step on ``loss(s_yz, max C)`` and its effects.

    Returns the predicates that imply each monotonicity flavor, the
    continuous-time rates of change, the realized deltas and the new theta.
    """
    theta = model.check_theta(theta)
    if not family.domain.has_max:
        raise PreconditionError("domain_max", "gradient-step audits need a comparison domain with a maximum")
    sp = model.space
    cmax = family.domain.max
    s_before = model.scores(theta)[sp.bindex(x)]
    iy, iz = sp.aindex(y), sp.aindex(z)
    dl = float(dloss_ds(family, s_before[iy] - s_before[iz], cmax))
    alpha = -dl
    J = model.background_jacobian(theta, x)
    g_y, g_z = J[iy], J[iz]
    g_yz = g_y - g_z
    theta_new = theta + lr * alpha * g_yz
    s_after = model.scores(theta_new)[sp.bindex(x)]
    others = [w for w in range(sp.n_alternatives) if w != iy]
    inner_yw = {sp.alternatives[w]: float((g_y - J[w]) @ g_yz) for w in others}
    # geometric conditions only guarantee a sign when the step pushes s_yz up
    pushes_up = alpha >= 0
    predicates = {
        "pairwise": pushes_up and bool(np.any(g_yz != 0)),
        "individual_score_y": pushes_up and bool(g_yz @ g_y > 0),
        "individual_score_z": pushes_up and bool(g_yz @ g_z < 0),
        "fully_pairwise": pushes_up and bool(others) and all(v > 0 for v in inner_yw.values()),
    }
    rates = {
        "pairwise": alpha * float(g_yz @ g_yz),
        "individual_score_y": alpha * float(g_y @ g_yz),
        "individual_score_z": alpha * float(g_z @ g_yz),
        "fully_pairwise": {w: alpha * v for w, v in inner_yw.items()},
    }
    d = s_after - s_before
    p0, p1 = model.probabilities(theta, x), model.probabilities(theta_new, x)
    deltas = {
        "pairwise": float(d[iy] - d[iz]),
        "individual_score_y": float(d[iy]),
        "individual_score_z": float(d[iz]),
        "fully_pairwise": {sp.alternatives[w]: float(d[iy] - d[w]) for w in others},
        "probability_y": float(p1[iy] - p0[iy]),
        "probability_z": float(p1[iz] - p0[iz]),
    }
    return {
        "alpha": alpha,
        "score_y_before": float(s_before[iy]),
        "score_z_before": float(s_before[iz]),
        "predicates": predicates,
        "rates": rates,
        "deltas": deltas,
        "theta_new": theta_new,
    }


def _rate_error(realized, rate, eps):
    diff = abs(realized / eps - rate) if eps else 0.0
    return diff / abs(rate) if rate else diff


def audit_gradient_descent(problem: Problem, theta, x, y, z, eps, scenario: str = "") -> AuditReport:
    """Single explicit gradient step with learning rate ``eps`` on the datum
    ``(x, y, z, max C)`` with no regularizer."""
    if problem.regularizer.kind != "none":
        raise PreconditionError("nil_regularizer", "gradient-step audits assume no regularizer")
    eps = float(eps)
    rep = AuditReport(scenario, "gradient_descent", "unequivocal", (x, y, z), eps)
    a = gradient_step_analysis(problem.model, problem.family, theta, x, y, z, eps)
    rep.theta_star = np.asarray(theta, dtype=float).copy()
    rep.theta_eps = a["theta_new"]
    rep.alpha = a["alpha"]
    rep.rate_beta = a["rates"]["pairwise"]
    rep.predicted_delta = eps * rep.rate_beta
    rep.realized_delta = a["deltas"]["pairwise"]
    rep.assumptions = {"max_comparison": check_assumption_max(problem.family).to_dict(),
                       "alpha_positive": a["alpha"] > 0}
    dl = a["deltas"]
    fp_y = all(v >= -VIOLATION_TOL for v in dl["fully_pairwise"].values())
    rep.verdicts["pairwise"] = Verdict.of(dl["pairwise"] >= -VIOLATION_TOL)
    rep.verdicts["individual_score_y"] = Verdict.of(dl["individual_score_y"] >= -VIOLATION_TOL)
    rep.verdicts["individual_score_z"] = Verdict.of(dl["individual_score_z"] <= VIOLATION_TOL)
    rep.verdicts["fully_pairwise"] = Verdict.of(fp_y)
    rep.verdicts["individual_probability"] = Verdict.of(dl["probability_y"] >= -VIOLATION_TOL)
    rates = a["rates"]
    rate_errors = {
        "pairwise": _rate_error(dl["pairwise"], rates["pairwise"], eps),
        "individual_score_y": _rate_error(dl["individual_score_y"], rates["individual_score_y"], eps),
        "individual_score_z": _rate_error(dl["individual_score_z"], rates["individual_score_z"], eps),
        "fully_pairwise": {w: _rate_error(dl["fully_pairwise"][w], r, eps) for w, r in rates["fully_pairwise"].items()},
    }
    rep.details.update({
        "predicates": a["predicates"],
        "rates": rates,
        "deltas": dl,
        "rate_relative_errors": rate_errors,
        "implication_consistent": (not fp_y) or dl["probability_y"] >= -VIOLATION_TOL,
    })
    return rep
