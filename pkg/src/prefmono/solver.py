"""Minimization of the regularized comparison loss.

``Problem`` bundles a dataset, a loss family, a score model and a
regularizer.  Gradients and Hessians are analytic; ``minimize`` runs a damped
Newton method with an Armijo line search and falls back to gradient steps
when Newton directions fail to descend.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from .data import Dataset
from .errors import InputError, NondifferentiableError
from .losses import LossFamily, d2loss_ds2, dloss_ds, loss_value
from .scores import ScoreModel

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Regularizer:
    """Either nothing, or ``strength/2 * ||theta - center||^2``."""

    kind: Literal["none", "l2"] = "none"
    strength: float = 0.0
    center: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind == "l2":
            if not (math.isfinite(self.strength) and self.strength > 0):
                raise InputError(f"l2 strength must be positive, got {self.strength}")
            if self.center is not None:
                object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        elif self.kind != "none":
            raise InputError(f"unknown regularizer {self.kind!r}")

    @classmethod
    def none(cls) -> Regularizer:
        return cls("none")

    @classmethod
    def l2(cls, strength: float, center=None) -> Regularizer:
        return cls("l2", float(strength), None if center is None else tuple(center))

    def _center(self, theta):
        if self.center is None:
            return np.zeros_like(theta)
        c = np.asarray(self.center)
        if c.shape != theta.shape:
            raise InputError(f"regularizer center has length {c.size}, theta has {theta.size}")
        return c

    def value(self, theta) -> float:
        if self.kind == "none":
            return 0.0
        diff = theta - self._center(theta)
        return 0.5 * self.strength * float(diff @ diff)

    def gradient(self, theta) -> np.ndarray:
        if self.kind == "none":
            return np.zeros_like(theta)
        return self.strength * (theta - self._center(theta))

    def hessian(self, dim: int) -> np.ndarray:
        if self.kind == "none":
            return np.zeros((dim, dim))
        return self.strength * np.eye(dim)

    def start(self, dim: int) -> np.ndarray:
        if self.kind == "l2" and self.center is not None:
            return np.array(self.center, dtype=float)
        return np.zeros(dim)

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "l2":
            d["strength"] = self.strength
            if self.center is not None:
                d["center"] = list(self.center)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> Regularizer:
        kind = d.get("kind", "none")
        if kind == "l2":
            return cls.l2(d.get("strength", 1.0), d.get("center"))
        return cls(kind)


@dataclass(frozen=True)
class Problem:
    """Loss(theta) = R(theta) + sum_i w_i * loss(s_{y_i z_i | x_i}(theta), c_i).

    With ``gauge=True`` (one-hot and DPO models only) a penalty
    ``1/2 * sum_x (sum_y theta_xy)^2`` removes the per-background translation
    kernel without moving any score difference.
    """

    dataset: Dataset
    family: LossFamily
    model: ScoreModel
    regularizer: Regularizer = field(default_factory=Regularizer.none)
    gauge: bool = False

    def __post_init__(self):
        if self.dataset.domain != self.family.domain:
            raise InputError(f"dataset domain {self.dataset.domain} differs from loss domain {self.family.domain}")
        sp = self.model.space
        try:
            ny = np.array([sp.node(r.x, r.y) for r in self.dataset], dtype=int)
            nz = np.array([sp.node(r.x, r.z) for r in self.dataset], dtype=int)
        except KeyError as exc:
            raise InputError(f"dataset refers to {exc.args[0]}") from None
        if self.regularizer.center is not None and len(self.regularizer.center) != self.model.dim:
            raise InputError(f"regularizer center has length {len(self.regularizer.center)}, model dim is {self.model.dim}")
        if self.gauge and self.model.kind not in ("one_hot", "dpo_softmax"):
            raise InputError("gauge fixing is only defined for one_hot and dpo_softmax models")
        object.__setattr__(self, "_ny", ny)
        object.__setattr__(self, "_nz", nz)
        object.__setattr__(self, "_c", np.array([r.c for r in self.dataset], dtype=float))
        object.__setattr__(self, "_w", np.array([r.weight for r in self.dataset], dtype=float))

    @property
    def dim(self) -> int:
        return self.model.dim

    def with_dataset(self, dataset: Dataset) -> Problem:
        return replace(self, dataset=dataset)

    def with_regularizer(self, regularizer: Regularizer) -> Problem:
        return replace(self, regularizer=regularizer)

    def score_differences(self, theta) -> np.ndarray:
        flat = self.model.scores(theta).ravel()
        return flat[self._ny] - flat[self._nz]

    def _gauge_matrix(self):
        nb, na = self.model.space.n_backgrounds, self.model.space.n_alternatives
        return np.kron(np.eye(nb), np.ones((1, na)))

    def loss(self, theta) -> float:
        theta = self.model.check_theta(theta)
        total = self.regularizer.value(theta)
        if self.gauge:
            p = self._gauge_matrix() @ theta
            total += 0.5 * float(p @ p)
        if len(self._c):
            s = self.score_differences(theta)
            total += float(self._w @ np.atleast_1d(loss_value(self.family, s, self._c)))
        return float(total)

    def _dloss(self, s):
        try:
            return np.atleast_1d(dloss_ds(self.family, s, self._c))
        except NondifferentiableError:
            bad = [i for i, si in enumerate(s) if abs(1.0 - self._c[i] * si) <= 1e-12]
            raise NondifferentiableError(
                f"loss not differentiable at datum {bad[0]} ({self.dataset.comparisons[bad[0]]})"
            ) from None

    def _node_coefficients(self, theta):
        s = self.score_differences(theta)
        coef = np.zeros(self.model.space.n_backgrounds * self.model.space.n_alternatives)
        dl = self._w * self._dloss(s)
        np.add.at(coef, self._ny, dl)
        np.add.at(coef, self._nz, -dl)
        return s, coef

    def gradient(self, theta) -> np.ndarray:
        theta = self.model.check_theta(theta)
        g = self.regularizer.gradient(theta)
        if self.gauge:
            P = self._gauge_matrix()
            g = g + P.T @ (P @ theta)
        if len(self._c):
            _, coef = self._node_coefficients(theta)
            g = g + self.model.jacobian(theta).T @ coef
        return g

    def hessian(self, theta) -> np.ndarray:
        theta = self.model.check_theta(theta)
        H = self.regularizer.hessian(self.dim)
        if self.gauge:
            P = self._gauge_matrix()
            H = H + P.T @ P
        if len(self._c):
            s, coef = self._node_coefficients(theta)
            J = self.model.jacobian(theta)
            A = J[self._ny] - J[self._nz]
            curv = self._w * np.atleast_1d(d2loss_ds2(self.family, s, self._c))
            H = H + A.T @ (curv[:, None] * A)
            if not self.model.zero_score_hessian:
                na = self.model.space.n_alternatives
                for b, x in enumerate(self.model.space.backgrounds):
                    block = coef[b * na:(b + 1) * na]
                    if np.any(block != 0):
                        H = H + np.tensordot(block, self.model.background_hessian(theta, x), axes=1)
        return 0.5 * (H + H.T)


def gradient(problem: Problem, theta) -> np.ndarray:
    return problem.gradient(theta)


def hessian(problem: Problem, theta) -> np.ndarray:
    return problem.hessian(theta)


@dataclass(frozen=True)
class SolverSettings:
    tol: float = 1e-10
    max_iter: int = 200
    damping: float = 1e-10
    armijo: float = 1e-4

    def to_dict(self) -> dict:
        return {"tol": self.tol, "max_iter": self.max_iter, "damping": self.damping, "armijo": self.armijo}

    @classmethod
    def from_dict(cls, d: dict) -> SolverSettings:
        return cls(**{k: d[k] for k in ("tol", "max_iter", "damping", "armijo") if k in d})


@dataclass(frozen=True)
class SolveResult:
    theta_star: np.ndarray
    grad_norm: float
    hessian_min_eigenvalue: float
    converged: bool
    iterations: int
    damped: bool = False
    message: str = ""


def _damped_cholesky(H, base):
    """Cholesky of H + mu*I with the smallest mu from a geometric ladder."""
    mu = 0.0
    scale = max(1.0, float(np.max(np.abs(np.diag(H))))) if H.size else 1.0
    for _ in range(60):
        try:
            return np.linalg.cholesky(H + mu * np.eye(len(H))), mu
        except np.linalg.LinAlgError:
            mu = base * scale if mu == 0.0 else mu * 10.0
    raise np.linalg.LinAlgError("could not regularize Hessian")


def _newton_direction(H, g, base):
    L, mu = _damped_cholesky(H, base)
    y = np.linalg.solve(L, -g)
    return np.linalg.solve(L.T, y), mu


def minimize(problem: Problem, theta_init=None, settings: SolverSettings | None = None) -> SolveResult:
    """Damped Newton descent to ``max|grad| <= settings.tol``.

    Nonconvergence is reported through ``converged=False``, never raised.
    """
    settings = settings or SolverSettings()
    theta = problem.regularizer.start(problem.dim) if theta_init is None else np.array(theta_init, dtype=float)
    theta = problem.model.check_theta(theta)
    damped = False
    f = problem.loss(theta)
    g = problem.gradient(theta)
    gnorm = float(np.max(np.abs(g))) if g.size else 0.0
    it = 0
    message = "converged"
    while gnorm > settings.tol:
        if it >= settings.max_iter:
            message = "iteration cap reached"
            break
        it += 1
        H = problem.hessian(theta)
        d, mu = _newton_direction(H, g, settings.damping)
        if mu > 0:
            damped = True
        slope = float(g @ d)
        if not slope < 0:
            d, slope = -g, -float(g @ g)
        accepted = False
        for direction in (d, -g):
            if direction is not d:
                slope = -float(g @ g)
            t = 1.0
            while t > 1e-14:
                cand = theta + t * direction
                fc = problem.loss(cand)
                gc = problem.gradient(cand)
                gcn = float(np.max(np.abs(gc)))
                if fc <= f + settings.armijo * t * slope or (fc <= f + 1e-12 * max(1.0, abs(f)) and gcn < gnorm):
                    accepted = True
                    break
                t *= 0.5
            if accepted:
                break
        if not accepted:
            message = "line search stalled"
            break
        theta, f, g, gnorm = cand, fc, gc, gcn
    lam_min = float(np.linalg.eigvalsh(problem.hessian(theta))[0])
    converged = gnorm <= settings.tol
    if not converged:
        log.debug("minimize stopped after %d iterations: %s (|g|=%.3g)", it, message, gnorm)
    return SolveResult(theta, gnorm, lam_min, converged, it, damped, message)


@dataclass(frozen=True)
class MinimumCertificate:
    grad_norm: float
    min_eigenvalue: float
    is_strict_local_min: bool

    def to_dict(self) -> dict:
        return {
            "grad_norm": self.grad_norm,
            "min_eigenvalue": self.min_eigenvalue,
            "is_strict_local_min": self.is_strict_local_min,
        }


CERT_GRAD_TOL = 1e-8
CERT_EIG_TOL = 1e-10


def certify_minimum(problem: Problem, theta) -> MinimumCertificate:
    """Check zero gradient and positive definite Hessian at ``theta``."""
    g = problem.gradient(theta)
    gnorm = float(np.max(np.abs(g))) if g.size else 0.0
    lam = float(np.linalg.eigvalsh(problem.hessian(theta))[0])
    return MinimumCertificate(gnorm, lam, gnorm <= CERT_GRAD_TOL and lam >= CERT_EIG_TOL)
