"""Per-datapoint losses on score differences, with exact derivatives.

Every loss here has the form ``loss(s, c)`` where ``s`` is a score difference
and ``c`` a comparison value.  Functions accept scalars or numpy arrays and
broadcast; scalar inputs give Python floats back.

Generalized Bradley-Terry (GBT) losses are built from the cumulant-generating
function of a root law ``f`` over the comparison domain::

    loss(s, c) = cgf_f(s) - c * s,   cgf_f(s) = log E_f[exp(s * gamma)]
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import (
    DomainViolationError,
    InputError,
    NondifferentiableError,
    NonfiniteResultError,
    UnsupportedOperationError,
)

DOMAIN_TOL = 1e-12
KINK_TOL = 1e-12
# Below this |u| the uniform-law cgf and its derivatives switch to Taylor series.
SERIES_CUTOFF = 0.05
DEFAULT_GRID = np.linspace(-20.0, 20.0, 401)


def _out(arr):
    arr = np.asarray(arr, dtype=float)
    return float(arr) if arr.ndim == 0 else arr


def _check_finite(s, name="s"):
    s = np.asarray(s, dtype=float)
    if not np.all(np.isfinite(s)):
        raise InputError(f"{name} must be finite, got {s!r}")
    return s


def sigmoid(t):
    t = np.asarray(t, dtype=float)
    return np.exp(-np.logaddexp(0.0, -t))


# --------------------------------------------------------------------------
# Comparison domains
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ComparisonDomain:
    """Set of admissible comparison values, symmetric about zero."""

    kind: Literal["discrete", "interval", "real_line"]
    values: tuple[float, ...] = ()
    lo: float = -math.inf
    hi: float = math.inf

    def __post_init__(self):
        if self.kind == "discrete":
            vals = tuple(float(v) for v in self.values)
            object.__setattr__(self, "values", vals)
            if not vals:
                raise InputError("discrete domain needs at least one value")
            if any(not math.isfinite(v) for v in vals):
                raise InputError("discrete domain values must be finite")
            if any(b <= a for a, b in zip(vals, vals[1:])):
                raise InputError(f"discrete domain must be strictly sorted: {vals}")
            if any(abs(a + b) > DOMAIN_TOL for a, b in zip(vals, reversed(vals))):
                raise InputError(f"discrete domain must be symmetric about 0: {vals}")
            object.__setattr__(self, "lo", vals[0])
            object.__setattr__(self, "hi", vals[-1])
        elif self.kind == "interval":
            lo, hi = float(self.lo), float(self.hi)
            if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
                raise InputError(f"interval domain needs finite lo < hi, got [{lo}, {hi}]")
            if abs(lo + hi) > DOMAIN_TOL * max(1.0, hi):
                raise InputError(f"interval domain must be symmetric about 0: [{lo}, {hi}]")
            object.__setattr__(self, "lo", lo)
            object.__setattr__(self, "hi", hi)
        elif self.kind == "real_line":
            object.__setattr__(self, "lo", -math.inf)
            object.__setattr__(self, "hi", math.inf)
        else:
            raise InputError(f"unknown domain kind {self.kind!r}")

    @classmethod
    def discrete(cls, values) -> ComparisonDomain:
        return cls("discrete", values=tuple(values))

    @classmethod
    def interval(cls, lo: float, hi: float) -> ComparisonDomain:
        return cls("interval", lo=lo, hi=hi)

    @classmethod
    def real_line(cls) -> ComparisonDomain:
        return cls("real_line")

    @property
    def has_max(self) -> bool:
        return self.kind != "real_line"

    @property
    def max(self) -> float:
        if not self.has_max:
            raise UnsupportedOperationError("the real line has no maximum")
        return self.hi

    @property
    def min(self) -> float:
        if not self.has_max:
            raise UnsupportedOperationError("the real line has no minimum")
        return self.lo

    @property
    def is_interval(self) -> bool:
        """True for intervals of the real line, including the line itself."""
        return self.kind != "discrete"

    def contains(self, c, tol: float = DOMAIN_TOL):
        c = np.asarray(c, dtype=float)
        if self.kind == "discrete":
            vals = np.asarray(self.values)
            return np.any(np.abs(c[..., None] - vals) <= tol, axis=-1) & np.isfinite(c)
        if self.kind == "interval":
            return (c >= self.lo - tol) & (c <= self.hi + tol)
        return np.isfinite(c)

    def check(self, c):
        c = np.asarray(c, dtype=float)
        if not np.all(self.contains(c)):
            bad = c[~self.contains(c)] if c.ndim else c
            raise DomainViolationError(f"comparison value(s) {bad} outside {self}")
        return c

    def project(self, t: float, direction: int = 0) -> float:
        """Closest point of the domain to ``t``.

        On a discrete domain an exact tie goes to the larger value when
        ``direction > 0`` and to the smaller one when ``direction < 0``.
        """
        t = float(t)
        if self.kind == "real_line":
            return t
        if self.kind == "interval":
            return min(max(t, self.lo), self.hi)
        vals = np.asarray(self.values)
        dist = np.abs(vals - t)
        best = np.flatnonzero(dist == dist.min())
        if len(best) > 1 and direction < 0:
            return float(vals[best[0]])
        return float(vals[best[-1]])

    def to_dict(self) -> dict:
        if self.kind == "discrete":
            return {"kind": "discrete", "values": list(self.values)}
        if self.kind == "interval":
            return {"kind": "interval", "lo": self.lo, "hi": self.hi}
        return {"kind": "real_line"}

    @classmethod
    def from_dict(cls, d: dict) -> ComparisonDomain:
        kind = d.get("kind")
        if kind == "discrete":
            return cls.discrete(d["values"])
        if kind == "interval":
            return cls.interval(d["lo"], d["hi"])
        if kind == "real_line":
            return cls.real_line()
        raise InputError(f"unknown domain kind {kind!r}")


BINARY = ComparisonDomain.discrete((-1.0, 1.0))
UNIT_INTERVAL = ComparisonDomain.interval(-1.0, 1.0)
REAL_LINE = ComparisonDomain.real_line()


# --------------------------------------------------------------------------
# Root laws and their cumulant-generating functions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RootLaw:
    """Base distribution of a GBT model.

    ``tabulated`` laws are densities sampled on a symmetric grid and integrated
    with the trapezoidal rule.
    """

    kind: Literal["two_point_bt", "uniform_interval", "gaussian_standard", "tabulated"]
    lo: float = -1.0
    hi: float = 1.0
    support: tuple[float, ...] = ()
    weights: tuple[float, ...] = ()
    _quad: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind == "uniform_interval":
            ComparisonDomain.interval(self.lo, self.hi)
        elif self.kind == "tabulated":
            grid = np.asarray(self.support, dtype=float)
            w = np.asarray(self.weights, dtype=float)
            if grid.ndim != 1 or grid.size < 2 or grid.shape != w.shape:
                raise InputError("tabulated root law needs matching 1-d support and weights")
            if np.any(np.diff(grid) <= 0):
                raise InputError("tabulated support must be strictly increasing")
            if np.any(w < 0) or not np.all(np.isfinite(w)):
                raise InputError("tabulated weights must be finite and nonnegative")
            ComparisonDomain.interval(grid[0], grid[-1])
            dx = np.diff(grid)
            quad = w * np.concatenate(([dx[0] / 2], (dx[:-1] + dx[1:]) / 2, [dx[-1] / 2]))
            total = quad.sum()
            if not (math.isfinite(total) and total > 0):
                raise InputError("tabulated weights must have positive finite mass")
            # normalized so the law is a probability distribution: cumulant(0) = 0
            quad = quad / total
            object.__setattr__(self, "support", tuple(grid.tolist()))
            object.__setattr__(self, "weights", tuple(w.tolist()))
            object.__setattr__(self, "_quad", quad)
        elif self.kind not in ("two_point_bt", "gaussian_standard"):
            raise InputError(f"unknown root law {self.kind!r}")

    @classmethod
    def two_point(cls) -> RootLaw:
        return cls("two_point_bt")

    @classmethod
    def uniform(cls, lo: float = -1.0, hi: float = 1.0) -> RootLaw:
        return cls("uniform_interval", lo=float(lo), hi=float(hi))

    @classmethod
    def gaussian(cls) -> RootLaw:
        return cls("gaussian_standard")

    @classmethod
    def tabulated(cls, support, weights) -> RootLaw:
        return cls("tabulated", support=tuple(support), weights=tuple(weights))

    @property
    def domain(self) -> ComparisonDomain:
        if self.kind == "two_point_bt":
            return BINARY
        if self.kind == "uniform_interval":
            return ComparisonDomain.interval(self.lo, self.hi)
        if self.kind == "gaussian_standard":
            return REAL_LINE
        return ComparisonDomain.interval(self.support[0], self.support[-1])

    def to_dict(self) -> dict:
        if self.kind == "uniform_interval":
            return {"kind": self.kind, "lo": self.lo, "hi": self.hi}
        if self.kind == "tabulated":
            return {"kind": self.kind, "support": list(self.support), "weights": list(self.weights)}
        return {"kind": self.kind}

    @classmethod
    def from_dict(cls, d: dict) -> RootLaw:
        kind = d.get("kind")
        if kind == "uniform_interval":
            return cls.uniform(d.get("lo", -1.0), d.get("hi", 1.0))
        if kind == "tabulated":
            return cls.tabulated(d["support"], d["weights"])
        return cls(kind)


def _logsinhc(u):
    # log(sinh(u) / u)
    a = np.abs(u)
    small = a < SERIES_CUTOFF
    u2 = np.where(small, u * u, 0.0)
    series = u2 / 6 - u2**2 / 180 + u2**3 / 2835 - u2**4 / 37800
    big = np.where(small, 1.0, a)
    direct = big + np.log1p(-np.exp(-2 * big)) - np.log(2 * big)
    return np.where(small, series, direct)


def _langevin(u):
    # coth(u) - 1/u
    small = np.abs(u) < SERIES_CUTOFF
    us = np.where(small, u, 0.0)
    u2 = us * us
    series = us * (1 / 3 - u2 / 45 + 2 * u2**2 / 945 - u2**3 / 4725)
    ub = np.where(small, 1.0, u)
    direct = 1 / np.tanh(ub) - 1 / ub
    return np.where(small, series, direct)


def _langevin_prime(u):
    # 1/u^2 - 1/sinh(u)^2
    a = np.abs(u)
    small = a < SERIES_CUTOFF
    u2 = np.where(small, u * u, 0.0)
    series = 1 / 3 - u2 / 15 + 2 * u2**2 / 189 - u2**3 / 675
    big = np.where(small, 1.0, a)
    e = np.exp(-2 * big)
    direct = 1 / big**2 - 4 * e / np.expm1(-2 * big) ** 2
    return np.where(small, series, direct)


def _tabulated_moments(root: RootLaw, s, order: int):
    grid = np.asarray(root.support)
    expo = s[..., None] * grid
    m = expo.max(axis=-1, keepdims=True)
    tilt = root._quad * np.exp(expo - m)
    z = tilt.sum(axis=-1)
    if order == 0:
        return m[..., 0] + np.log(z)
    mean = (tilt * grid).sum(axis=-1) / z
    if order == 1:
        return mean
    return (tilt * (grid - mean[..., None]) ** 2).sum(axis=-1) / z


def _cgf(root: RootLaw, s, order: int):
    s = _check_finite(s)
    if root.kind == "two_point_bt":
        a = np.abs(s)
        if order == 0:
            val = a + np.log1p(np.exp(-2 * a)) - math.log(2.0)
        elif order == 1:
            val = np.tanh(s)
        else:
            e = np.exp(-2 * a)
            val = 4 * e / (1 + e) ** 2
    elif root.kind == "uniform_interval":
        h = root.hi
        u = h * s
        val = (_logsinhc(u), h * _langevin(u), h * h * _langevin_prime(u))[order]
    elif root.kind == "gaussian_standard":
        val = (0.5 * s * s, s + 0.0, np.ones_like(s))[order]
    else:
        val = _tabulated_moments(root, s, order)
    if not np.all(np.isfinite(val)):
        raise NonfiniteResultError(f"cumulant of order {order} not finite at s={s}")
    return _out(val)


def cumulant(root: RootLaw, s):
    """Cumulant-generating function of ``root`` at ``s``."""
    return _cgf(root, s, 0)


def cumulant_prime(root: RootLaw, s):
    """First derivative of the cgf: the mean of the exponentially tilted law.

    Strictly increasing and odd, with range (min domain, max domain).
    """
    return _cgf(root, s, 1)


def cumulant_second(root: RootLaw, s):
    """Second derivative of the cgf: the variance of the tilted law."""
    return _cgf(root, s, 2)


# --------------------------------------------------------------------------
# Loss families
# --------------------------------------------------------------------------

GBT_KINDS = ("gbt", "uniform_gbt", "gaussian_gbt")
LOSS_KINDS = ("bradley_terry", "slic", "ipo") + GBT_KINDS


@dataclass(frozen=True)
class LossFamily:
    kind: str
    root: RootLaw | None = None

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise InputError(f"unknown loss family {self.kind!r}")
        if self.kind == "uniform_gbt" and self.root is None:
            object.__setattr__(self, "root", RootLaw.uniform(-1.0, 1.0))
        if self.kind == "gaussian_gbt" and self.root is None:
            object.__setattr__(self, "root", RootLaw.gaussian())
        if self.kind == "gbt" and self.root is None:
            raise InputError("gbt loss needs a root law")
        if self.kind not in GBT_KINDS and self.root is not None:
            raise InputError(f"{self.kind} takes no root law")

    @classmethod
    def bradley_terry(cls):
        return cls("bradley_terry")

    @classmethod
    def uniform_gbt(cls):
        return cls("uniform_gbt")

    @classmethod
    def gaussian_gbt(cls):
        return cls("gaussian_gbt")

    @classmethod
    def gbt(cls, root: RootLaw):
        return cls("gbt", root)

    @classmethod
    def slic(cls):
        return cls("slic")

    @classmethod
    def ipo(cls):
        return cls("ipo")

    @property
    def domain(self) -> ComparisonDomain:
        if self.root is not None:
            return self.root.domain
        return BINARY

    @property
    def is_gbt(self) -> bool:
        return self.kind in GBT_KINDS

    @property
    def smooth(self) -> bool:
        """Twice continuously differentiable in the score difference."""
        return self.kind != "slic"

    @property
    def convex(self) -> bool:
        return True

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "gbt":
            d["root"] = self.root.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> LossFamily:
        kind = d.get("kind")
        if kind == "gbt":
            if "root" not in d:
                raise InputError("gbt loss needs a 'root' entry")
            return cls.gbt(RootLaw.from_dict(d["root"]))
        return cls(kind)


def _prep(family: LossFamily, s, c):
    s = _check_finite(s)
    c = family.domain.check(c)
    return s, c


def loss_value(family: LossFamily, s, c):
    s, c = _prep(family, s, c)
    if family.kind == "bradley_terry":
        val = np.logaddexp(0.0, -c * s)
    elif family.is_gbt:
        val = cumulant(family.root, s) - c * s
    elif family.kind == "slic":
        val = np.maximum(0.0, 1.0 - c * s)
    else:
        val = (1.0 - c * s) ** 2
    return _out(val)


def _check_kink(family, s, c):
    if family.kind == "slic" and np.any(np.abs(1.0 - c * s) <= KINK_TOL):
        raise NondifferentiableError(f"slic loss is not differentiable at c*s = 1 (s={s}, c={c})")


def dloss_ds(family: LossFamily, s, c):
    s, c = _prep(family, s, c)
    _check_kink(family, s, c)
    if family.kind == "bradley_terry":
        val = -c * sigmoid(-c * s)
    elif family.is_gbt:
        val = cumulant_prime(family.root, s) - c
    elif family.kind == "slic":
        val = np.where(c * s < 1.0, -c, 0.0)
    else:
        val = -2.0 * c * (1.0 - c * s)
    return _out(val)


def d2loss_ds2(family: LossFamily, s, c):
    s, c = _prep(family, s, c)
    _check_kink(family, s, c)
    if family.kind == "bradley_terry":
        val = sigmoid(c * s) * sigmoid(-c * s)
    elif family.is_gbt:
        val = cumulant_second(family.root, s) + 0.0 * c
    elif family.kind == "slic":
        val = np.zeros(np.broadcast(s, c).shape)
    else:
        val = 2.0 * c * c + 0.0 * s
    return _out(val)


def dcds_cross(family: LossFamily, s, c):
    """Mixed partial d/dc d/ds of the loss; identically -1 for GBT losses."""
    if not (family.is_gbt and family.domain.is_interval):
        raise UnsupportedOperationError(
            f"cross partial needs an interval comparison domain; {family.kind} has {family.domain.kind}"
        )
    s, c = _prep(family, s, c)
    return _out(np.full(np.broadcast(s, c).shape, -1.0))


# --------------------------------------------------------------------------
# Assumption checks (grid surrogates for statements quantified over all s)
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AssumptionVerdict:
    name: str
    status: Literal["holds", "violated", "no_maximum", "not_interval"]
    violations: tuple[tuple[float, float], ...] = ()
    reason: str = ""

    @property
    def holds(self) -> bool:
        return self.status == "holds"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "status": self.status,
            "violations": [list(v) for v in self.violations],
            "reason": self.reason,
        }


def check_assumption_max(family: LossFamily, s_grid=None) -> AssumptionVerdict:
    """Maximal comparison pushes the score difference up at every grid point.

    Violations are reported as ``(s, dloss/ds at (s, max))``; a kink is
    reported with derivative ``nan``.
    """
    name = "max_comparison"
    if not family.domain.has_max:
        return AssumptionVerdict(name, "no_maximum", reason="comparison domain has no maximum")
    grid = DEFAULT_GRID if s_grid is None else np.asarray(s_grid, dtype=float).ravel()
    cmax = family.domain.max
    bad = []
    for s in grid:
        try:
            d = dloss_ds(family, s, cmax)
        except NondifferentiableError:
            bad.append((float(s), math.nan))
            continue
        if not d < 0:
            bad.append((float(s), float(d)))
    reasons = []
    if not family.smooth:
        reasons.append(f"{family.kind} is not twice continuously differentiable")
    if bad:
        reasons.append(f"dloss/ds(s, {cmax}) >= 0 at {len(bad)} grid point(s)")
    status = "violated" if reasons else "holds"
    return AssumptionVerdict(name, status, tuple(bad), "; ".join(reasons))


def check_assumption_cross(family: LossFamily, s_grid=None, c_grid=None) -> AssumptionVerdict:
    """Interval domain and strictly negative cross partial on the grid."""
    name = "negative_cross_partial"
    if not family.domain.is_interval:
        return AssumptionVerdict(name, "not_interval", reason="comparison domain is not an interval")
    if not family.smooth:
        return AssumptionVerdict(name, "violated", reason=f"{family.kind} is not smooth")
    grid = DEFAULT_GRID if s_grid is None else np.asarray(s_grid, dtype=float).ravel()
    if c_grid is None:
        lo = family.domain.lo if family.domain.has_max else -5.0
        hi = family.domain.hi if family.domain.has_max else 5.0
        c_grid = np.linspace(lo, hi, 21)
    bad = []
    for c in np.asarray(c_grid, dtype=float).ravel():
        vals = np.atleast_1d(dcds_cross(family, grid, c))
        for s, v in zip(grid, vals):
            if not v < 0:
                bad.append((float(s), float(v)))
    status = "violated" if bad else "holds"
    return AssumptionVerdict(name, status, tuple(bad))
