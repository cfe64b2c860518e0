"""Shared test helpers."""

import numpy as np

from prefmono import Comparison, Dataset, LossFamily, OneHotModel, Problem, ProblemSpace, Regularizer


def single_datum_problem(family: LossFamily, c: float = 1.0, strength: float = 1.0, center=None) -> Problem:
    """One comparison (x, y, z, c) on a one-hot model over {y, z}."""
    model = OneHotModel(ProblemSpace(("x",), ("y", "z")))
    data = Dataset((Comparison("x", "y", "z", c),), family.domain)
    reg = Regularizer.l2(strength, center) if strength else Regularizer.none()
    return Problem(data, family, model, reg)


def central_difference(f, t: float, h: float = 1e-5) -> float:
    return (f(t + h) - f(t - h)) / (2 * h)


def rel_err(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    scale = max(float(np.max(np.abs(b), initial=0.0)), 1e-300)
    return float(np.max(np.abs(a - b), initial=0.0)) / scale
