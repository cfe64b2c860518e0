"""Experiment configuration files (YAML, versioned schema).

Example::

    schema_version: 1
    seed: 0
    model: {kind: one_hot, backgrounds: [x], alternatives: [y, z]}
    loss: {kind: gaussian_gbt}
    regularizer: {kind: l2, strength: 1.0}
    data:
      records: [[x, y, z, 1.0, 1.0]]     # or  path: data.csv
    solver: {tol: 1.0e-10, max_iter: 200}
    audits:
      - id: gaussian-local
        flavor: local_pairwise
        triple: [x, y, z]
        mode: intensification
        eps: [1.0e-2, 1.0e-3, 1.0e-4]
    output: {dir: out, format: csv}
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .data import Comparison, Dataset, read_dataset
from .errors import ConfigError, InputError
from .losses import LossFamily
from .report import FORMATS
from .scores import ScoreModel, model_from_dict
from .solver import Problem, Regularizer, SolverSettings

SUPPORTED_VERSIONS = (1,)
AUDIT_FLAVORS = ("local_pairwise", "global_ladder", "individual_score", "fully_pairwise", "gradient_descent")


@dataclass(frozen=True)
class AuditSpec:
    id: str
    flavor: str
    triple: tuple[str, str, str]
    mode: str | None
    eps: tuple[float, ...]
    theta: Any = None


@dataclass(frozen=True)
class Figure1Spec:
    pairs: tuple[tuple[str, str, str], ...]
    steps: int
    learning_rate: float
    sampling: str = "random"
    theta_init: Any = "zeros"


@dataclass(frozen=True)
class ExperimentConfig:
    path: Path | None
    schema_version: int
    seed: int
    problem: Problem
    settings: SolverSettings
    audits: tuple[AuditSpec, ...]
    out_dir: str | None = None
    fmt: str = "csv"
    workers: int = 1
    figure1: Figure1Spec | None = None
    raw: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def model(self) -> ScoreModel:
        return self.problem.model


def _num(value, where: str, positive: bool = False, nonneg: bool = False) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ConfigError(where, f"expected a number, got {value!r}") from None
    if not math.isfinite(v):
        raise ConfigError(where, "must be finite")
    if positive and not v > 0:
        raise ConfigError(where, f"must be positive, got {v}")
    if nonneg and v < 0:
        raise ConfigError(where, f"must be nonnegative, got {v}")
    return v


def _mapping(raw, key: str, required: bool = True) -> dict:
    val = raw.get(key)
    if val is None:
        if required:
            raise ConfigError(key, "missing section")
        return {}
    if not isinstance(val, dict):
        raise ConfigError(key, f"expected a mapping, got {type(val).__name__}")
    return val


def _triple(value, where: str, model: ScoreModel) -> tuple[str, str, str]:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ConfigError(where, f"expected [x, y, z], got {value!r}")
    x, y, z = (str(v) for v in value)
    sp = model.space
    if x not in sp.backgrounds:
        raise ConfigError(where, f"unknown background {x!r}")
    for a in (y, z):
        if a not in sp.alternatives:
            raise ConfigError(where, f"unknown alternative {a!r}")
    if y == z:
        raise ConfigError(where, "y and z must differ")
    return x, y, z


def _theta(value, where: str, dim: int):
    if value is None or value in ("zeros", "random"):
        return value
    if not isinstance(value, (list, tuple)) or len(value) != dim:
        raise ConfigError(where, f"expected 'zeros', 'random' or a list of {dim} numbers")
    return tuple(_num(v, f"{where}[{i}]") for i, v in enumerate(value))


def load_yaml(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc}") from None
    try:
        raw = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        where = f"{path}:{mark.line + 1}:{mark.column + 1}" if mark else str(path)
        raise ConfigError(where, exc.problem or str(exc)) from None
    if not isinstance(raw, dict):
        raise ConfigError(str(path), "config must be a mapping at top level")
    return raw


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    return build_config(load_yaml(path), base_dir=path.parent, path=path)


def build_config(raw: dict, base_dir=None, path=None) -> ExperimentConfig:
    base_dir = Path(base_dir or ".")
    version = raw.get("schema_version")
    if version not in SUPPORTED_VERSIONS:
        raise ConfigError("schema_version", f"unsupported schema version {version!r}; expected one of {SUPPORTED_VERSIONS}")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("seed", f"expected a nonnegative integer, got {seed!r}")

    try:
        model = model_from_dict(_mapping(raw, "model"))
    except (InputError, TypeError, ValueError) as exc:
        raise ConfigError("model", str(exc)) from None
    try:
        family = LossFamily.from_dict(_mapping(raw, "loss"))
    except (InputError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError("loss", str(exc)) from None

    reg_raw = _mapping(raw, "regularizer", required=False)
    if reg_raw.get("kind", "none") == "l2":
        _num(reg_raw.get("strength", 1.0), "regularizer.strength", positive=True)
        center = reg_raw.get("center")
        if center is not None and (not isinstance(center, list) or len(center) != model.dim):
            raise ConfigError("regularizer.center", f"expected a list of {model.dim} numbers")
    try:
        reg = Regularizer.from_dict(reg_raw)
    except (InputError, TypeError, ValueError) as exc:
        raise ConfigError("regularizer", str(exc)) from None

    dataset = _dataset(_mapping(raw, "data", required=False), family, base_dir)
    try:
        problem = Problem(dataset, family, model, reg, bool(raw.get("gauge", False)))
    except InputError as exc:
        raise ConfigError("data", str(exc)) from None

    solver_raw = _mapping(raw, "solver", required=False)
    unknown = set(solver_raw) - {"tol", "max_iter", "damping", "armijo"}
    if unknown:
        raise ConfigError("solver", f"unknown keys {sorted(unknown)}")
    settings = SolverSettings(
        tol=_num(solver_raw.get("tol", 1e-10), "solver.tol", positive=True),
        max_iter=int(_num(solver_raw.get("max_iter", 200), "solver.max_iter", positive=True)),
        damping=_num(solver_raw.get("damping", 1e-10), "solver.damping", positive=True),
        armijo=_num(solver_raw.get("armijo", 1e-4), "solver.armijo", positive=True),
    )

    audits_raw = raw.get("audits") or []
    if not isinstance(audits_raw, list):
        raise ConfigError("audits", "expected a list")
    audits = []
    seen = set()
    for i, a in enumerate(audits_raw):
        where = f"audits[{i}]"
        if not isinstance(a, dict):
            raise ConfigError(where, "expected a mapping")
        aid = str(a.get("id", f"audit-{i:03d}"))
        if aid in seen:
            raise ConfigError(f"{where}.id", f"duplicate audit id {aid!r}")
        seen.add(aid)
        flavor = a.get("flavor")
        if flavor not in AUDIT_FLAVORS:
            raise ConfigError(f"{where}.flavor", f"expected one of {AUDIT_FLAVORS}, got {flavor!r}")
        triple = _triple(a.get("triple"), f"{where}.triple", model)
        mode = a.get("mode")
        if mode is not None and mode not in ("unequivocal", "intensification"):
            raise ConfigError(f"{where}.mode", f"expected unequivocal or intensification, got {mode!r}")
        if mode is None and flavor in ("local_pairwise", "global_ladder"):
            raise ConfigError(f"{where}.mode", "required for this flavor")
        eps_raw = a.get("eps", [1e-2, 1e-3, 1e-4])
        if not isinstance(eps_raw, list):
            eps_raw = [eps_raw]
        eps = tuple(_num(e, f"{where}.eps[{j}]", nonneg=True) for j, e in enumerate(eps_raw))
        if flavor == "global_ladder" and any(b < a for a, b in zip(eps, eps[1:])):
            raise ConfigError(f"{where}.eps", "ladder must be nondecreasing")
        theta = _theta(a.get("theta"), f"{where}.theta", model.dim)
        audits.append(AuditSpec(aid, flavor, triple, mode, eps, theta))

    out_raw = _mapping(raw, "output", required=False)
    fmt = out_raw.get("format", "csv")
    if fmt not in FORMATS:
        raise ConfigError("output.format", f"expected one of {FORMATS}, got {fmt!r}")
    workers = int(_num(raw.get("workers", 1), "workers", positive=True))

    fig = None
    if raw.get("figure1") is not None:
        fig = _figure1(_mapping(raw, "figure1"), model)
    return ExperimentConfig(
        Path(path) if path else None, version, seed, problem, settings, tuple(audits),
        out_raw.get("dir"), fmt, workers, fig, raw,
    )


def _dataset(d: dict, family: LossFamily, base_dir: Path) -> Dataset:
    if "path" in d and "records" in d:
        raise ConfigError("data", "give either 'path' or 'records', not both")
    if "path" in d:
        try:
            return read_dataset(base_dir / d["path"], family.domain)
        except (InputError, OSError) as exc:
            raise ConfigError("data.path", str(exc)) from None
    records = d.get("records") or []
    if not isinstance(records, list):
        raise ConfigError("data.records", "expected a list")
    out = []
    for i, r in enumerate(records):
        where = f"data.records[{i}]"
        if not isinstance(r, (list, tuple)) or len(r) not in (4, 5):
            raise ConfigError(where, "expected [x, y, z, c] or [x, y, z, c, weight]")
        c = _num(r[3], f"{where}[3]")
        w = _num(r[4], f"{where}[4]", nonneg=True) if len(r) == 5 else 1.0
        try:
            out.append(Comparison(r[0], r[1], r[2], c, w))
        except InputError as exc:
            raise ConfigError(where, str(exc)) from None
    try:
        return Dataset(tuple(out), family.domain)
    except InputError as exc:
        raise ConfigError("data.records", str(exc)) from None


def _figure1(d: dict, model: ScoreModel) -> Figure1Spec:
    pairs_raw = d.get("pairs") or []
    if not isinstance(pairs_raw, list):
        raise ConfigError("figure1.pairs", "expected a list of [x, chosen, rejected]")
    pairs = tuple(_triple(p, f"figure1.pairs[{i}]", model) for i, p in enumerate(pairs_raw))
    steps = d.get("steps", len(pairs))
    if not isinstance(steps, int) or steps < 0:
        raise ConfigError("figure1.steps", f"expected a nonnegative integer, got {steps!r}")
    lr = _num(d.get("learning_rate", 0.1), "figure1.learning_rate", positive=True)
    sampling = d.get("sampling", "random")
    if sampling not in ("random", "cycle"):
        raise ConfigError("figure1.sampling", f"expected random or cycle, got {sampling!r}")
    theta = _theta(d.get("theta_init", "zeros"), "figure1.theta_init", model.dim)
    return Figure1Spec(pairs, steps, lr, sampling, theta)


def initial_theta(spec, dim: int, rng: np.random.Generator) -> np.ndarray:
    if spec is None or spec == "zeros":
        return np.zeros(dim)
    if spec == "random":
        return rng.normal(size=dim)
    return np.array(spec, dtype=float)
