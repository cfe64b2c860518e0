"""Weighted comparison datasets and their perturbations.

A dataset is an immutable multiset of comparisons ``(x, y, z, c, weight)``.
A weight of ``k`` stands for ``k`` copies; fractional weights express the
small-weight additions used by the audits.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import InputError, UnsupportedOperationError
from .losses import ComparisonDomain, LossFamily, loss_value

DATASET_FIELDS = ("x", "y", "z", "c", "weight")


@dataclass(frozen=True)
class Comparison:
    x: str
    y: str
    z: str
    c: float
    weight: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "x", str(self.x))
        object.__setattr__(self, "y", str(self.y))
        object.__setattr__(self, "z", str(self.z))
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "weight", float(self.weight))
        if self.y == self.z:
            raise InputError(f"comparison must involve two distinct alternatives, got y = z = {self.y!r}")
        if not math.isfinite(self.weight) or self.weight < 0:
            raise InputError(f"weight must be finite and nonnegative, got {self.weight}")

    @property
    def triple(self) -> tuple[str, str, str]:
        return (self.x, self.y, self.z)


@dataclass(frozen=True)
class Dataset:
    comparisons: tuple[Comparison, ...]
    domain: ComparisonDomain

    def __post_init__(self):
        comps = tuple(self.comparisons)
        object.__setattr__(self, "comparisons", comps)
        for i, cmp in enumerate(comps):
            if not isinstance(cmp, Comparison):
                raise InputError(f"record {i} is not a Comparison")
            if not self.domain.contains(cmp.c):
                raise InputError(f"record {i}: c = {cmp.c} outside {self.domain}")

    @classmethod
    def from_records(cls, records, domain: ComparisonDomain) -> Dataset:
        return cls(tuple(r if isinstance(r, Comparison) else Comparison(*r) for r in records), domain)

    def __len__(self) -> int:
        return len(self.comparisons)

    def __iter__(self):
        return iter(self.comparisons)

    def occurrences(self, x, y, z) -> list[tuple[int, int]]:
        """Indices of records on the pair {y, z} under x, with orientation +1 / -1."""
        out = []
        for i, cmp in enumerate(self.comparisons):
            if cmp.triple == (x, y, z):
                out.append((i, 1))
            elif cmp.triple == (x, z, y):
                out.append((i, -1))
        return out


def add_unequivocal(d: Dataset, x, y, z, eps: float) -> Dataset:
    """Append ``(x, y, z, max C)`` with weight ``eps``."""
    if not d.domain.has_max:
        raise UnsupportedOperationError("unequivocal comparisons need a comparison domain with a maximum")
    if not (math.isfinite(eps) and eps >= 0):
        raise InputError(f"eps must be finite and nonnegative, got {eps}")
    new = Comparison(x, y, z, d.domain.max, eps)
    return Dataset(d.comparisons + (new,), d.domain)


def intensify(d: Dataset, x, y, z, eps: float) -> Dataset:
    """Shift every comparison of y against z under x by ``eps`` toward y.

    Records oriented ``(x, z, y)`` move by ``-eps``.  Results are projected
    back onto the domain; all other records are untouched.  A triple absent
    from the dataset leaves it unchanged.
    """
    x, y, z = str(x), str(y), str(z)
    if y == z:
        raise InputError("intensification needs two distinct alternatives")
    if not math.isfinite(eps):
        raise InputError(f"eps must be finite, got {eps}")
    dom = d.domain
    out = []
    for cmp in d.comparisons:
        if cmp.triple == (x, y, z):
            step = eps
        elif cmp.triple == (x, z, y):
            step = -eps
        else:
            out.append(cmp)
            continue
        direction = int(np.sign(step))
        out.append(replace(cmp, c=dom.project(cmp.c + step, direction)))
    return Dataset(tuple(out), dom)


def loss_of(d: Dataset, family: LossFamily, model, reg, theta) -> float:
    """Regularizer plus weighted sum of per-datum losses at ``theta``."""
    theta = model.check_theta(theta)
    total = reg.value(theta) if reg is not None else 0.0
    if not d.comparisons:
        return float(total)
    scores = model.scores(theta)
    sp = model.space
    s = np.array([
        scores[sp.bindex(r.x), sp.aindex(r.y)] - scores[sp.bindex(r.x), sp.aindex(r.z)] for r in d
    ])
    c = np.array([r.c for r in d])
    w = np.array([r.weight for r in d])
    return float(total + np.dot(w, np.atleast_1d(loss_value(family, s, c))))


def write_dataset(d: Dataset, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(DATASET_FIELDS)
        for r in d:
            writer.writerow([r.x, r.y, r.z, repr(r.c), repr(r.weight)])


def read_dataset(path, domain: ComparisonDomain) -> Dataset:
    path = Path(path)
    records = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != DATASET_FIELDS:
            raise InputError(f"{path}:1: expected header {','.join(DATASET_FIELDS)}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 5:
                raise InputError(f"{path}:{lineno}: expected 5 fields, got {len(row)}")
            try:
                records.append(Comparison(row[0], row[1], row[2], float(row[3]), float(row[4])))
            except (ValueError, InputError) as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from None
    try:
        return Dataset(tuple(records), domain)
    except InputError as exc:
        raise InputError(f"{path}: {exc}") from None
