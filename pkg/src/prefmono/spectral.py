"""Matrix-structure predicates used by the individual-score and
fully-pairwise audits."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, SingularMatrixError

SYMMETRY_TOL = 1e-10
MARGIN_TOL = 1e-9


def as_symmetric(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InputError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InputError("matrix entries must be finite")
    if np.max(np.abs(m - m.T), initial=0.0) > SYMMETRY_TOL:
        raise InputError("matrix is not symmetric")
    return m


@dataclass(frozen=True)
class MatrixVerdict:
    holds: bool
    witness: tuple[int, ...] | None = None
    margin: float | None = None

    def __bool__(self) -> bool:
        return self.holds

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "witness": None if self.witness is None else list(self.witness),
            "margin": self.margin,
        }


def is_max_diag_dominant(m) -> MatrixVerdict:
    """Every diagonal entry is at least every off-diagonal entry of its row.

    On failure the witness ``(i, j)`` is the worst offending pair.
    """
    m = as_symmetric(m)
    n = len(m)
    if n < 2:
        return MatrixVerdict(True, margin=None)
    off = m.copy()
    np.fill_diagonal(off, -np.inf)
    gap = np.diag(m) - off.max(axis=1)
    i = int(np.argmin(gap))
    margin = float(gap[i])
    if margin >= 0:
        return MatrixVerdict(True, margin=margin)
    return MatrixVerdict(False, (i, int(np.argmax(off[i]))), margin)


def is_strictly_diag_dominant_M(m) -> MatrixVerdict:
    """Strict row diagonal dominance with positive diagonal and nonpositive
    off-diagonal entries.  The witness is the first failing row (and column
    for a sign failure)."""
    m = as_symmetric(m)
    n = len(m)
    for i in range(n):
        if not m[i, i] > 0:
            return MatrixVerdict(False, (i,))
        for j in range(n):
            if j != i and m[i, j] > 0:
                return MatrixVerdict(False, (i, j))
    absm = np.abs(m)
    slack = np.diag(absm) - (absm.sum(axis=1) - np.diag(absm))
    i = int(np.argmin(slack))
    if not slack[i] > 0:
        return MatrixVerdict(False, (i,), float(slack[i]))
    return MatrixVerdict(True, margin=float(slack[i]))


@dataclass(frozen=True)
class LemmaVerdict:
    holds: bool
    min_margin: float
    argmin: tuple[int, int, int]
    min_pair_gap: float

    def __bool__(self) -> bool:
        return self.holds

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "min_margin": self.min_margin,
            "argmin": list(self.argmin),
            "min_pair_gap": self.min_pair_gap,
        }


def lemma_inverse_difference_check(m) -> LemmaVerdict:
    """Check ``N[y,y] - N[y,z] >= N[w,y] - N[w,z]`` for N = inv(M), all y, z, w.

    Degenerate triples (w = y or y = z) are included; they hold with
    equality.  ``min_pair_gap`` is ``min_{y != z} N[y,y] - N[y,z]``, which
    is strictly positive for matrices of the required pattern.
    """
    m = as_symmetric(m)
    n = len(m)
    try:
        cond = np.linalg.cond(m)
        if not np.isfinite(cond) or cond > 1e14:
            raise np.linalg.LinAlgError
        N = np.linalg.inv(m)
    except np.linalg.LinAlgError:
        raise SingularMatrixError("matrix is singular to working precision") from None
    # col[w, y, z] = N[w, y] - N[w, z]
    col = N[:, :, None] - N[:, None, :]
    lhs = np.einsum("yyz->yz", col)
    margin = lhs[None, :, :] - col
    idx = np.unravel_index(int(np.argmin(margin)), margin.shape)
    w, y, z = (int(i) for i in idx)
    min_margin = float(margin[w, y, z])
    if n > 1:
        gaps = lhs[~np.eye(n, dtype=bool)]
        min_gap = float(gaps.min())
    else:
        min_gap = float("inf")
    return LemmaVerdict(min_margin >= -MARGIN_TOL, min_margin, (y, z, w), min_gap)


def random_dominant_matrix(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Symmetric matrix satisfying the lemma's hypotheses by construction.

    Off-diagonals are uniform on [-1, 0]; each diagonal is its row's absolute
    off-diagonal sum plus a uniform(0.1, 1) slack.
    """
    upper = np.triu(rng.uniform(-1.0, 0.0, size=(dim, dim)), k=1)
    m = upper + upper.T
    m[np.diag_indices(dim)] = np.abs(m).sum(axis=1) + rng.uniform(0.1, 1.0, size=dim)
    return m
