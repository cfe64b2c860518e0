"""Parameterized score models s_{y|x}(theta) over finite problem spaces.

Three variants are provided:

* ``OneHotModel``: theta holds one score per (background, alternative).
* ``LinearModel``: score is ``theta @ f(x, y)`` for a fixed embedding.
* ``DPOSoftmaxModel``: theta holds policy logits; the score is the DPO
  reward ``beta * (log pi_theta(y|x) - log pi_ref(y|x))``.

The DPO score omits the ``beta * log Z_x(theta)`` term of the usual reward.
That term is shared by all alternatives of a background, so it cancels in
every score difference, which is all the losses consume.  Individual DPO
scores therefore have difference-only semantics: only ``s_{y|x} - s_{z|x}``
is meaningful across models.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class ProblemSpace:
    backgrounds: tuple[str, ...]
    alternatives: tuple[str, ...]

    def __post_init__(self):
        bg = tuple(str(b) for b in self.backgrounds)
        alt = tuple(str(a) for a in self.alternatives)
        if not bg or not alt:
            raise InputError("problem space needs at least one background and one alternative")
        if len(set(bg)) != len(bg) or len(set(alt)) != len(alt):
            raise InputError("background and alternative identifiers must be unique")
        object.__setattr__(self, "backgrounds", bg)
        object.__setattr__(self, "alternatives", alt)
        object.__setattr__(self, "_bidx", {b: i for i, b in enumerate(bg)})
        object.__setattr__(self, "_aidx", {a: i for i, a in enumerate(alt)})

    @property
    def n_backgrounds(self) -> int:
        return len(self.backgrounds)

    @property
    def n_alternatives(self) -> int:
        return len(self.alternatives)

    def bindex(self, x) -> int:
        try:
            return self._bidx[str(x)]
        except KeyError:
            raise KeyError(f"unknown background {x!r}") from None

    def aindex(self, y) -> int:
        try:
            return self._aidx[str(y)]
        except KeyError:
            raise KeyError(f"unknown alternative {y!r}") from None

    def node(self, x, y) -> int:
        """Flat index of the pair (x, y) in background-major order."""
        return self.bindex(x) * self.n_alternatives + self.aindex(y)


def _log_softmax(v: np.ndarray) -> np.ndarray:
    m = v.max(axis=-1, keepdims=True)
    return v - m - np.log(np.exp(v - m).sum(axis=-1, keepdims=True))


def softmax(v) -> np.ndarray:
    return np.exp(_log_softmax(np.asarray(v, dtype=float)))


class ScoreModel:
    """Base class; subclasses define ``dim``, ``scores`` and ``jacobian``."""

    kind = "abstract"
    zero_score_hessian = True

    def __init__(self, space: ProblemSpace):
        self.space = space

    @property
    def dim(self) -> int:
        raise NotImplementedError

    def check_theta(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.dim,):
            raise InputError(f"theta must have shape ({self.dim},), got {theta.shape}")
        if not np.all(np.isfinite(theta)):
            raise InputError("theta must be finite")
        return theta

    def scores(self, theta) -> np.ndarray:
        """All scores as a (n_backgrounds, n_alternatives) array."""
        raise NotImplementedError

    def jacobian(self, theta) -> np.ndarray:
        """Score gradients, shape (n_backgrounds * n_alternatives, dim)."""
        raise NotImplementedError

    def background_hessian(self, theta, x) -> np.ndarray:
        """Hessian of every score of background ``x``, shape (n_alt, dim, dim)."""
        return np.zeros((self.space.n_alternatives, self.dim, self.dim))

    def logits(self, theta) -> np.ndarray:
        """Logits whose per-background softmax gives generation probabilities."""
        return self.scores(theta)

    def score(self, theta, x, y) -> float:
        theta = self.check_theta(theta)
        return float(self.scores(theta)[self.space.bindex(x), self.space.aindex(y)])

    def score_difference(self, theta, x, y, z) -> float:
        theta = self.check_theta(theta)
        row = self.scores(theta)[self.space.bindex(x)]
        return float(row[self.space.aindex(y)] - row[self.space.aindex(z)])

    def score_gradient(self, theta, x, y) -> np.ndarray:
        theta = self.check_theta(theta)
        return self.jacobian(theta)[self.space.node(x, y)].copy()

    def background_jacobian(self, theta, x) -> np.ndarray:
        """Gradients of all scores of background ``x`` as rows, shape (n_alt, dim)."""
        theta = self.check_theta(theta)
        n = self.space.n_alternatives
        b = self.space.bindex(x)
        return self.jacobian(theta)[b * n:(b + 1) * n].copy()

    def score_hessian(self, theta, x, y) -> np.ndarray:
        theta = self.check_theta(theta)
        return self.background_hessian(theta, x)[self.space.aindex(y)]

    def probabilities(self, theta, x) -> np.ndarray:
        theta = self.check_theta(theta)
        return softmax(self.logits(theta)[self.space.bindex(x)])

    def probability(self, theta, x, y) -> float:
        return float(self.probabilities(theta, x)[self.space.aindex(y)])

    def to_dict(self) -> dict:
        raise NotImplementedError


class OneHotModel(ScoreModel):
    """s_{y|x}(theta) = theta[(x, y)]; theta doubles as the logits."""

    kind = "one_hot"

    @property
    def dim(self) -> int:
        return self.space.n_backgrounds * self.space.n_alternatives

    def scores(self, theta):
        return np.asarray(theta, dtype=float).reshape(self.space.n_backgrounds, self.space.n_alternatives)

    def jacobian(self, theta):
        return np.eye(self.dim)

    def to_dict(self):
        return {
            "kind": self.kind,
            "backgrounds": list(self.space.backgrounds),
            "alternatives": list(self.space.alternatives),
        }


class LinearModel(ScoreModel):
    """s_{y|x}(theta) = theta @ embedding[x, y].

    ``embedding`` is an array of shape (n_backgrounds, n_alternatives, D).
    Probabilities treat the scores as logits.
    """

    kind = "linear"

    def __init__(self, space: ProblemSpace, embedding):
        super().__init__(space)
        emb = np.array(embedding, dtype=float)
        if emb.ndim != 3 or emb.shape[:2] != (space.n_backgrounds, space.n_alternatives):
            raise InputError(
                f"embedding must have shape ({space.n_backgrounds}, {space.n_alternatives}, D), got {emb.shape}"
            )
        if emb.shape[2] == 0 or not np.all(np.isfinite(emb)):
            raise InputError("embedding vectors must be nonempty and finite")
        emb.setflags(write=False)
        self.embedding = emb
        self._flat = emb.reshape(-1, emb.shape[2])

    @classmethod
    def from_mapping(cls, space: ProblemSpace, mapping) -> LinearModel:
        """Build from ``{x: {y: vector}}``."""
        rows = []
        for x in space.backgrounds:
            if x not in mapping:
                raise InputError(f"embedding missing background {x!r}")
            row = []
            for y in space.alternatives:
                if y not in mapping[x]:
                    raise InputError(f"embedding missing ({x!r}, {y!r})")
                row.append(mapping[x][y])
            rows.append(row)
        try:
            arr = np.array(rows, dtype=float)
        except ValueError:
            raise InputError("embedding vectors must all have the same length") from None
        return cls(space, arr)

    @property
    def dim(self) -> int:
        return self.embedding.shape[2]

    def scores(self, theta):
        return self.embedding @ np.asarray(theta, dtype=float)

    def jacobian(self, theta):
        return self._flat

    def to_dict(self):
        return {
            "kind": self.kind,
            "backgrounds": list(self.space.backgrounds),
            "alternatives": list(self.space.alternatives),
            "embedding": {
                x: {y: self.embedding[i, j].tolist() for j, y in enumerate(self.space.alternatives)}
                for i, x in enumerate(self.space.backgrounds)
            },
        }


class DPOSoftmaxModel(ScoreModel):
    """Softmax policy over the alternatives of each background.

    theta holds the policy logits, one per (x, y).  The score is
    ``beta * (log pi_theta(y|x) - log pi_ref(y|x))`` with both policies
    softmaxes over the alternatives of ``x``.
    """

    kind = "dpo_softmax"
    zero_score_hessian = False

    def __init__(self, space: ProblemSpace, reference_logits, beta: float = 1.0):
        super().__init__(space)
        ref = np.array(reference_logits, dtype=float)
        if ref.shape != (space.n_backgrounds, space.n_alternatives):
            raise InputError(
                f"reference logits must have shape ({space.n_backgrounds}, {space.n_alternatives}), got {ref.shape}"
            )
        if not np.all(np.isfinite(ref)):
            raise InputError("reference logits must be finite")
        if not (np.isfinite(beta) and beta > 0):
            raise InputError(f"beta must be positive, got {beta}")
        ref.setflags(write=False)
        self.reference_logits = ref
        self.beta = float(beta)
        self._ref_logp = _log_softmax(ref)

    @property
    def dim(self) -> int:
        return self.space.n_backgrounds * self.space.n_alternatives

    def _grid(self, theta):
        return np.asarray(theta, dtype=float).reshape(self.space.n_backgrounds, self.space.n_alternatives)

    def scores(self, theta):
        return self.beta * (_log_softmax(self._grid(theta)) - self._ref_logp)

    def logits(self, theta):
        return self._grid(theta)

    def jacobian(self, theta):
        nb, na = self.space.n_backgrounds, self.space.n_alternatives
        p = softmax(self._grid(theta))
        jac = np.zeros((nb * na, nb * na))
        for b in range(nb):
            sl = slice(b * na, (b + 1) * na)
            jac[sl, sl] = self.beta * (np.eye(na) - p[b][None, :])
        return jac

    def background_hessian(self, theta, x):
        na = self.space.n_alternatives
        b = self.space.bindex(x)
        p = softmax(self._grid(theta)[b])
        block = -self.beta * (np.diag(p) - np.outer(p, p))
        out = np.zeros((na, self.dim, self.dim))
        sl = slice(b * na, (b + 1) * na)
        # every score of x shares the same Hessian: that of -beta * logsumexp
        out[:, sl, sl] = block
        return out

    def to_dict(self):
        return {
            "kind": self.kind,
            "backgrounds": list(self.space.backgrounds),
            "alternatives": list(self.space.alternatives),
            "beta": self.beta,
            "reference_logits": {
                x: {y: float(self.reference_logits[i, j]) for j, y in enumerate(self.space.alternatives)}
                for i, x in enumerate(self.space.backgrounds)
            },
        }


def model_from_dict(d: dict) -> ScoreModel:
    kind = d.get("kind")
    space = ProblemSpace(tuple(d.get("backgrounds", ())), tuple(d.get("alternatives", ())))
    if kind == "one_hot":
        return OneHotModel(space)
    if kind == "linear":
        return LinearModel.from_mapping(space, d.get("embedding", {}))
    if kind == "dpo_softmax":
        ref = d.get("reference_logits")
        if ref is None:
            arr = np.zeros((space.n_backgrounds, space.n_alternatives))
        else:
            try:
                arr = np.array([[ref[x][y] for y in space.alternatives] for x in space.backgrounds], dtype=float)
            except KeyError as exc:
                raise InputError(f"reference_logits missing entry {exc}") from None
        return DPOSoftmaxModel(space, arr, d.get("beta", 1.0))
    raise InputError(f"unknown score model {kind!r}")


def center_per_background(model: ScoreModel, theta) -> np.ndarray:
    """Optional gauge: shift each background's coordinates to mean zero.

    Only meaningful for one-hot and DPO models, where such a shift leaves
    every score difference unchanged.
    """
    if model.kind not in ("one_hot", "dpo_softmax"):
        raise InputError(f"per-background gauge is undefined for {model.kind} models")
    grid = np.asarray(theta, dtype=float).reshape(model.space.n_backgrounds, model.space.n_alternatives)
    return (grid - grid.mean(axis=1, keepdims=True)).ravel()


# Functional spellings of the model methods.

def score(model: ScoreModel, theta, x, y) -> float:
    return model.score(theta, x, y)


def score_difference(model: ScoreModel, theta, x, y, z) -> float:
    return model.score_difference(theta, x, y, z)


def score_gradient(model: ScoreModel, theta, x, y) -> np.ndarray:
    return model.score_gradient(theta, x, y)


def probability(model: ScoreModel, theta, x, y) -> float:
    return model.probability(theta, x, y)
