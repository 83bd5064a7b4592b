"""Transition hypotheses, transition classes and induced distribution families.

A transition hypothesis maps an instance to a row-stochastic ``c x s`` matrix;
row ``i`` is the law of the annotation given label ``i``. Instance-independent
hypotheses store a single matrix.

Continuous families (noise rates, logistic weights) are enumerated on finite,
user-declared grids. Quantities computed as minima over such a class are exact
for the grid but only upper bounds for the continuous family it discretizes;
:attr:`TransitionClass.grid_derived` lets reports say so.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptyGridError,
    IndexOutOfRangeError,
    InputError,
    SpaceMismatchError,
    SpaceTooLargeError,
)
from .spaces import SUM_TOLERANCE, Distribution, FiniteSpace

#: Default cap on the size of a materialized superset annotation space.
SUPERSET_CAP = 4096
#: Tolerance used to decide whether two transition hypotheses are the same.
MATCH_TOLERANCE = 1e-12


def _row_normalize(m: np.ndarray) -> np.ndarray:
    if np.any(~np.isfinite(m)):
        raise InputError("transition entries must be finite")
    if np.any(m < 0):
        raise InputError("transition entries must be nonnegative")
    sums = m.sum(axis=-1, keepdims=True)
    if np.any(np.abs(sums - 1.0) > 1e-9):
        bad = np.argwhere(np.abs(sums[..., 0] - 1.0) > 1e-9)[0].tolist()
        raise InputError(f"transition row {bad} sums to {float(sums[tuple(bad)][0])!r}, not 1")
    return m / sums


@dataclass(frozen=True, eq=False)
class TransitionHypothesis:
    """A candidate transition ``T(x)``.

    ``matrices`` has shape ``(k, c, s)``; ``k == 1`` means the same matrix is
    used at every instance, otherwise ``k`` is the number of instances.
    ``params`` carries named generating parameters (e.g. ``{"rate": 0.2}``),
    used for joint-class constraints and for reports.
    """

    label_space: FiniteSpace
    annotation_space: FiniteSpace
    matrices: np.ndarray
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        m = np.asarray(self.matrices, dtype=float)
        if m.ndim == 2:
            m = m[None]
        c, s = self.label_space.size, self.annotation_space.size
        if m.ndim != 3 or m.shape[1:] != (c, s):
            raise DimensionMismatchError(
                f"transition matrices have shape {m.shape}, expected (k, {c}, {s})"
            )
        m = _row_normalize(m)
        if m.shape[0] > 1 and all(np.array_equal(m[0], m[k]) for k in range(1, m.shape[0])):
            m = m[:1]
        m = np.array(m)
        m.setflags(write=False)
        object.__setattr__(self, "matrices", m)
        object.__setattr__(self, "params", dict(self.params))

    @property
    def constant(self) -> bool:
        return self.matrices.shape[0] == 1

    @property
    def n_instances(self) -> int | None:
        """Number of instances the hypothesis is defined on, ``None`` if constant."""
        return None if self.constant else self.matrices.shape[0]

    @property
    def entry_floor(self) -> float:
        pos = self.matrices[self.matrices > 0]
        return float(pos.min())

    def matrix(self, x: int) -> np.ndarray:
        if x < 0 or (not self.constant and x >= self.matrices.shape[0]):
            raise IndexOutOfRangeError(f"instance index {x} out of range")
        return self.matrices[0 if self.constant else x]

    def expand(self, n: int) -> np.ndarray:
        """The ``(n, c, s)`` array of matrices over ``n`` instances."""
        if self.constant:
            return np.broadcast_to(self.matrices[0], (n,) + self.matrices.shape[1:])
        if self.matrices.shape[0] != n:
            raise DimensionMismatchError(
                f"transition is defined on {self.matrices.shape[0]} instances, scenario has {n}"
            )
        return self.matrices

    def same_as(self, other: "TransitionHypothesis", tol: float = MATCH_TOLERANCE) -> bool:
        if self.label_space != other.label_space or self.annotation_space != other.annotation_space:
            return False
        a, b = self.matrices, other.matrices
        if a.shape[0] != b.shape[0]:
            if a.shape[0] != 1 and b.shape[0] != 1:
                return False
            n = max(a.shape[0], b.shape[0])
            a, b = np.broadcast_to(a, (n,) + a.shape[1:]), np.broadcast_to(b, (n,) + b.shape[1:])
        return bool(np.max(np.abs(a - b)) <= tol)

    def __repr__(self) -> str:
        tag = ", ".join(f"{k}={v:g}" for k, v in self.params.items())
        kind = "constant" if self.constant else f"{self.matrices.shape[0]} instances"
        return f"TransitionHypothesis({kind}{', ' + tag if tag else ''})"


def induced_distribution(t: TransitionHypothesis, x: int, i: int) -> Distribution:
    """Row ``i`` of ``T(x)``: the annotation law induced by predicting label ``i``."""
    if not 0 <= i < t.label_space.size:
        raise IndexOutOfRangeError(f"label index {i} out of range")
    return Distribution(t.annotation_space, t.matrix(x)[i])


@dataclass(frozen=True, eq=False)
class TransitionClass:
    """A finite, ordered family of transition hypotheses sharing their spaces."""

    members: tuple[TransitionHypothesis, ...]
    spec: Mapping[str, Any] = field(default_factory=lambda: {"kind": "explicit"})

    def __post_init__(self) -> None:
        members = tuple(self.members)
        if not members:
            raise EmptyGridError("a transition class needs at least one member")
        first = members[0]
        for t in members[1:]:
            if t.label_space != first.label_space or t.annotation_space != first.annotation_space:
                raise SpaceMismatchError("class members disagree on label/annotation spaces")
        sizes = {t.n_instances for t in members} - {None}
        if len(sizes) > 1:
            raise DimensionMismatchError(f"members are defined on different instance counts {sorted(sizes)}")
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "spec", dict(self.spec))
        object.__setattr__(self, "_stacks", {})

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, k: int) -> TransitionHypothesis:
        return self.members[k]

    @property
    def label_space(self) -> FiniteSpace:
        return self.members[0].label_space

    @property
    def annotation_space(self) -> FiniteSpace:
        return self.members[0].annotation_space

    @property
    def n_instances(self) -> int | None:
        sizes = {t.n_instances for t in self.members} - {None}
        return sizes.pop() if sizes else None

    @property
    def floor(self) -> float:
        return min(t.entry_floor for t in self.members)

    @property
    def grid_derived(self) -> bool:
        return self.spec.get("kind") != "explicit"

    @property
    def instance_independent(self) -> bool:
        return all(t.constant for t in self.members)

    def stack(self, n: int) -> np.ndarray:
        """Read-only ``(K, n, c, s)`` array of every member's matrices."""
        cache = self._stacks  # type: ignore[attr-defined]
        if n not in cache:
            arr = np.stack([np.asarray(t.expand(n)) for t in self.members])
            arr.setflags(write=False)
            cache[n] = arr
        return cache[n]

    def index_of(self, t: TransitionHypothesis, tol: float = MATCH_TOLERANCE) -> int | None:
        for k, member in enumerate(self.members):
            if member.same_as(t, tol):
                return k
        return None

    def find(self, **params: float) -> int:
        """Index of the first member whose parameters match ``params`` (to 1e-12)."""
        for k, member in enumerate(self.members):
            if all(
                name in member.params and abs(member.params[name] - float(v)) <= 1e-12
                for name, v in params.items()
            ):
                return k
        raise InputError(f"no class member with parameters {params}")


@dataclass(frozen=True)
class InducedFamily:
    """The rows ``(T(x))_i`` for every ``T`` in a class, in class order."""

    distributions: tuple[Distribution, ...]
    label: int
    instance: int

    def __len__(self) -> int:
        return len(self.distributions)


def induced_family(tclass: TransitionClass, x: int, i: int) -> InducedFamily:
    return InducedFamily(
        tuple(induced_distribution(t, x, i) for t in tclass.members), label=i, instance=x
    )


# -- generators ---------------------------------------------------------------


def uniform_noise_matrix(c: int, rate: float) -> np.ndarray:
    """Diagonal ``1 - rate``, off-diagonal ``rate / (c - 1)``."""
    if c < 2:
        raise InputError("uniform noise needs at least two labels")
    if not 0.0 <= rate <= 1.0:
        raise InputError(f"noise rate {rate!r} outside [0, 1]")
    m = np.full((c, c), rate / (c - 1))
    np.fill_diagonal(m, 1.0 - rate)
    return m


def superset_space(labels: FiniteSpace, cap: int = SUPERSET_CAP) -> FiniteSpace:
    """All subsets of the label space, ordered by bitmask (bit ``i`` = label ``i``)."""
    c = labels.size
    if 2**c > cap:
        raise SpaceTooLargeError(f"superset space has 2^{c} outcomes, cap is {cap}")
    names = []
    for mask in range(2**c):
        members = [labels.names[i] for i in range(c) if mask >> i & 1]
        names.append("{" + ",".join(members) + "}")
    return FiniteSpace(tuple(names))


def superset_matrix(c: int, q_in: float) -> np.ndarray:
    """Subset-emission matrix: ``P(y in O | y) = q_in``, uniform within each group."""
    if not 0.0 <= q_in <= 1.0:
        raise InputError(f"q_in {q_in!r} outside [0, 1]")
    s = 2**c
    half = 2 ** (c - 1)
    m = np.empty((c, s))
    for i in range(c):
        for mask in range(s):
            m[i, mask] = (q_in if mask >> i & 1 else 1.0 - q_in) / half
    return m


def superset_concentration_sets(c: int) -> list[frozenset[int]]:
    """``S_i = {o : y_i in o}`` as outcome indices of :func:`superset_space`."""
    return [frozenset(mask for mask in range(2**c) if mask >> i & 1) for i in range(c)]


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def logistic_matrices(embeddings: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Binary label noise with flip probability ``sigmoid(w . x)`` at each instance."""
    out = np.empty((embeddings.shape[0], 2, 2))
    for x, e in enumerate(embeddings):
        flip = _sigmoid(float(np.dot(w, e)))
        out[x] = [[1.0 - flip, flip], [flip, 1.0 - flip]]
    return out


def _grid(values: Any, what: str) -> list[float]:
    vals = [float(v) for v in (values or [])]
    if not vals:
        raise EmptyGridError(f"{what} grid is empty")
    return vals


def build_class(
    spec: Mapping[str, Any],
    labels: FiniteSpace,
    annotations: FiniteSpace | None = None,
    *,
    cap: int = SUPERSET_CAP,
) -> TransitionClass:
    """Enumerate a transition class from a declarative spec.

    Supported kinds:

    ``explicit``
        ``matrices``: list of members, each a ``c x s`` matrix or a list of
        ``n`` such matrices (instance-dependent). Needs ``annotations``.
    ``uniform_noise``
        ``rates``: noise rates; annotation space equals the label space.
    ``superset_noise``
        ``q_in``: values of ``P(y in O | y)``; annotations are all subsets of
        the labels.
    ``logistic``
        ``embeddings``: ``n x p`` instance vectors; ``weights``: list of
        ``p``-vectors. Binary labels only.
    ``joint``
        see :func:`indsup.joint.compose_joint`.
    """
    kind = spec.get("kind")
    c = labels.size
    if kind == "explicit":
        if annotations is None:
            raise InputError("explicit transition class needs an annotation space")
        mats = spec.get("matrices") or []
        if not len(mats):
            raise EmptyGridError("explicit class has no matrices")
        members = []
        for k, m in enumerate(mats):
            params = {}
            if spec.get("params") is not None:
                params = dict(spec["params"][k])
            members.append(TransitionHypothesis(labels, annotations, np.asarray(m, dtype=float), params))
        return TransitionClass(tuple(members), dict(spec))
    if kind == "uniform_noise":
        rates = _grid(spec.get("rates"), "rates")
        members = tuple(
            TransitionHypothesis(labels, labels, uniform_noise_matrix(c, r), {"rate": r}) for r in rates
        )
        return TransitionClass(members, dict(spec))
    if kind == "superset_noise":
        qs = _grid(spec.get("q_in"), "q_in")
        space = superset_space(labels, cap)
        members = tuple(
            TransitionHypothesis(labels, space, superset_matrix(c, q), {"q_in": q}) for q in qs
        )
        return TransitionClass(members, dict(spec))
    if kind == "logistic":
        if c != 2:
            raise InputError("logistic transition class is defined for binary labels only")
        emb = np.atleast_2d(np.asarray(spec.get("embeddings") or [], dtype=float))
        if emb.size == 0:
            raise EmptyGridError("logistic class needs instance embeddings")
        ws = [np.atleast_1d(np.asarray(w, dtype=float)) for w in (spec.get("weights") or [])]
        if not ws:
            raise EmptyGridError("logistic weight lattice is empty")
        members = []
        for w in ws:
            if w.shape[0] != emb.shape[1]:
                raise DimensionMismatchError(
                    f"weight of length {w.shape[0]} for {emb.shape[1]}-dimensional embeddings"
                )
            params = {f"w{k}": float(v) for k, v in enumerate(w)}
            members.append(TransitionHypothesis(labels, labels, logistic_matrices(emb, w), params))
        return TransitionClass(tuple(members), dict(spec))
    if kind == "joint":
        from .joint import joint_class_from_spec

        return joint_class_from_spec(spec, labels, cap=cap)
    raise InputError(f"unknown transition class kind {kind!r}")


def lattice(axes: Sequence[Sequence[float]]) -> list[list[float]]:
    """Cartesian product of per-coordinate grids, in lexicographic order."""
    return [list(p) for p in itertools.product(*axes)]


__all__ = [
    "TransitionHypothesis",
    "TransitionClass",
    "InducedFamily",
    "induced_distribution",
    "induced_family",
    "build_class",
    "uniform_noise_matrix",
    "superset_space",
    "superset_matrix",
    "superset_concentration_sets",
    "logistic_matrices",
    "lattice",
    "SUM_TOLERANCE",
]
