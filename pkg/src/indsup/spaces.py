"""Finite spaces, distributions on them, and KL / total-variation divergences.

All logarithms are natural. ``kl`` returns ``math.inf`` (never NaN) when the
first argument puts mass where the second has none.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    LengthMismatchError,
    NegativeWeightError,
    SpaceMismatchError,
    ZeroMassError,
    InputError,
)

#: Absolute tolerance on the total mass of a probability vector before renormalization.
SUM_TOLERANCE = 1e-12


@dataclass(frozen=True)
class FiniteSpace:
    """An ordered set of distinct names; positions are the element identities."""

    names: tuple[str, ...]

    def __post_init__(self) -> None:
        names = tuple(str(n) for n in self.names)
        if not names:
            raise InputError("a finite space needs at least one element")
        if len(set(names)) != len(names):
            dup = sorted({n for n in names if names.count(n) > 1})
            raise InputError(f"duplicate names in space: {dup}")
        object.__setattr__(self, "names", names)

    @classmethod
    def of(cls, names: Iterable[str]) -> "FiniteSpace":
        return cls(tuple(names))

    @classmethod
    def numbered(cls, prefix: str, n: int) -> "FiniteSpace":
        """``prefix1 .. prefixn``, matching the 1-based naming used in the literature."""
        return cls(tuple(f"{prefix}{k + 1}" for k in range(n)))

    @property
    def size(self) -> int:
        return len(self.names)

    def __len__(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(str(name))
        except ValueError:
            raise InputError(f"unknown element {name!r}; known: {list(self.names)}") from None


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Distribution:
    """Probability vector over a :class:`FiniteSpace`.

    The constructor accepts vectors whose mass is within ``SUM_TOLERANCE`` of 1
    and divides by the sum, so downstream code may assume the entries sum to 1.
    Use :func:`make_distribution` for unnormalized weights.
    """

    space: FiniteSpace
    probs: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.probs, dtype=float).reshape(-1)
        if p.shape[0] != self.space.size:
            raise LengthMismatchError(
                f"probability vector has length {p.shape[0]}, space has {self.space.size}"
            )
        if np.any(~np.isfinite(p)):
            raise InputError("probabilities must be finite")
        if np.any(p < 0):
            raise NegativeWeightError(f"negative probability in {p.tolist()}")
        total = float(p.sum())
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise InputError(f"probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "probs", _frozen(p / total))

    def __len__(self) -> int:
        return self.space.size

    def __getitem__(self, k: int) -> float:
        return float(self.probs[k])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Distribution):
            return NotImplemented
        return self.space == other.space and bool(np.array_equal(self.probs, other.probs))

    def __hash__(self) -> int:
        return hash((self.space, self.probs.tobytes()))

    def __repr__(self) -> str:
        vals = ", ".join(f"{v:.6g}" for v in self.probs)
        return f"Distribution({vals})"

    @property
    def support(self) -> frozenset[int]:
        return frozenset(int(k) for k in np.flatnonzero(self.probs > 0))

    def mass(self, outcomes: Iterable[int]) -> float:
        idx = list(outcomes)
        return float(self.probs[idx].sum()) if idx else 0.0


def make_distribution(space: FiniteSpace, weights: Sequence[float]) -> Distribution:
    """Normalize nonnegative ``weights`` into a distribution on ``space``."""
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.shape[0] != space.size:
        raise LengthMismatchError(f"{w.shape[0]} weights for a space of size {space.size}")
    if np.any(w < 0):
        raise NegativeWeightError(f"negative weight in {w.tolist()}")
    total = float(w.sum())
    if not total > 0:
        raise ZeroMassError("weights sum to zero")
    if not math.isfinite(total):
        raise InputError("weights must be finite")
    return Distribution(space, w / total)


def point_mass(space: FiniteSpace, k: int) -> Distribution:
    w = np.zeros(space.size)
    w[k] = 1.0
    return Distribution(space, w)


def kl_array(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """KL divergence along the last axis, broadcasting over the leading axes.

    Each coordinate contributes ``p ln(p/q) - p + q``, which is nonnegative, so
    the result is exactly 0 for identical rows and never negative. Because
    both rows sum to 1 the extra terms cancel in the total.
    """
    p, q = np.broadcast_arrays(np.asarray(p, dtype=float), np.asarray(q, dtype=float))
    pos = p > 0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        d = np.where(pos, (q - p) / np.where(pos, p, 1.0), 0.0)
        near = np.abs(d) <= 0.5
        # log1p form near p == q avoids cancellation; the direct form elsewhere avoids inf - inf
        close = p * (d - np.log1p(np.where(near, d, 0.0)))
        far = p * (np.log(p) - np.log(q)) - p + q
        terms = np.where(pos, np.where(near, close, far), q)
    terms = np.maximum(terms, 0.0)
    out = terms.sum(axis=-1)
    return out


def _check_same(p: Distribution, q: Distribution) -> None:
    if p.space != q.space:
        raise SpaceMismatchError("distributions live on different spaces")


def kl(p: Distribution, q: Distribution) -> float:
    """KL(p || q) in nats; ``math.inf`` when p is not absolutely continuous w.r.t. q."""
    _check_same(p, q)
    return float(kl_array(p.probs, q.probs))


def total_variation(p: Distribution, q: Distribution) -> float:
    """Half the L1 distance."""
    _check_same(p, q)
    return 0.5 * float(np.abs(p.probs - q.probs).sum())


def entropy(p: Distribution | np.ndarray) -> float:
    v = p.probs if isinstance(p, Distribution) else np.asarray(p, dtype=float)
    nz = v[v > 0]
    return float(-(nz * np.log(nz)).sum())
