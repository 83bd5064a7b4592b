"""Annotation losses: cross-entropy and the set-membership (concentration) loss."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import BadSetError, IndexOutOfRangeError, InputError
from .transition import TransitionHypothesis

CROSS_ENTROPY = "cross_entropy"
CONCENTRATION = "concentration"


@dataclass(frozen=True)
class LossSpec:
    """Which annotation loss to use.

    ``sets[i]`` is the concentration set of label ``i`` as a frozenset of
    outcome indices; required iff ``kind == "concentration"``.
    """

    kind: str = CROSS_ENTROPY
    sets: tuple[frozenset[int], ...] | None = None

    def __post_init__(self) -> None:
        if self.kind not in (CROSS_ENTROPY, CONCENTRATION):
            raise InputError(f"unknown loss kind {self.kind!r}")
        if self.kind == CONCENTRATION:
            if self.sets is None:
                raise InputError("concentration loss needs one set per label")
            object.__setattr__(self, "sets", tuple(frozenset(int(o) for o in s) for s in self.sets))
        elif self.sets is not None:
            object.__setattr__(self, "sets", tuple(frozenset(int(o) for o in s) for s in self.sets))

    @classmethod
    def concentration(cls, sets: Iterable[Iterable[int]]) -> "LossSpec":
        return cls(CONCENTRATION, tuple(frozenset(s) for s in sets))

    def validate(self, c: int, s: int) -> None:
        if self.sets is None:
            return
        if len(self.sets) != c:
            raise BadSetError(f"{len(self.sets)} concentration sets for {c} labels")
        check_sets(self.sets, s)

    @property
    def transition_free(self) -> bool:
        return self.kind == CONCENTRATION


def check_sets(sets: Sequence[frozenset[int]], s: int) -> None:
    for i, S in enumerate(sets):
        bad = [o for o in S if not 0 <= o < s]
        if bad:
            raise BadSetError(f"concentration set {i} references unknown outcomes {sorted(bad)}")


def cross_entropy_loss(y_hat: int, t: TransitionHypothesis, x: int, o: int) -> float:
    """``-ln (T(x))_{y_hat}(o)``; ``math.inf`` when that entry is 0."""
    m = t.matrix(x)
    if not 0 <= y_hat < m.shape[0] or not 0 <= o < m.shape[1]:
        raise IndexOutOfRangeError(f"label {y_hat} / outcome {o} out of range")
    p = float(m[y_hat, o])
    return math.inf if p == 0.0 else -math.log(p) + 0.0


def concentration_loss(y_hat: int, sets: Sequence[frozenset[int]], o: int) -> int:
    """``1{o not in S_{y_hat}}``. Does not look at the transition."""
    if not 0 <= y_hat < len(sets):
        raise BadSetError(f"no concentration set for label {y_hat}")
    return 0 if o in sets[y_hat] else 1


def loss_value(loss: LossSpec, y_hat: int, t: TransitionHypothesis, x: int, o: int) -> float:
    if loss.kind == CROSS_ENTROPY:
        return cross_entropy_loss(y_hat, t, x, o)
    return float(concentration_loss(y_hat, loss.sets, o))


def membership_matrix(sets: Sequence[frozenset[int]], s: int) -> np.ndarray:
    """``(c, s)`` 0/1 array with ``[i, o] = 1{o in S_i}``."""
    out = np.zeros((len(sets), s))
    for i, S in enumerate(sets):
        out[i, sorted(S)] = 1.0
    return out


def loss_table(loss: LossSpec, matrices: np.ndarray) -> np.ndarray:
    """Loss for every (..., label, outcome) cell of a stack of transition matrices."""
    matrices = np.asarray(matrices, dtype=float)
    if loss.kind == CROSS_ENTROPY:
        with np.errstate(divide="ignore"):
            return -np.log(matrices) + 0.0
    member = membership_matrix(loss.sets, matrices.shape[-1])
    return np.broadcast_to(1.0 - member, matrices.shape).copy()
