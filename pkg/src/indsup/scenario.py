"""Problem instances: instance law, true labelling, true transition, and classes.

The labelling is deterministic (realizable setting), so annotations are drawn
as ``x ~ D_X`` followed by ``o ~ (T0(x))_{h0(x)}``. There is no separate label
variable.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import (
    CoverageGapError,
    EmptyDatasetError,
    InputError,
    ScenarioError,
    SpaceMismatchError,
    UnboundedLossError,
)
from .losses import CROSS_ENTROPY, LossSpec, loss_table, loss_value
from .spaces import Distribution, FiniteSpace
from .transition import TransitionClass, TransitionHypothesis

#: Largest hypothesis class ``all_functions`` will enumerate.
ALL_FUNCTIONS_CAP = 200_000


@dataclass(frozen=True, eq=False)
class HypothesisClass:
    """Ordered list of label assignments, one row per hypothesis.

    ``tables[h, x]`` is the label index hypothesis ``h`` gives instance ``x``.
    """

    tables: np.ndarray
    provenance: Mapping[str, Any] = field(default_factory=lambda: {"kind": "explicit"})

    def __post_init__(self) -> None:
        t = np.asarray(self.tables)
        if t.ndim != 2 or t.shape[0] == 0 or t.shape[1] == 0:
            raise InputError("a hypothesis class needs at least one table over at least one instance")
        if not np.issubdtype(t.dtype, np.integer):
            if not np.all(t == np.round(t)):
                raise InputError("hypothesis tables must hold label indices")
        t = t.astype(np.int64)
        if np.any(t < 0):
            raise InputError("negative label index in hypothesis table")
        t.setflags(write=False)
        object.__setattr__(self, "tables", t)
        object.__setattr__(self, "provenance", dict(self.provenance))

    def __len__(self) -> int:
        return self.tables.shape[0]

    @property
    def n_instances(self) -> int:
        return self.tables.shape[1]

    @property
    def duplicate_count(self) -> int:
        return len(self) - len({row.tobytes() for row in self.tables})

    def index_of(self, table: Sequence[int]) -> int | None:
        hits = np.flatnonzero(np.all(self.tables == np.asarray(table), axis=1))
        return int(hits[0]) if hits.size else None

    @classmethod
    def explicit(cls, tables: Sequence[Sequence[int]]) -> "HypothesisClass":
        return cls(np.asarray(tables, dtype=np.int64), {"kind": "explicit"})

    @classmethod
    def all_functions(cls, n: int, c: int, cap: int = ALL_FUNCTIONS_CAP) -> "HypothesisClass":
        if c**n > cap:
            raise InputError(f"all_functions over {n} instances and {c} labels has {c**n} members, cap {cap}")
        tables = np.array(list(itertools.product(range(c), repeat=n)), dtype=np.int64)
        return cls(tables, {"kind": "all_functions"})

    @classmethod
    def threshold_1d(cls, embedding: Sequence[float]) -> "HypothesisClass":
        """Binary thresholds ``h_t(x) = 1{e(x) >= t}``, ``t`` increasing."""
        e = np.asarray(embedding, dtype=float)
        cuts = [-math.inf] + sorted(set(e.tolist()))[1:] + [math.inf]
        tables = np.array([(e >= t).astype(np.int64) for t in cuts], dtype=np.int64)
        return cls(tables, {"kind": "threshold_1d", "embedding": e.tolist()})


@dataclass(frozen=True)
class Dataset:
    """Sampled ``(instance, annotation)`` index pairs plus the seed that produced them."""

    xs: np.ndarray
    os: np.ndarray
    seed: int | None = None

    def __post_init__(self) -> None:
        xs = np.asarray(self.xs, dtype=np.int64).reshape(-1)
        os_ = np.asarray(self.os, dtype=np.int64).reshape(-1)
        if xs.shape != os_.shape:
            raise InputError("instance and annotation arrays differ in length")
        xs.setflags(write=False)
        os_.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "os", os_)

    @property
    def m(self) -> int:
        return int(self.xs.shape[0])

    def __len__(self) -> int:
        return self.m

    @property
    def samples(self) -> list[tuple[int, int]]:
        return list(zip(self.xs.tolist(), self.os.tolist()))

    def counts(self, n: int, s: int) -> np.ndarray:
        """``(n, s)`` table of how often each pair occurs."""
        flat = np.bincount(self.xs * s + self.os, minlength=n * s)
        return flat.reshape(n, s)


@dataclass(frozen=True, eq=False)
class Scenario:
    """A complete realizable indirect-supervision problem.

    Construction checks realizability (``h0`` is a row of ``hclass``) and that
    ``t0`` belongs to ``tclass`` up to 1e-12; every downstream guarantee
    depends on both.
    """

    x_space: FiniteSpace
    y_space: FiniteSpace
    o_space: FiniteSpace
    dx: Distribution
    h0: tuple[int, ...]
    t0: TransitionHypothesis
    hclass: HypothesisClass
    tclass: TransitionClass
    loss: LossSpec = field(default_factory=LossSpec)
    name: str = ""

    def __post_init__(self) -> None:
        n, c, s = self.x_space.size, self.y_space.size, self.o_space.size
        h0 = tuple(int(v) for v in self.h0)
        object.__setattr__(self, "h0", h0)
        if self.dx.space != self.x_space:
            raise SpaceMismatchError("dx is not a distribution over the instance space")
        if len(h0) != n or any(not 0 <= v < c for v in h0):
            raise CoverageGapError("h0 must assign a valid label to every instance")
        if self.hclass.n_instances != n:
            raise CoverageGapError(f"hypothesis tables cover {self.hclass.n_instances} instances, not {n}")
        if int(self.hclass.tables.max()) >= c:
            raise InputError("hypothesis table uses a label index outside the label space")
        if self.tclass.label_space != self.y_space or self.tclass.annotation_space != self.o_space:
            raise SpaceMismatchError("transition class spaces do not match the scenario")
        if self.t0.label_space != self.y_space or self.t0.annotation_space != self.o_space:
            raise SpaceMismatchError("true transition spaces do not match the scenario")
        tn = self.tclass.n_instances
        if tn is not None and tn != n:
            raise SpaceMismatchError(f"transition class is defined on {tn} instances, scenario has {n}")
        if self.hclass.index_of(h0) is None:
            raise ScenarioError("h0 is not in the hypothesis class (realizability fails)")
        if self.tclass.index_of(self.t0) is None:
            raise ScenarioError("the true transition is not a member of the transition class")
        self.loss.validate(c, s)

    # -- sizes -------------------------------------------------------------------
    @property
    def n(self) -> int:
        return self.x_space.size

    @property
    def c(self) -> int:
        return self.y_space.size

    @property
    def s(self) -> int:
        return self.o_space.size

    @cached_property
    def t0_index(self) -> int:
        return self.tclass.index_of(self.t0)  # type: ignore[return-value]

    @cached_property
    def h0_index(self) -> int:
        return self.hclass.index_of(self.h0)  # type: ignore[return-value]

    @cached_property
    def support(self) -> np.ndarray:
        """Instances with positive probability."""
        return np.flatnonzero(self.dx.probs > 0)

    # -- dense views used by grid scans -----------------------------------------
    @cached_property
    def transitions(self) -> np.ndarray:
        """``(K, n, c, s)`` stack of class members."""
        return self.tclass.stack(self.n)

    @cached_property
    def true_rows(self) -> np.ndarray:
        """``(n, s)`` annotation law at each instance: ``(T0(x))_{h0(x)}``."""
        t0 = self.t0.expand(self.n)
        return np.stack([t0[x, self.h0[x]] for x in range(self.n)])

    @cached_property
    def loss_tensor(self) -> np.ndarray:
        """``(K, n, c, s)`` annotation loss for every member, instance, prediction, outcome."""
        out = loss_table(self.loss, self.transitions)
        out.setflags(write=False)
        return out

    @cached_property
    def expected_losses(self) -> np.ndarray:
        """``(K, n, c)``: expected loss over ``o ~ (T0(x))_{h0(x)}`` for each member and prediction."""
        w = self.true_rows[None, :, None, :]
        L = self.loss_tensor
        with np.errstate(invalid="ignore"):
            terms = np.where(w > 0, w * L, 0.0)
        return terms.sum(axis=-1)

    @cached_property
    def risk_grid(self) -> np.ndarray:
        """``(H, K)`` annotation risk of every (hypothesis, member) pair."""
        sup = self.support
        p = self.dx.probs[sup]
        E = self.expected_losses[:, sup, :]  # (K, n', c)
        tables = self.hclass.tables[:, sup]  # (H, n')
        picked = E[:, np.arange(sup.size)[None, :], tables]  # (K, H, n')
        return (picked * p).sum(axis=-1).T

    @cached_property
    def classification_risks(self) -> np.ndarray:
        wrong = self.hclass.tables != np.asarray(self.h0)[None, :]
        return (wrong * self.dx.probs[None, :]).sum(axis=1)

    def with_changes(self, **changes: Any) -> "Scenario":
        return replace(self, **changes)

    def summary(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "instances": self.n,
            "labels": self.c,
            "annotations": self.s,
            "hypotheses": len(self.hclass),
            "transitions": len(self.tclass),
            "loss": self.loss.kind,
            "t0_index": self.t0_index,
        }


def _table(scenario: Scenario, h: Sequence[int]) -> tuple[int, ...]:
    t = tuple(int(v) for v in h)
    if len(t) != scenario.n or any(not 0 <= v < scenario.c for v in t):
        raise CoverageGapError(f"hypothesis {list(t)} does not label all {scenario.n} instances")
    return t


def _transition(scenario: Scenario, t: TransitionHypothesis | int) -> TransitionHypothesis:
    if isinstance(t, TransitionHypothesis):
        if t.label_space != scenario.y_space or t.annotation_space != scenario.o_space:
            raise SpaceMismatchError("transition spaces do not match the scenario")
        return t
    return scenario.tclass[int(t)]


def classification_risk(scenario: Scenario, h: Sequence[int]) -> float:
    """Probability that ``h`` disagrees with ``h0``."""
    t = _table(scenario, h)
    return float(sum(scenario.dx.probs[x] for x in range(scenario.n) if t[x] != scenario.h0[x]))


def annotation_risk(scenario: Scenario, h: Sequence[int], t: TransitionHypothesis | int) -> float:
    """Exact expected annotation loss of ``T o h`` under the scenario's data law."""
    table = _table(scenario, h)
    T = _transition(scenario, t)
    total = 0.0
    for x in range(scenario.n):
        px = scenario.dx.probs[x]
        if px == 0:
            continue
        row = scenario.t0.matrix(x)[scenario.h0[x]]
        for o in range(scenario.s):
            if row[o] == 0:
                continue
            total += px * row[o] * loss_value(scenario.loss, table[x], T, x, o)
    return total


def empirical_annotation_risk(
    h: Sequence[int], t: TransitionHypothesis, dataset: Dataset, loss: LossSpec
) -> float:
    """Mean annotation loss of ``T o h`` over the samples."""
    if dataset.m == 0:
        raise EmptyDatasetError("empirical risk of an empty dataset")
    table = np.asarray(h, dtype=np.int64)
    if dataset.xs.max() >= table.shape[0]:
        raise CoverageGapError("dataset references an instance the hypothesis does not label")
    mats = t.expand(table.shape[0]) if not t.constant else t.matrices
    xi = dataset.xs if not t.constant else np.zeros_like(dataset.xs)
    labels = table[dataset.xs]
    if loss.kind == CROSS_ENTROPY:
        probs = np.asarray(mats)[xi, labels, dataset.os]
        if np.any(probs == 0):
            return math.inf
        return float(-np.log(probs).mean())
    hits = np.array([o in loss.sets[y] for y, o in zip(labels.tolist(), dataset.os.tolist())])
    return float(1.0 - hits.mean())


def _inverse_cdf(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    # Scaling by the last cumulative value keeps the draw strictly below it,
    # so trailing zero-probability outcomes are never selected.
    return np.searchsorted(cdf, u * cdf[..., -1], side="right")


def sample_dataset(scenario: Scenario, m: int, seed: int) -> Dataset:
    """Draw ``m`` i.i.d. pairs with PCG64 seeded by ``seed``.

    Instances come from the first ``m`` uniforms, annotations from the next
    ``m``, both by inverse CDF. The mapping from seed to dataset is part of
    the reproducibility contract.
    """
    if m < 1:
        raise InputError("sample size must be at least 1")
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    u_x = rng.random(m)
    u_o = rng.random(m)
    xs = _inverse_cdf(np.cumsum(scenario.dx.probs), u_x)
    cdfs = np.cumsum(scenario.true_rows, axis=1)
    os_ = np.empty(m, dtype=np.int64)
    for x in np.unique(xs):
        sel = xs == x
        os_[sel] = _inverse_cdf(cdfs[x], u_o[sel])
    return Dataset(xs, os_, int(seed))


def reachable_labels(hclass: HypothesisClass, x: int) -> frozenset[int]:
    """Labels some hypothesis assigns to instance ``x``."""
    if not 0 <= x < hclass.n_instances:
        raise InputError(f"instance index {x} out of range")
    return frozenset(int(v) for v in np.unique(hclass.tables[:, x]))


def loss_ceiling(scenario: Scenario) -> float:
    """Upper end ``b`` of the loss range on the data support.

    Concentration loss is bounded by 1. Cross-entropy is bounded by
    ``-ln(floor)`` where ``floor`` is the smallest positive entry in the class,
    unless some member assigns probability 0 to an outcome that can actually
    be observed for a label the hypothesis class can predict; then the loss is
    unbounded and :class:`UnboundedLossError` carries the witness.
    """
    if scenario.loss.kind != CROSS_ENTROPY:
        return 1.0
    T = scenario.transitions
    for x in scenario.support.tolist():
        seen = np.flatnonzero(scenario.true_rows[x] > 0)
        for i in sorted(reachable_labels(scenario.hclass, x)):
            zero = T[:, x, i, :][:, seen] == 0
            if zero.any():
                k, j = map(int, np.argwhere(zero)[0])
                witness = (k, int(x), int(i), int(seen[j]))
                raise UnboundedLossError(
                    f"transition {k} gives probability 0 to observable outcome "
                    f"{scenario.o_space.names[witness[3]]} at instance {x}, label {i}",
                    witness,
                )
    return -math.log(scenario.tclass.floor) + 0.0
