"""Combinatorial dimensions by exhaustive shattering search, plus the bound terms.

Weak VC-major dimension is the largest VC dimension over thresholds ``u`` of
the families ``{(x, o) : loss > u}``. The threshold comparison is strict.
Between two consecutive realized loss values the family does not change, so
scanning the realized values is exact.

Shattering is hereditary, so the searches grow the subset size one step at a
time and only test sets whose every one-smaller subset is shattered.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .errors import BadParamsError, CapExceededError, InputError
from .losses import LossSpec, loss_table
from .scenario import HypothesisClass, Scenario, loss_ceiling, sample_dataset
from .transition import TransitionClass

NATARAJAN_CAP = 16
WEAK_VC_CAP = 12


@dataclass(frozen=True)
class DimensionResult:
    """A dimension value and the evidence for it.

    ``witness`` lists the shattered points. For Natarajan dimension,
    ``functions`` holds the two labelings ``(f0, f1)`` on those points; for
    weak VC-major, ``threshold`` is the maximizing ``u``.
    ``exhaustive`` is False for randomized lower bounds.
    """

    value: int
    witness: tuple[Any, ...]
    exhaustive: bool
    functions: tuple[tuple[int, ...], tuple[int, ...]] | None = None
    threshold: float | None = None
    domain: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "value": self.value,
            "witness": [list(p) if isinstance(p, tuple) else p for p in self.witness],
            "exhaustive": self.exhaustive,
            "functions": None if self.functions is None else [list(f) for f in self.functions],
            "threshold": self.threshold,
            "domain": self.domain,
        }


# -- VC dimension of a finite family of indicator masks ---------------------------


def _bits(mask: int) -> list[int]:
    return [p for p in range(mask.bit_length()) if mask >> p & 1]


def _traces(F: np.ndarray, mask: int) -> int:
    return int(np.unique(F & np.int64(mask)).size)


def vc_dimension(masks: Sequence[int] | np.ndarray, n_points: int) -> tuple[int, int]:
    """VC dimension of a family of subsets of ``range(n_points)`` given as bitmasks.

    Returns ``(dimension, witness mask)`` where the witness is the
    lexicographically first shattered set of maximal size.
    """
    if n_points > 62:
        raise InputError("bitmask VC search supports at most 62 points")
    F = np.unique(np.asarray(masks, dtype=np.int64))
    if F.size == 0:
        return 0, 0
    prev = {0}
    best = (0, 0)
    for k in range(1, n_points + 1):
        if 2**k > F.size:
            break
        found = []
        for combo in itertools.combinations(range(n_points), k):
            mask = sum(1 << p for p in combo)
            if any((mask & ~(1 << p)) not in prev for p in combo):
                continue
            if _traces(F, mask) == 2**k:
                found.append(mask)
        if not found:
            break
        prev = set(found)
        best = (k, found[0])
    return best


def _vc_random(F: np.ndarray, n_points: int, samples: int, rng: np.random.Generator) -> tuple[int, int]:
    best = (0, 0)
    F = np.unique(F)
    for k in range(1, n_points + 1):
        if 2**k > F.size:
            break
        hit = None
        for _ in range(samples):
            combo = sorted(rng.choice(n_points, size=k, replace=False).tolist())
            mask = sum(1 << p for p in combo)
            if _traces(F, mask) == 2**k:
                hit = mask
                break
        if hit is None:
            break
        best = (k, hit)
    return best


def _masks(values: np.ndarray, u: float) -> np.ndarray:
    bits = (values > u).astype(np.int64)
    weights = np.left_shift(np.int64(1), np.arange(values.shape[1], dtype=np.int64))
    return bits @ weights


def _weak_vc(values: np.ndarray, n_points: int, exhaustive: bool, samples: int, seed: int) -> tuple[int, int, float | None]:
    """Max over realized thresholds of the VC dimension of ``{value > u}``."""
    rng = np.random.default_rng(seed)
    best = (0, 0, None)
    for u in np.unique(values).tolist():
        F = _masks(values, u)
        d, w = vc_dimension(F, n_points) if exhaustive else _vc_random(F, n_points, samples, rng)
        if best[2] is None or d > best[0]:
            best = (d, w, float(u))
    return best


def weak_vc_major_dimension(
    hclass: HypothesisClass,
    tclass: TransitionClass,
    loss: LossSpec,
    n_instances: int | None = None,
    *,
    cap: int = WEAK_VC_CAP,
    mode: str = "exhaustive",
    samples: int = 2000,
    seed: int = 0,
) -> DimensionResult:
    """Weak VC-major dimension of the composed loss class on instance x annotation pairs."""
    n = hclass.n_instances if n_instances is None else n_instances
    s = tclass.annotation_space.size
    points = n * s
    exhaustive = mode == "exhaustive"
    if exhaustive and points > cap:
        raise CapExceededError("weak VC-major search over instance x annotation pairs", points, cap)
    L = loss_table(loss, tclass.stack(n))  # (K, n, c, s)
    tables = hclass.tables
    picked = L[:, np.arange(n)[None, :], tables, :]  # (K, H, n, s)
    values = picked.reshape(-1, points)
    d, w, u = _weak_vc(values, points, exhaustive, samples, seed)
    witness = tuple(divmod(p, s) for p in _bits(w))
    return DimensionResult(d, witness, exhaustive, threshold=u, domain="instance x annotation")


def scenario_weak_vc_major(scenario: Scenario, **kw: Any) -> DimensionResult:
    return weak_vc_major_dimension(scenario.hclass, scenario.tclass, scenario.loss, scenario.n, **kw)


def transition_dimension(
    tclass: TransitionClass,
    loss: LossSpec,
    n_instances: int,
    *,
    cap: int = WEAK_VC_CAP,
    mode: str = "exhaustive",
    samples: int = 2000,
    seed: int = 0,
) -> DimensionResult:
    """Weak VC-major dimension of the loss class indexed by transitions alone.

    Points are ``(x, predicted label, o)`` triples. When every member yields
    the same loss everywhere (e.g. the set loss) the answer is 0 without a
    search, whatever the domain size.
    """
    n = n_instances
    c, s = tclass.label_space.size, tclass.annotation_space.size
    L = loss_table(loss, tclass.stack(n)).reshape(len(tclass), -1)
    if np.all(L == L[:1]):
        return DimensionResult(0, (), True, threshold=None, domain="instance x label x annotation")
    points = n * c * s
    exhaustive = mode == "exhaustive"
    if exhaustive and points > cap:
        raise CapExceededError("weak VC-major search over instance x label x annotation triples", points, cap)
    d, w, u = _weak_vc(L, points, exhaustive, samples, seed)
    witness = tuple((p // (c * s), (p // s) % c, p % s) for p in _bits(w))
    return DimensionResult(d, witness, exhaustive, threshold=u, domain="instance x label x annotation")


# -- Natarajan dimension -----------------------------------------------------------


def _n_shatter_pair(proj: set[tuple[int, ...]], k: int) -> tuple[tuple[int, ...], tuple[int, ...]] | None:
    ordered = sorted(proj)
    for f0 in ordered:
        for f1 in ordered:
            if any(a == b for a, b in zip(f0, f1)):
                continue
            if all(
                tuple(f0[t] if B >> t & 1 else f1[t] for t in range(k)) in proj for B in range(2**k)
            ):
                return f0, f1
    return None


def natarajan_dimension(
    hclass: HypothesisClass,
    *,
    cap: int = NATARAJAN_CAP,
    mode: str = "exhaustive",
    samples: int = 500,
    seed: int = 0,
) -> DimensionResult:
    """Largest set of instances N-shattered by the class.

    A set ``A`` is N-shattered when two labelings ``f0, f1`` that differ at
    every point of ``A`` exist such that every mixture (``f0`` on ``B``,
    ``f1`` on ``A \\ B``) is realized by some hypothesis.
    """
    n = hclass.n_instances
    exhaustive = mode == "exhaustive"
    if exhaustive and n > cap:
        raise CapExceededError("Natarajan search over instances", n, cap)
    tables = np.unique(hclass.tables, axis=0)
    rng = np.random.default_rng(seed)
    prev: set[tuple[int, ...]] = {()}
    best: tuple[int, tuple[int, ...], Any] = (0, (), None)
    for k in range(1, n + 1):
        if 2**k > tables.shape[0]:
            break
        if exhaustive:
            candidates = itertools.combinations(range(n), k)
        else:
            candidates = (tuple(sorted(rng.choice(n, size=k, replace=False).tolist())) for _ in range(samples))
        found = []
        for A in candidates:
            if exhaustive and any(A[:t] + A[t + 1 :] not in prev for t in range(k)):
                continue
            proj = set(map(tuple, tables[:, list(A)].tolist()))
            if len(proj) < 2**k:
                continue
            pair = _n_shatter_pair(proj, k)
            if pair is not None:
                found.append((A, pair))
                if not exhaustive:
                    break
        if not found:
            break
        prev = {A for A, _ in found}
        best = (k, found[0][0], found[0][1])
    return DimensionResult(best[0], best[1], exhaustive, functions=best[2], domain="instances")


# -- bound terms -------------------------------------------------------------------


def dimension_bound(d_h: int, d_t: int, c: int) -> int:
    """Integer ceiling of ``2((d_h + d_t) ln(6(d_h + d_t)) + 2 d_h ln c)``."""
    if d_h < 0 or d_t < 0 or c < 2:
        raise BadParamsError("need d_h >= 0, d_t >= 0 and c >= 2")
    total = d_h + d_t
    if total == 0:
        return 0
    return math.ceil(2.0 * (total * math.log(6 * total) + 2 * d_h * math.log(c)))


def gamma_bar(m: int, d: int) -> float:
    """``ln(2 * sum_{j <= min(d, m)} C(m, j))`` with exact integer binomials."""
    if m < 1 or d < 0:
        raise BadParamsError("need m >= 1 and d >= 0")
    total, term = 0, 1
    for j in range(min(d, m) + 1):
        total += term
        term = term * (m - j) // (j + 1)
    return math.log(2 * total)


def rademacher_envelope(b: float, d: int, m: int) -> float:
    """``b sqrt(2 G/m) + 4 b G/m`` with ``G = gamma_bar(m, d)``."""
    g = gamma_bar(m, d)
    return b * math.sqrt(2 * g / m) + 4 * b * g / m


@dataclass(frozen=True)
class RademacherEstimate:
    mean: float
    stderr: float
    values: tuple[float, ...]


def rademacher_estimate(scenario: Scenario, m: int, mc_trials: int, seed: int) -> RademacherEstimate:
    """Monte-Carlo averaged Rademacher complexity of the composed loss class.

    Each trial draws a dataset (seed ``seed + trial``) and signs from a PCG64
    stream seeded by ``seed``, then takes the exact supremum over the grid.
    """
    if mc_trials < 2:
        raise BadParamsError("need at least two Monte-Carlo trials for a standard error")
    if m < 1:
        raise BadParamsError("m must be positive")
    loss_ceiling(scenario)  # raises UnboundedLossError if sampled losses could be infinite
    n, s = scenario.n, scenario.s
    L = scenario.loss_tensor  # (K, n, c, s)
    tables = scenario.hclass.tables
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    vals = []
    for t in range(mc_trials):
        ds = sample_dataset(scenario, m, seed + t)
        eps = rng.integers(0, 2, size=m) * 2 - 1
        C = np.bincount(ds.xs * s + ds.os, weights=eps, minlength=n * s).reshape(n, s)
        with np.errstate(invalid="ignore"):
            G = np.where(C[None, :, None, :] != 0, C[None, :, None, :] * L, 0.0).sum(axis=-1)  # (K, n, c)
        sums = G[:, np.arange(n)[None, :], tables].sum(axis=-1)  # (K, H)
        vals.append(float(np.abs(sums).max()) / m)
    arr = np.asarray(vals)
    return RademacherEstimate(float(arr.mean()), float(arr.std(ddof=1) / math.sqrt(arr.size)), tuple(vals))


@dataclass(frozen=True)
class ComplexityEstimate:
    """The ``d`` fed into the generalization bound and where it came from."""

    d: int
    source: str
    d_h: int | None = None
    d_t: int | None = None


def complexity_for_bound(
    scenario: Scenario, *, cap: int = WEAK_VC_CAP, natarajan_cap: int = NATARAJAN_CAP
) -> ComplexityEstimate:
    """Exact weak VC-major dimension when searchable, else the composition bound.

    The fallback needs exact ``d_h`` and an upper bound on ``d_t``: exact when
    searchable, 0 for transition-free losses, ``c * s`` for instance-independent
    classes.
    """
    try:
        res = scenario_weak_vc_major(scenario, cap=cap)
        return ComplexityEstimate(res.value, "exhaustive")
    except CapExceededError:
        pass
    d_h = natarajan_dimension(scenario.hclass, cap=natarajan_cap).value
    try:
        d_t = transition_dimension(scenario.tclass, scenario.loss, scenario.n, cap=cap).value
        src = "composition bound (exact d_t)"
    except CapExceededError:
        if not scenario.tclass.instance_independent:
            raise
        d_t = scenario.c * scenario.s
        src = "composition bound (d_t <= c*s)"
    return ComplexityEstimate(dimension_bound(d_h, d_t, scenario.c), src, d_h, d_t)
