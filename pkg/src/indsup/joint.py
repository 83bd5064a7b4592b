"""Joint supervision from two annotation sources mixed with a known probability.

With probability ``lam`` the observed annotation comes from source 1, else
from source 2, independently of the instance. A joint member pairs one member
of each source class; its row for label ``i`` is
``lam * (T1(x))_i`` and ``(1 - lam) * (T2(x))_i`` placed on the joint outcome
space. In *distinguished* mode the outcome names are tagged ``"1:o"`` and
``"2:o"`` so the two blocks never overlap. In *mixed* mode equal names are
merged and their probabilities add.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import (
    BadParamsError,
    EmptyAfterConstraintError,
    InputError,
    SpaceMismatchError,
)
from .losses import LossSpec
from .scenario import HypothesisClass, Scenario
from .separation import EvidenceReport, evidence_bound, pairwise_separation_of, separation_degree
from .spaces import FiniteSpace, make_distribution
from .transition import SUPERSET_CAP, TransitionClass, TransitionHypothesis, build_class

CONSTRAINT_TOLERANCE = 1e-9
EQUALITY_TOLERANCE = 1e-10


@dataclass(frozen=True)
class LinearConstraint:
    """``sum_k coeffs[k] * params[k]  op  rhs`` over prefixed member parameters."""

    coeffs: Mapping[str, float]
    op: str = "<="
    rhs: float = 0.0

    def __post_init__(self) -> None:
        if self.op not in ("<=", ">=", "=="):
            raise InputError(f"constraint operator must be <=, >= or ==, got {self.op!r}")
        if not self.coeffs:
            raise InputError("constraint has no terms")
        object.__setattr__(self, "coeffs", {str(k): float(v) for k, v in self.coeffs.items()})

    def holds(self, params: Mapping[str, float], tol: float = CONSTRAINT_TOLERANCE) -> bool:
        missing = [k for k in self.coeffs if k not in params]
        if missing:
            raise InputError(f"constraint references unknown parameters {missing}")
        lhs = sum(v * params[k] for k, v in self.coeffs.items())
        if self.op == "<=":
            return lhs <= self.rhs + tol
        if self.op == ">=":
            return lhs >= self.rhs - tol
        return abs(lhs - self.rhs) <= tol

    def to_dict(self) -> dict[str, Any]:
        return {"coeffs": dict(self.coeffs), "op": self.op, "rhs": self.rhs}


@dataclass(frozen=True)
class JointSpec:
    class1: TransitionClass
    class2: TransitionClass
    lam: float
    distinguished: bool = True
    constraints: tuple[LinearConstraint, ...] = ()

    def __post_init__(self) -> None:
        if not 0 < self.lam < 1:
            raise BadParamsError(f"mixing probability must lie strictly between 0 and 1, got {self.lam}")
        object.__setattr__(self, "constraints", tuple(self.constraints))


def joint_space(o1: FiniteSpace, o2: FiniteSpace, distinguished: bool) -> tuple[FiniteSpace, list[int], list[int]]:
    """Joint outcome space and where each source's outcomes land in it."""
    if distinguished:
        names = tuple(f"1:{o}" for o in o1.names) + tuple(f"2:{o}" for o in o2.names)
        return FiniteSpace(names), list(range(o1.size)), list(range(o1.size, o1.size + o2.size))
    names = list(o1.names) + [o for o in o2.names if o not in o1.names]
    pos = {o: k for k, o in enumerate(names)}
    return FiniteSpace(tuple(names)), [pos[o] for o in o1.names], [pos[o] for o in o2.names]


def _instances(a: TransitionClass, b: TransitionClass) -> int | None:
    na, nb = a.n_instances, b.n_instances
    if na is not None and nb is not None and na != nb:
        raise SpaceMismatchError(f"sources are defined on {na} and {nb} instances")
    return na if na is not None else nb


def _combine(m1: np.ndarray, m2: np.ndarray, lam: float, s: int, idx1: list[int], idx2: list[int]) -> np.ndarray:
    out = np.zeros(m1.shape[:-1] + (s,))
    for k, o in enumerate(idx1):
        out[..., o] += lam * m1[..., k]
    for k, o in enumerate(idx2):
        out[..., o] += (1 - lam) * m2[..., k]
    return out


def compose_joint(spec: JointSpec) -> TransitionClass:
    """All member pairs passing the constraints, in ``(index1, index2)`` order."""
    c1, c2 = spec.class1, spec.class2
    if c1.label_space != c2.label_space:
        raise SpaceMismatchError("sources disagree on the label space")
    n = _instances(c1, c2)
    space, idx1, idx2 = joint_space(c1.annotation_space, c2.annotation_space, spec.distinguished)
    members = []
    for t1 in c1:
        for t2 in c2:
            params = {f"1.{k}": v for k, v in t1.params.items()}
            params.update({f"2.{k}": v for k, v in t2.params.items()})
            if not all(con.holds(params) for con in spec.constraints):
                continue
            if n is None:
                m1, m2 = t1.matrices[0], t2.matrices[0]
            else:
                m1, m2 = t1.expand(n), t2.expand(n)
            mats = _combine(np.asarray(m1), np.asarray(m2), spec.lam, space.size, idx1, idx2)
            members.append(TransitionHypothesis(c1.label_space, space, mats, params))
    if not members:
        raise EmptyAfterConstraintError("no member pair satisfies the joint constraints")
    meta = {
        "kind": "joint",
        "lambda": spec.lam,
        "distinguished": spec.distinguished,
        "constraints": [con.to_dict() for con in spec.constraints],
        "sources": [dict(c1.spec), dict(c2.spec)],
    }
    return TransitionClass(tuple(members), meta)


def parse_constraints(raw: Sequence[Mapping[str, Any]] | None) -> tuple[LinearConstraint, ...]:
    out = []
    for entry in raw or []:
        out.append(LinearConstraint(dict(entry["coeffs"]), str(entry.get("op", "<=")), float(entry.get("rhs", 0.0))))
    return tuple(out)


def joint_class_from_spec(spec: Mapping[str, Any], labels: FiniteSpace, *, cap: int = SUPERSET_CAP) -> TransitionClass:
    """Build a joint class from ``{sources: [s1, s2], lambda, distinguished, constraints}``.

    Each source is an ordinary class spec; an ``annotations`` list gives the
    outcome names of an explicit source.
    """
    sources = spec.get("sources") or []
    if len(sources) != 2:
        raise InputError("a joint class needs exactly two sources")
    built = []
    for src in sources:
        ann = src.get("annotations")
        space = FiniteSpace(tuple(str(a) for a in ann)) if ann is not None else (labels if src.get("kind") == "explicit" else None)
        built.append(build_class(src, labels, space, cap=cap))
    if "lambda" not in spec:
        raise InputError("a joint class needs the mixing probability 'lambda'")
    js = JointSpec(
        built[0],
        built[1],
        float(spec["lambda"]),
        bool(spec.get("distinguished", True)),
        parse_constraints(spec.get("constraints")),
    )
    return compose_joint(js)


# -- no free separation --------------------------------------------------------------


@dataclass(frozen=True)
class NoFreeSeparationReport:
    """Joint versus source pairwise separation for one ordered label pair.

    ``inequality_holds`` and ``equality_holds`` compare the global values.
    ``pointwise_holds`` checks the same relation instance by instance, which
    is what survives for instance-dependent classes on several instances.
    """

    i: int
    j: int
    lam: float
    distinguished: bool
    joint: float
    source1: float
    source2: float
    combination: float
    slack: float
    inequality_holds: bool
    equality_holds: bool | None
    pointwise_holds: bool
    instance_independent: bool
    per_instance: Mapping[int, tuple[float, float, float]] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "i": self.i,
            "j": self.j,
            "lambda": self.lam,
            "distinguished": self.distinguished,
            "joint": self.joint,
            "source1": self.source1,
            "source2": self.source2,
            "combination": self.combination,
            "slack": self.slack,
            "inequality_holds": self.inequality_holds,
            "equality_holds": self.equality_holds,
            "pointwise_holds": self.pointwise_holds,
            "instance_independent": self.instance_independent,
        }


def _combo(lam: float, a: float, b: float) -> float:
    # avoid 0 * inf
    parts = [w * v for w, v in ((lam, a), (1 - lam, b)) if v != 0]
    return sum(parts) if parts else 0.0


def verify_no_free_separation(
    class1: TransitionClass,
    class2: TransitionClass,
    lam: float,
    context: Any,
    i: int,
    j: int,
    *,
    distinguished: bool = True,
    tol: float = EQUALITY_TOLERANCE,
) -> NoFreeSeparationReport:
    """Compare ``gamma_{i->j}`` of the unconstrained joint class with the mixture of the sources.

    ``context`` supplies ``dx``, ``h0`` and ``hclass`` (a :class:`Scenario` works).
    """
    joint = compose_joint(JointSpec(class1, class2, lam, distinguished))
    dx, h0, hc = context.dx, context.h0, context.hclass
    pj = pairwise_separation_of(joint, dx, h0, hc, i, j)
    p1 = pairwise_separation_of(class1, dx, h0, hc, i, j)
    p2 = pairwise_separation_of(class2, dx, h0, hc, i, j)
    comb = _combo(lam, p1.value, p2.value)
    slack = comb - pj.value if math.isfinite(comb) else math.inf
    ineq = pj.value <= comb + tol
    eq = None
    if distinguished:
        eq = pj.value == comb or abs(pj.value - comb) <= tol
    per: dict[int, tuple[float, float, float]] = {}
    point_ok = True
    for x, vj in pj.per_instance.items():
        cx = _combo(lam, p1.per_instance[x], p2.per_instance[x])
        per[x] = (vj, p1.per_instance[x], p2.per_instance[x])
        ok = abs(vj - cx) <= tol if distinguished else vj <= cx + tol
        point_ok = point_ok and (ok or vj == cx)
    return NoFreeSeparationReport(
        i, j, lam, distinguished, pj.value, p1.value, p2.value, comb, slack, ineq, eq, point_ok,
        class1.instance_independent and class2.instance_independent, per,
    )


# -- constrained joint supervision ---------------------------------------------------


@dataclass(frozen=True, eq=False)
class DifferenceSetup:
    """Binary scenario where only a constraint between two annotators gives separation."""

    scenario: Scenario
    evidence: Mapping[tuple[int, int], np.ndarray]
    report: EvidenceReport
    marginal_gammas: tuple[float, float]


DEFAULT_RATES = tuple(round(0.1 * k, 1) for k in range(1, 10))


def difference_evidence(lam: float) -> dict[tuple[int, int], np.ndarray]:
    u = np.array([1 / lam, 0.0, -1 / (1 - lam), 0.0])
    return {(0, 1): u, (1, 0): -u}


def difference_scenario(
    lam: float = 0.5,
    gap: float = -0.2,
    rate_grid: Sequence[float] = DEFAULT_RATES,
    *,
    true_rates: tuple[float, float] = (0.1, 0.4),
) -> DifferenceSetup:
    """Two annotators with unknown uniform noise rates and a known quality gap.

    Source classes share ``rate_grid``; the joint class keeps pairs with
    ``rate1 - rate2 <= gap``. The scenario has two instances with different
    true labels and the class of all labelings.
    """
    if not gap < 0:
        raise BadParamsError("the quality gap must be negative")
    if not 0 < lam < 1:
        raise BadParamsError("mixing probability must lie strictly between 0 and 1")
    if any(not 0 <= r <= 1 for r in rate_grid):
        raise BadParamsError("noise rates must lie in [0, 1]")
    labels = FiniteSpace(("-1", "+1"))
    src = {"kind": "uniform_noise", "rates": [float(r) for r in rate_grid]}
    c1 = build_class(src, labels)
    c2 = build_class(src, labels)
    con = LinearConstraint({"1.rate": 1.0, "2.rate": -1.0}, "<=", gap)
    joint = compose_joint(JointSpec(c1, c2, lam, True, (con,)))
    t0 = joint[joint.find(**{"1.rate": true_rates[0], "2.rate": true_rates[1]})]
    xs = FiniteSpace.numbered("x", 2)
    dx = make_distribution(xs, [0.5, 0.5])
    hclass = HypothesisClass.all_functions(2, 2)
    sc = Scenario(xs, labels, joint.annotation_space, dx, (0, 1), t0, hclass, joint, LossSpec(), name="learning-from-difference")
    evidence = difference_evidence(lam)
    report = evidence_bound(sc, evidence)
    marg = []
    for cls in (c1, c2):
        m = Scenario(xs, labels, labels, dx, (0, 1), cls[0], hclass, cls, LossSpec())
        marg.append(separation_degree(m).gamma)
    return DifferenceSetup(sc, evidence, report, (marg[0], marg[1]))
