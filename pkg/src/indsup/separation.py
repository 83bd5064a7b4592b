"""Separation quantities computed exactly over finite classes.

Conventions shared by every function here:

* "label ``i`` has positive joint probability at ``x``" means ``dx(x) > 0``
  and ``h0(x) == i``, since labels are a deterministic function of instances;
* a wrong label ``j`` counts at ``x`` only if some hypothesis predicts it
  there;
* infima are minima over the finite enumeration, ties broken by the smallest
  ``(x, i, j, T index, T' index)`` tuple.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    BadParamsError,
    BadSetError,
    CapExceededError,
    InputError,
    NoWrongHypothesisError,
    SameLabelError,
    SeparationHoldsError,
    ZeroVectorError,
)
from .losses import membership_matrix, check_sets
from .scenario import HypothesisClass, Scenario, reachable_labels
from .spaces import Distribution, kl_array, point_mass
from .transition import TransitionClass

#: Largest ``|H| * |T|`` grid that ``identifiability_level`` will scan.
ETA_GRID_CAP = 5_000_000

CONSTRAINT_NOTE = "pairs (x, i, j) with dx(x) > 0, i = h0(x), j != i and j predicted at x by some hypothesis"


def _reach(hclass: HypothesisClass, c: int) -> np.ndarray:
    """``(n, c)`` boolean: label reachable at instance."""
    n = hclass.n_instances
    out = np.zeros((n, c), dtype=bool)
    for x in range(n):
        out[x, np.unique(hclass.tables[:, x])] = True
    return out


def _family_kl(stack: np.ndarray, x: int, i: int, j: int) -> tuple[float, int, int]:
    """Min KL between the label-i and label-j families at ``x`` and its argmin."""
    a = stack[:, x, i, :]
    b = stack[:, x, j, :]
    d = kl_array(a[:, None, :], b[None, :, :])
    flat = int(np.argmin(d))
    ti, tj = divmod(flat, d.shape[1])
    return float(d[ti, tj]), ti, tj


@dataclass(frozen=True)
class PairwiseSeparation:
    """``gamma_{i->j}`` with witness ``(x, T index, T' index)``."""

    i: int
    j: int
    value: float
    witness: tuple[int, int, int] | None
    per_instance: Mapping[int, float] = field(default_factory=dict)

    @property
    def separated(self) -> bool:
        return self.value > 0


def pairwise_separation_of(
    tclass: TransitionClass,
    dx: Distribution,
    h0: Sequence[int],
    hclass: HypothesisClass,
    i: int,
    j: int,
) -> PairwiseSeparation:
    """Pairwise separation for an explicit (class, instance law, labelling) triple."""
    if i == j:
        raise SameLabelError("pairwise separation needs two different labels")
    c = tclass.label_space.size
    if not (0 <= i < c and 0 <= j < c):
        raise InputError(f"label indices ({i}, {j}) out of range")
    n = dx.space.size
    stack = tclass.stack(n)
    reach = _reach(hclass, c)
    best, witness = math.inf, None
    per: dict[int, float] = {}
    for x in range(n):
        if dx.probs[x] <= 0 or h0[x] != i or not reach[x, j]:
            continue
        v, ti, tj = _family_kl(stack, x, i, j)
        per[x] = v
        if witness is None or v < best:
            best, witness = v, (x, ti, tj)
    return PairwiseSeparation(i, j, best, witness, per)


def pairwise_separation(scenario: Scenario, i: int, j: int) -> PairwiseSeparation:
    return pairwise_separation_of(scenario.tclass, scenario.dx, scenario.h0, scenario.hclass, i, j)


@dataclass(frozen=True)
class SeparationReport:
    gamma: float
    pairwise: tuple[tuple[float | None, ...], ...]
    witness: tuple[int, int, int, int, int] | None
    grid_caveat: bool
    notes: tuple[str, ...] = ()

    @property
    def separated(self) -> bool:
        return self.gamma > 0


def separation_degree(scenario: Scenario) -> SeparationReport:
    """Separation degree ``gamma`` plus the full ``gamma_{i->j}`` table.

    ``gamma`` is computed by its own scan over instances; the pairwise table
    is computed label pair by label pair. The two agree exactly.
    """
    c = scenario.c
    stack = scenario.transitions
    reach = _reach(scenario.hclass, c)
    gamma, witness = math.inf, None
    for x in scenario.support.tolist():
        i = scenario.h0[x]
        for j in range(c):
            if j == i or not reach[x, j]:
                continue
            v, ti, tj = _family_kl(stack, x, i, j)
            if witness is None or v < gamma:
                gamma, witness = v, (x, i, j, ti, tj)
    table = tuple(
        tuple(None if i == j else pairwise_separation(scenario, i, j).value for j in range(c))
        for i in range(c)
    )
    notes = [f"constraint set: {CONSTRAINT_NOTE}"]
    caveat = scenario.tclass.grid_derived
    if caveat:
        notes.append("transition class is a finite grid: gamma is exact on the grid, an upper bound for the continuous family")
    return SeparationReport(gamma, table, witness, caveat, tuple(notes))


# -- concentration -------------------------------------------------------------


@dataclass(frozen=True)
class ConcentrationReport:
    """``gamma_C`` with witness ``(T index, x, i, j)``; may be negative."""

    value: float
    witness: tuple[int, int, int, int] | None
    all_labels: bool


def _resolve_sets(scenario: Scenario, sets: Sequence[Iterable[int]] | None) -> list[frozenset[int]]:
    if sets is None:
        if scenario.loss.sets is None:
            raise BadSetError("no concentration sets given and the scenario loss has none")
        sets = scenario.loss.sets
    out = [frozenset(int(o) for o in S) for S in sets]
    if len(out) != scenario.c:
        raise BadSetError(f"{len(out)} concentration sets for {scenario.c} labels")
    check_sets(out, scenario.s)
    return out


def concentration_degree(
    scenario: Scenario,
    sets: Sequence[Iterable[int]] | None = None,
    *,
    all_labels: bool = True,
) -> ConcentrationReport:
    """Smallest advantage ``P_T(S_i | x, y_i) - P_T(S_j | x, y_i)``.

    The minimum runs over every member ``T``, instance ``x`` with
    ``dx(x) > 0`` and ``j != i``. With ``all_labels=True`` (default) ``i``
    ranges over every label, which is what makes ``gamma >= 2 gamma_C^2``
    hold; ``all_labels=False`` restricts ``i`` to ``h0(x)``, a weaker
    quantity that only certifies ``eta >= gamma_C`` for the set loss.
    """
    S = _resolve_sets(scenario, sets)
    member = membership_matrix(S, scenario.s)  # (c, s)
    # mass[T, x, i, k] = P_T(O in S_k | x, y_i)
    mass = np.einsum("txis,ks->txik", scenario.transitions, member)
    best, witness = math.inf, None
    c = scenario.c
    for t in range(mass.shape[0]):
        for x in scenario.support.tolist():
            labels = range(c) if all_labels else (scenario.h0[x],)
            for i in labels:
                for j in range(c):
                    if j == i:
                        continue
                    v = float(mass[t, x, i, i] - mass[t, x, i, j])
                    if witness is None or v < best:
                        best, witness = v, (t, x, i, j)
    return ConcentrationReport(best, witness, all_labels)


# -- evidence --------------------------------------------------------------------


def concentration_evidence(sets: Sequence[Iterable[int]], s: int) -> dict[tuple[int, int], np.ndarray]:
    """Evidence vectors ``1_{S_i} - 1_{S_j}`` for every ordered pair."""
    S = [frozenset(v) for v in sets]
    member = membership_matrix(S, s)
    return {(i, j): member[i] - member[j] for i in range(len(S)) for j in range(len(S)) if i != j}


@dataclass(frozen=True)
class EvidenceReport:
    """Lower bound ``1/2 min (gamma_ij / L_ij)^2`` on the separation degree.

    ``bound`` is ``None`` when some ``gamma_ij <= 0``; ``failure`` then names
    ``(i, j, x, T index, T' index)`` attaining it.
    """

    bound: float | None
    gammas: Mapping[tuple[int, int], float]
    lipschitz: Mapping[tuple[int, int], float]
    witnesses: Mapping[tuple[int, int], tuple[int, int, int]]
    failure: tuple[int, int, int, int, int] | None = None

    @property
    def ok(self) -> bool:
        return self.bound is not None


def evidence_bound(scenario: Scenario, evidence: Mapping[tuple[int, int], Sequence[float]]) -> EvidenceReport:
    """Certify separation with dot-product evidence ``Phi_ij(D) = <u_ij, D>``.

    Only ordered pairs whose constraint set is non-empty are used; each of
    those needs a vector. The Lipschitz constant of ``Phi_ij`` w.r.t. the L1
    norm is ``max |u_ij|``.
    """
    stack = scenario.transitions
    reach = _reach(scenario.hclass, scenario.c)
    used: dict[tuple[int, int], list[int]] = {}
    for x in scenario.support.tolist():
        i = scenario.h0[x]
        for j in range(scenario.c):
            if j != i and reach[x, j]:
                used.setdefault((i, j), []).append(x)
    gammas: dict[tuple[int, int], float] = {}
    lips: dict[tuple[int, int], float] = {}
    wits: dict[tuple[int, int], tuple[int, int, int]] = {}
    for (i, j) in sorted(used):
        if (i, j) not in evidence:
            raise BadParamsError(f"no evidence vector for label pair ({i}, {j})")
        u = np.asarray(evidence[(i, j)], dtype=float)
        if u.shape != (scenario.s,):
            raise BadParamsError(f"evidence vector for ({i}, {j}) has length {u.size}, expected {scenario.s}")
        L = float(np.max(np.abs(u)))
        if L == 0:
            raise ZeroVectorError(f"evidence vector for ({i}, {j}) is zero")
        best, wit = math.inf, None
        for x in used[(i, j)]:
            phi_i = stack[:, x, i, :] @ u
            phi_j = stack[:, x, j, :] @ u
            ti, tj = int(np.argmin(phi_i)), int(np.argmax(phi_j))
            v = float(phi_i[ti] - phi_j[tj])
            if wit is None or v < best:
                best, wit = v, (x, ti, tj)
        gammas[(i, j)], lips[(i, j)], wits[(i, j)] = best, L, wit  # type: ignore[assignment]
    failing = [(g, k) for k, g in sorted(gammas.items()) if not g > 0]
    if failing:
        g, (i, j) = min(failing)
        x, ti, tj = wits[(i, j)]
        return EvidenceReport(None, gammas, lips, wits, (i, j, x, ti, tj))
    if not gammas:
        return EvidenceReport(math.inf, gammas, lips, wits)
    bound = 0.5 * min((gammas[k] / lips[k]) ** 2 for k in gammas)
    return EvidenceReport(bound, gammas, lips, wits)


# -- identifiability ---------------------------------------------------------------


@dataclass(frozen=True)
class EtaReport:
    eta: float
    witness_h: tuple[int, ...]
    witness_h_index: int
    witness_t: int
    numerator: float
    denominator: float


def identifiability_level(scenario: Scenario, cap: int = ETA_GRID_CAP) -> EtaReport:
    """Identifiability level ``eta`` by scanning every (hypothesis, transition) pair.

    ``eta = min over h with R(h) > 0 and T of
    (R_O(T o h) - min_T' R_O(T' o h0)) / R(h)``.
    """
    H, K = len(scenario.hclass), len(scenario.tclass)
    if H * K > cap:
        raise CapExceededError("identifiability grid too large", H * K, cap)
    R = scenario.risk_grid
    cr = scenario.classification_risks
    wrong = np.flatnonzero(cr > 0)
    if wrong.size == 0:
        raise NoWrongHypothesisError("every hypothesis agrees with h0 on the support of dx")
    baseline = float(R[scenario.h0_index].min())
    num = R[wrong] - baseline
    ratio = num / cr[wrong][:, None]
    flat = int(np.argmin(ratio))
    a, t = divmod(flat, K)
    h = int(wrong[a])
    return EtaReport(
        eta=float(ratio[a, t]),
        witness_h=tuple(int(v) for v in scenario.hclass.tables[h]),
        witness_h_index=h,
        witness_t=t,
        numerator=float(num[a, t]),
        denominator=float(cr[h]),
    )


# -- non-learnability ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class NonLearnabilityWitness:
    """Point-mass instance law and transitions making ``eta`` at most ``kl < 1/k``."""

    k: int
    x: int
    i: int
    j: int
    t0_index: int
    t_minus_index: int
    h_minus: tuple[int, ...]
    kl: float
    eta: EtaReport
    scenario: Scenario

    @property
    def chain_holds(self) -> bool:
        return self.eta.eta <= self.kl + 1e-12 and self.kl < 1.0 / self.k


def non_learnability_witness(scenario: Scenario, k: int) -> NonLearnabilityWitness:
    """Build the k-th element of a sequence with vanishing identifiability.

    Finds the first ``(x, i = h0(x), j, D_i, D_j)`` in lexicographic order with
    ``KL(D_i || D_j) < 1/k``, puts all instance mass on ``x``, makes the member
    whose row ``i`` is ``D_i`` the true transition, and evaluates ``eta`` of
    the resulting scenario.
    """
    if k < 1:
        raise BadParamsError("k must be a positive integer")
    target = 1.0 / k
    stack = scenario.transitions
    reach = _reach(scenario.hclass, scenario.c)
    found = None
    for x in scenario.support.tolist():
        i = scenario.h0[x]
        for j in range(scenario.c):
            if j == i or not reach[x, j]:
                continue
            d = kl_array(stack[:, x, i, :][:, None, :], stack[:, x, j, :][None, :, :])
            hits = np.argwhere(d < target)
            if hits.size:
                ti, tj = map(int, hits[0])
                found = (x, i, j, ti, tj, float(d[ti, tj]))
                break
        if found:
            break
    if found is None:
        gamma = separation_degree(scenario).gamma
        raise SeparationHoldsError(f"separation degree {gamma:.6g} >= 1/{k}; no witness in this class", gamma)
    x, i, j, ti, tj, v = found
    h_minus = int(np.flatnonzero(scenario.hclass.tables[:, x] == j)[0])
    sk = replace(
        scenario,
        dx=point_mass(scenario.x_space, x),
        t0=scenario.tclass[ti],
        name=f"{scenario.name or 'scenario'}@k={k}",
    )
    eta = identifiability_level(sk)
    return NonLearnabilityWitness(
        k=k,
        x=x,
        i=i,
        j=j,
        t0_index=ti,
        t_minus_index=tj,
        h_minus=tuple(int(v) for v in scenario.hclass.tables[h_minus]),
        kl=v,
        eta=eta,
        scenario=sk,
    )


__all__ = [
    "reachable_labels",
    "PairwiseSeparation",
    "pairwise_separation",
    "pairwise_separation_of",
    "SeparationReport",
    "separation_degree",
    "ConcentrationReport",
    "concentration_degree",
    "concentration_evidence",
    "EvidenceReport",
    "evidence_bound",
    "EtaReport",
    "identifiability_level",
    "NonLearnabilityWitness",
    "non_learnability_witness",
]
