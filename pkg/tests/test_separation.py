import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from indsup.errors import NoWrongHypothesisError, SameLabelError, SeparationHoldsError, ZeroVectorError
from indsup.joint import difference_scenario
from indsup.losses import LossSpec
from indsup.scenario import HypothesisClass, Scenario
from indsup.separation import (
    concentration_degree,
    concentration_evidence,
    evidence_bound,
    identifiability_level,
    non_learnability_witness,
    pairwise_separation,
    separation_degree,
)
from indsup.spaces import FiniteSpace, kl_array, make_distribution
from indsup.transition import TransitionClass, TransitionHypothesis, build_class, superset_concentration_sets

from . import oracles, randgen

X3, Y3, O2 = FiniteSpace.numbered("x", 3), FiniteSpace.numbered("y", 3), FiniteSpace.numbered("o", 2)
T_KNOWN = TransitionHypothesis(Y3, O2, [[0.1, 0.9], [0.5, 0.5], [0.9, 0.1]])
GAMMA_KNOWN = 0.1 * math.log(0.1 / 0.5) + 0.9 * math.log(0.9 / 0.5)


def three_label(hclass=None, loss=LossSpec()):
    return Scenario(X3, Y3, O2, make_distribution(X3, [1, 1, 1]), (0, 1, 2), T_KNOWN,
                    hclass or HypothesisClass.all_functions(3, 3), TransitionClass((T_KNOWN,)), loss)


def noise_scenario(c, rates, t0_rate, loss=None, n=None, h0=None):
    ys = FiniteSpace.numbered("y", c)
    n = n or c
    xs = FiniteSpace.numbered("x", n)
    tc = build_class({"kind": "uniform_noise", "rates": rates}, ys)
    h0 = h0 or tuple(x % c for x in range(n))
    return Scenario(xs, ys, ys, make_distribution(xs, [1] * n), h0, tc[tc.find(rate=t0_rate)],
                    HypothesisClass.all_functions(n, c), tc, loss or LossSpec())


def test_three_label_gamma():
    rep = separation_degree(three_label())
    assert rep.gamma == pytest.approx(GAMMA_KNOWN, abs=1e-12)
    assert rep.gamma == pytest.approx(0.368064, abs=1e-6)
    x, i, j, ti, tj = rep.witness
    assert (i, j) in {(0, 1), (2, 1)}
    assert float(kl_array(T_KNOWN.matrix(x)[i], T_KNOWN.matrix(x)[j])) == rep.gamma
    assert not rep.grid_caveat


def test_pairwise_values():
    sc = three_label()
    assert pairwise_separation(sc, 0, 2).value == pytest.approx(0.8 * math.log(9), abs=1e-12)
    with pytest.raises(SameLabelError):
        pairwise_separation(sc, 1, 1)
    sc2 = noise_scenario(2, [0.2], 0.2)
    assert pairwise_separation(sc2, 0, 1).value == pytest.approx(pairwise_separation(sc2, 1, 0).value, abs=1e-15)


def test_unrealized_label_has_infinite_pairwise():
    sc = Scenario(X3, Y3, O2, make_distribution(X3, [1, 1, 0]), (0, 1, 2), T_KNOWN,
                  HypothesisClass.all_functions(3, 3), TransitionClass((T_KNOWN,)), LossSpec())
    assert pairwise_separation(sc, 2, 0).value == math.inf


def test_singleton_class_gives_infinite_gamma():
    rep = separation_degree(three_label(HypothesisClass.explicit([[0, 1, 2]])))
    assert rep.gamma == math.inf and rep.witness is None


def test_duplicate_rows_give_zero():
    t = TransitionHypothesis(Y3, O2, [[0.3, 0.7], [0.3, 0.7], [0.9, 0.1]])
    sc = Scenario(X3, Y3, O2, make_distribution(X3, [1, 1, 1]), (0, 1, 2), t,
                  HypothesisClass.all_functions(3, 3), TransitionClass((t,)), LossSpec())
    assert separation_degree(sc).gamma == 0.0
    assert identifiability_level(sc).eta == pytest.approx(0.0, abs=1e-15)


def test_eta_three_label():
    rep = identifiability_level(three_label())
    assert rep.eta == pytest.approx(GAMMA_KNOWN, abs=1e-12)
    assert rep.numerator / rep.denominator == rep.eta
    with pytest.raises(NoWrongHypothesisError):
        identifiability_level(three_label(HypothesisClass.explicit([[0, 1, 2]])))


def test_concentration_degree_label_noise():
    for r in (0.1, 0.3):
        sc = noise_scenario(2, [r], r, LossSpec.concentration([{0}, {1}]))
        assert concentration_degree(sc).value == pytest.approx(1 - 2 * r, abs=1e-12)
    sc = noise_scenario(2, [0.1], 0.1, LossSpec.concentration([{0, 1}, {0, 1}]))
    assert concentration_degree(sc).value == 0.0


def test_concentration_degree_superset():
    ys = FiniteSpace.numbered("y", 3)
    xs = FiniteSpace.numbered("x", 2)
    for q in (0.7, 1.0):
        tc = build_class({"kind": "superset_noise", "q_in": [q]}, ys)
        sets = superset_concentration_sets(3)
        sc = Scenario(xs, ys, tc.annotation_space, make_distribution(xs, [1, 1]), (0, 1), tc[0],
                      HypothesisClass.all_functions(2, 3), tc, LossSpec.concentration(sets))
        m = tc[0].matrix(0)
        direct = min(
            sum(m[i, o] for o in sets[i]) - max(sum(m[i, o] for o in sets[j]) for j in range(3) if j != i)
            for i in range(3)
        )
        assert concentration_degree(sc).value == pytest.approx(direct, abs=1e-12)
        assert concentration_degree(sc).value == pytest.approx(q - 0.5, abs=1e-12)


def test_evidence_from_sets_recovers_pinsker_level():
    for c, rates in ((2, [0.1, 0.2, 0.3]), (3, [0.05, 0.2])):
        sets = [frozenset({i}) for i in range(c)]
        sc = noise_scenario(c, rates, rates[0], LossSpec.concentration(sets))
        gc = concentration_degree(sc).value
        rep = evidence_bound(sc, concentration_evidence(sets, c))
        assert rep.bound == pytest.approx(2 * gc**2, abs=1e-12)


def test_evidence_bound_difference_example():
    setup = difference_scenario(0.5, -0.2)
    assert setup.report.bound == pytest.approx(0.02, abs=1e-12)
    for k in ((0, 1), (1, 0)):
        assert setup.report.gammas[k] == pytest.approx(0.4, abs=1e-12)
        assert setup.report.lipschitz[k] == 2.0


def test_evidence_failure_and_zero_vector():
    sc = noise_scenario(2, [0.1, 0.2], 0.1)
    rep = evidence_bound(sc, {(0, 1): [1.0, 1.0], (1, 0): [1.0, 1.0]})
    assert rep.bound is None and rep.failure is not None and rep.gammas[(0, 1)] == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ZeroVectorError):
        evidence_bound(sc, {(0, 1): [0.0, 0.0], (1, 0): [1.0, -1.0]})


def test_non_learnability():
    with pytest.raises(SeparationHoldsError):
        non_learnability_witness(three_label(), 3)  # 1/3 < gamma
    t = TransitionHypothesis(Y3, O2, [[0.3, 0.7], [0.3, 0.7], [0.9, 0.1]])
    sc = Scenario(X3, Y3, O2, make_distribution(X3, [1, 1, 1]), (0, 1, 2), t,
                  HypothesisClass.all_functions(3, 3), TransitionClass((t,)), LossSpec())
    w = non_learnability_witness(sc, 5)
    assert w.kl == 0.0 and w.eta.eta == pytest.approx(0.0, abs=1e-15)
    assert w.scenario.dx.probs[w.x] == 1.0


def test_non_learnability_close_rows():
    eps = 0.01
    sc = noise_scenario(2, [0.5 - eps, 0.5], 0.5 - eps, n=2)
    w = non_learnability_witness(sc, 100)
    assert w.eta.eta <= w.kl + 1e-15 and w.kl < 0.01
    assert w.chain_holds


def _naive(sc):
    return randgen.naive_members(sc), [tuple(t) for t in sc.hclass.tables.tolist()]


@settings(max_examples=120, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_gamma_matches_oracle_and_pairwise(seed):
    rng = np.random.default_rng(seed)
    sc = randgen.random_scenario(rng, zero_prob=0.2 if rng.random() < 0.3 else 0.0)
    members, tables = _naive(sc)
    rep = separation_degree(sc)
    ref = oracles.gamma(sc.dx.probs.tolist(), sc.h0, tables, members, sc.c)
    if math.isinf(ref):
        assert math.isinf(rep.gamma)
    else:
        assert rep.gamma == pytest.approx(ref, rel=1e-9, abs=1e-12)
    entries = [v for row in rep.pairwise for v in row if v is not None]
    assert rep.gamma == min(entries)
    if rep.witness is not None:
        x, i, j, ti, tj = rep.witness
        stack = sc.transitions
        assert float(kl_array(stack[ti, x, i], stack[tj, x, j])) == rep.gamma
    for i in range(sc.c):
        for j in range(sc.c):
            if i != j:
                r = oracles.gamma_pair(sc.dx.probs.tolist(), sc.h0, tables, members, i, j)
                v = rep.pairwise[i][j]
                assert (math.isinf(r) and math.isinf(v)) or v == pytest.approx(r, rel=1e-9, abs=1e-12)


@settings(max_examples=120, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_eta_and_gamma_c_match_oracles(seed):
    rng = np.random.default_rng(seed)
    kind = "concentration" if rng.random() < 0.5 else "cross_entropy"
    sc = randgen.random_scenario(rng, loss=kind, k_max=4)
    members, tables = _naive(sc)
    sets = sc.loss.sets or randgen.random_sets(rng, sc.c, sc.s)
    gc = concentration_degree(sc, sets).value
    assert gc == pytest.approx(oracles.gamma_c(sc.dx.probs.tolist(), members, sets, sc.c), abs=1e-12)
    ref = oracles.eta(sc.dx.probs.tolist(), sc.h0, tables, members, randgen.naive_t0(sc), kind, sc.loss.sets)
    try:
        eta = identifiability_level(sc).eta
    except NoWrongHypothesisError:
        assert ref == math.inf
        return
    assert (math.isinf(ref) and math.isinf(eta)) or eta == pytest.approx(ref, rel=1e-9, abs=1e-10)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_eta_at_least_gamma(seed):
    rng = np.random.default_rng(seed)
    sc = randgen.random_scenario(rng)
    try:
        eta = identifiability_level(sc).eta
    except NoWrongHypothesisError:
        return
    assert eta >= separation_degree(sc).gamma - 1e-10


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_pinsker_chain_and_set_loss_eta(seed):
    rng = np.random.default_rng(seed)
    sc = randgen.random_scenario(rng, loss="concentration")
    gc = concentration_degree(sc).value
    if gc >= 0:
        assert separation_degree(sc).gamma >= 2 * gc**2 - 1e-10
    try:
        assert identifiability_level(sc).eta >= gc - 1e-10
    except NoWrongHypothesisError:
        pass
