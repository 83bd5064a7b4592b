import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from indsup.config import bundled_scenario
from indsup.errors import BadParamsError, EmptyDatasetError
from indsup.learning import (
    CURVE_HEADER,
    SUMMARY_HEADER,
    BoundInputs,
    bound_coverage,
    bound_inputs,
    empirical_risk_grid,
    erm,
    learning_curve,
    summarize_curve,
    theorem_bound,
    write_curve_csv,
    write_summary_csv,
)
from indsup.scenario import Dataset, sample_dataset

from . import oracles, randgen


def _naive_bound(b, eta, d, m, delta):
    g = math.log(2 * sum(math.comb(m, i) for i in range(d + 1)))
    return 2 * b / eta * ((2 * g / m) ** 0.5 + 4 * g / m + (2 * math.log(4 / delta) / m) ** 0.5)


def test_theorem_bound_values():
    assert theorem_bound(1.0, 1.0, 0, 1, 0.5) == pytest.approx(2 * (2 * math.log(2)) ** 0.5 + 8 * math.log(2) + 2 * (2 * math.log(8)) ** 0.5)
    v = theorem_bound(math.log(10), 0.368064, 3, 10_000, 0.05)
    assert v == pytest.approx(_naive_bound(math.log(10), 0.368064, 3, 10_000, 0.05), rel=1e-12)
    for bad in ((0, 1, 1, 10, 0.1), (1, 0, 1, 10, 0.1), (1, 1, -1, 10, 0.1), (1, 1, 1, 0, 0.1), (1, 1, 1, 10, 1.0)):
        with pytest.raises(BadParamsError):
            theorem_bound(*bad)


@settings(max_examples=150, deadline=None)
@given(
    st.floats(0.1, 10), st.floats(0.01, 5), st.integers(0, 30), st.integers(1, 10**6), st.floats(0.001, 0.999)
)
def test_theorem_bound_monotonicity(b, eta, d, m, delta):
    v = theorem_bound(b, eta, d, m, delta)
    assert v == pytest.approx(_naive_bound(b, eta, d, m, delta), rel=1e-9)
    assert theorem_bound(b, eta, d, m + 1, delta) <= v * (1 + 1e-12)
    assert theorem_bound(b, eta, d + 1, m, delta) >= v * (1 - 1e-12)
    assert theorem_bound(b, eta * 1.5, d, m, delta) <= v
    assert theorem_bound(b, eta, d, m, min(delta * 1.5, 0.999)) <= v * (1 + 1e-12)


def test_bound_inputs_edge_cases():
    assert BoundInputs(1.0, math.inf, 2, "exact", "x").bound(10, 0.1) == 0.0
    assert BoundInputs(1.0, 0.0, 2, "exact", "x").bound(10, 0.1) == math.inf
    assert BoundInputs(1.0, 0.5, None, "exact", "unavailable").bound(10, 0.1) == math.inf
    assert BoundInputs(math.inf, 0.5, 1, "exact", "x").bound(10, 0.1) == math.inf
    with pytest.raises(BadParamsError):
        BoundInputs(1.0, 0.5, 1, "exact", "x").bound(10, 0.0)


def test_bound_inputs_demos():
    inp = bound_inputs(bundled_scenario("example-4-6"))
    assert inp.eta_source == "exact" and inp.eta == pytest.approx(0.368064, abs=1e-6)
    assert inp.b == pytest.approx(math.log(10)) and inp.d is not None
    sup = bound_inputs(bundled_scenario("superset"))
    assert sup.d == 19 and sup.d_source.startswith("composition bound")


def test_erm_example_and_empty():
    sc = bundled_scenario("example-4-6")
    res = erm(sc, sample_dataset(sc, 2000, 0))
    assert res.h_star == sc.h0 and res.true_classification_risk == 0
    with pytest.raises(EmptyDatasetError):
        erm(sc, Dataset([], []))


def _oracle_erm(sc, ds):
    tables = [tuple(t) for t in sc.hclass.tables.tolist()]
    return oracles.erm(ds.samples, tables, randgen.naive_members(sc), sc.loss.kind, sc.loss.sets)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 40))
def test_erm_matches_oracle(seed, m):
    rng = np.random.default_rng(seed)
    kind = "concentration" if rng.random() < 0.4 else "cross_entropy"
    sc = randgen.random_scenario(rng, loss=kind, c_max=3, n_max=3, k_max=4, zero_prob=0.2)
    ds = sample_dataset(sc, m, seed % 1000)
    res = erm(sc, ds)
    a, k, risk, ties = _oracle_erm(sc, ds)
    assert (res.h_index, res.t_star, res.ties) == (a, k, ties)
    assert (math.isinf(risk) and math.isinf(res.empirical_risk)) or res.empirical_risk == pytest.approx(risk, abs=1e-10)
    R = empirical_risk_grid(sc, ds)
    assert np.all(R >= res.empirical_risk - 1e-9 * max(1, abs(res.empirical_risk)))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_erm_consistent_for_large_samples_when_separated(seed):
    rng = np.random.default_rng(seed)
    sc = randgen.random_scenario(rng, c_max=3, n_max=3, k_max=3)
    inp = bound_inputs(sc)
    if not (inp.eta > 0.2 and math.isfinite(inp.b)):
        return
    res = erm(sc, sample_dataset(sc, 20_000, 1))
    assert res.true_classification_risk <= inp.bound(20_000, 0.01) + 1e-12


def test_learning_curve_and_csv():
    sc = bundled_scenario("example-4-6")
    recs = learning_curve(sc, [50, 200], 3, 10)
    assert [(r.m, r.trial, r.seed) for r in recs] == [(50, 0, 10), (50, 1, 11), (50, 2, 12), (200, 0, 10), (200, 1, 11), (200, 2, 12)]
    again = learning_curve(sc, [50, 200], 3, 10)
    assert recs == again
    buf = io.StringIO()
    write_curve_csv(recs, buf)
    rows = list(csv.reader(io.StringIO(buf.getvalue())))
    assert tuple(rows[0]) == CURVE_HEADER and len(rows) == 7
    summary = summarize_curve(recs)
    assert [s.m for s in summary] == [50, 200]
    buf2 = io.StringIO()
    write_summary_csv(summary, buf2)
    assert buf2.getvalue().splitlines()[0] == ",".join(SUMMARY_HEADER)
    with pytest.raises(BadParamsError):
        learning_curve(sc, [200, 50], 3, 0)
    with pytest.raises(BadParamsError):
        learning_curve(sc, [50], 0, 0)


def test_coverage_basic():
    sc = bundled_scenario("example-4-6")
    cov = bound_coverage(sc, 500, 0.1, 10, 0)
    assert cov.fraction == 1.0 and len(cov.risks) == 10
    with pytest.raises(BadParamsError):
        bound_coverage(sc, 500, 0.1, 0, 0)
