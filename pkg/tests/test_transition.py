import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from indsup.errors import DimensionMismatchError, EmptyGridError, InputError, SpaceTooLargeError
from indsup.spaces import FiniteSpace
from indsup.transition import (
    TransitionClass,
    TransitionHypothesis,
    build_class,
    induced_distribution,
    induced_family,
    lattice,
    superset_concentration_sets,
    superset_matrix,
    superset_space,
    uniform_noise_matrix,
)

Y2 = FiniteSpace.numbered("y", 2)
Y3 = FiniteSpace.numbered("y", 3)
O2 = FiniteSpace.numbered("o", 2)


def test_rows_must_be_stochastic():
    with pytest.raises(InputError):
        TransitionHypothesis(Y2, O2, [[0.5, 0.6], [0.5, 0.5]])
    with pytest.raises(InputError):
        TransitionHypothesis(Y2, O2, [[1.5, -0.5], [0.5, 0.5]])
    with pytest.raises(DimensionMismatchError):
        TransitionHypothesis(Y2, O2, [[1.0], [1.0]])


def test_constant_and_instance_dependent():
    t = TransitionHypothesis(Y2, O2, [[0.9, 0.1], [0.2, 0.8]])
    assert t.constant and t.n_instances is None
    assert t.expand(3).shape == (3, 2, 2)
    dep = TransitionHypothesis(Y2, O2, [[[1, 0], [0, 1]], [[0.5, 0.5], [0.5, 0.5]]])
    assert dep.n_instances == 2
    assert induced_distribution(dep, 1, 0).probs.tolist() == [0.5, 0.5]
    with pytest.raises(DimensionMismatchError):
        dep.expand(3)
    same = TransitionHypothesis(Y2, O2, [[[1, 0], [0, 1]], [[1, 0], [0, 1]]])
    assert same.constant


def test_uniform_noise_matrix():
    m = uniform_noise_matrix(3, 0.3)
    assert np.allclose(m.sum(axis=1), 1)
    assert m[0, 0] == pytest.approx(0.7) and m[0, 1] == pytest.approx(0.15)
    with pytest.raises(InputError):
        uniform_noise_matrix(3, 1.2)


def test_superset_matrix_and_sets():
    space = superset_space(Y3)
    assert space.size == 8 and space.names[0] == "{}" and space.names[5] == "{y1,y3}"
    m = superset_matrix(3, 0.8)
    sets = superset_concentration_sets(3)
    for i in range(3):
        assert m[i].sum() == pytest.approx(1.0)
        assert sum(m[i, o] for o in sets[i]) == pytest.approx(0.8)
    with pytest.raises(SpaceTooLargeError):
        superset_space(FiniteSpace.numbered("y", 13))


def test_build_class_kinds():
    un = build_class({"kind": "uniform_noise", "rates": [0.1, 0.2]}, Y2)
    assert len(un) == 2 and un.find(rate=0.2) == 1 and un.grid_derived
    ss = build_class({"kind": "superset_noise", "q_in": [0.9]}, Y3)
    assert ss.annotation_space.size == 8
    ex = build_class({"kind": "explicit", "matrices": [[[1, 0], [0, 1]]]}, Y2, O2)
    assert not ex.grid_derived and ex.instance_independent
    lg = build_class({"kind": "logistic", "embeddings": [[0.0], [1.0]], "weights": [[0.0], [2.0]]}, Y2)
    assert lg[0].constant  # w = 0 flips with probability 1/2 everywhere
    assert lg[1].n_instances == 2
    assert lg[1].matrix(1)[0, 1] == pytest.approx(1 / (1 + math.exp(-2)))
    with pytest.raises(EmptyGridError):
        build_class({"kind": "uniform_noise", "rates": []}, Y2)
    with pytest.raises(InputError):
        build_class({"kind": "nope"}, Y2)


def test_class_stack_and_lookup():
    tc = build_class({"kind": "uniform_noise", "rates": [0.1, 0.3]}, Y2)
    st_ = tc.stack(4)
    assert st_.shape == (2, 4, 2, 2) and not st_.flags.writeable
    assert tc.index_of(TransitionHypothesis(Y2, Y2, uniform_noise_matrix(2, 0.3))) == 1
    assert tc.floor == pytest.approx(0.1)
    fam = induced_family(tc, 0, 1)
    assert [d.probs[1] for d in fam.distributions] == pytest.approx([0.9, 0.7])


def test_class_rejects_mixed_instance_counts():
    a = TransitionHypothesis(Y2, O2, [[[1, 0], [0, 1]], [[0.5, 0.5], [0.5, 0.5]]])
    b = TransitionHypothesis(Y2, O2, [np.eye(2), np.eye(2)[::-1], np.full((2, 2), 0.5)])
    with pytest.raises(DimensionMismatchError):
        TransitionClass((a, b))


def test_lattice_order():
    assert lattice([[0, 1], [2, 3]]) == [[0, 2], [0, 3], [1, 2], [1, 3]]


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 5), st.floats(0, 1))
def test_uniform_noise_rows_are_distributions(c, r):
    t = build_class({"kind": "uniform_noise", "rates": [r]}, FiniteSpace.numbered("y", c))[0]
    assert np.all(t.matrices >= 0)
    assert np.allclose(t.matrices.sum(axis=-1), 1.0, atol=1e-12)
