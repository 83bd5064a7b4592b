"""Seeded random instance generators shared by property and acceptance tests."""

from __future__ import annotations

import itertools
from types import SimpleNamespace

import numpy as np

from indsup.losses import LossSpec
from indsup.scenario import HypothesisClass, Scenario
from indsup.spaces import FiniteSpace, make_distribution
from indsup.transition import TransitionClass, TransitionHypothesis


def rows(rng, shape, zero_prob=0.0):
    """Random row-stochastic array; each entry is zeroed with ``zero_prob`` (one survivor per row)."""
    a = rng.dirichlet(np.ones(shape[-1]), size=shape[:-1])
    if zero_prob > 0:
        mask = rng.random(a.shape) < zero_prob
        keep = rng.integers(0, shape[-1], size=shape[:-1])
        np.put_along_axis(mask, keep[..., None], False, axis=-1)
        a = np.where(mask, 0.0, a)
        a = a / a.sum(axis=-1, keepdims=True)
    return a


def random_class(rng, labels, ann, K, n=None, zero_prob=0.0, tilt=0.0):
    """``tilt`` mixes every row towards a point mass on outcome ``i mod s``."""
    target = np.zeros((labels.size, ann.size))
    target[np.arange(labels.size), np.arange(labels.size) % ann.size] = 1.0
    members = []
    for _ in range(K):
        shape = (labels.size, ann.size) if n is None else (n, labels.size, ann.size)
        members.append(TransitionHypothesis(labels, ann, (1 - tilt) * rows(rng, shape, zero_prob) + tilt * target))
    return TransitionClass(tuple(members))


def random_sets(rng, c, s):
    out = []
    for _ in range(c):
        S = {o for o in range(s) if rng.random() < 0.4}
        if not S:
            S = {int(rng.integers(0, s))}
        out.append(frozenset(S))
    return out


def tilted_sets(rng, c, s, extra=0.15):
    """Sets built around the tilt targets of :func:`random_class`, with a few random extras."""
    return [frozenset({i % s} | {o for o in range(s) if rng.random() < extra}) for i in range(c)]


def random_hclass(rng, n, c, h0, limit=64):
    if c**n <= limit:
        return HypothesisClass.all_functions(n, c)
    size = int(rng.integers(1, 30))
    tables = [tuple(h0)] + [tuple(int(v) for v in rng.integers(0, c, size=n)) for _ in range(size)]
    rng.shuffle(tables)
    return HypothesisClass.explicit(tables)


def random_dx(rng, xs, sparse=0.3):
    w = rng.dirichlet(np.ones(xs.size))
    if xs.size > 1 and rng.random() < sparse:
        drop = rng.random(xs.size) < 0.4
        drop[int(rng.integers(0, xs.size))] = False
        w = np.where(drop, 0.0, w)
    return make_distribution(xs, w)


def random_scenario(
    rng,
    *,
    c_max=4,
    s_max=8,
    k_max=6,
    n_max=3,
    loss="cross_entropy",
    instance_dependent=0.3,
    zero_prob=0.0,
    c_min=2,
    s_min=2,
    tilt=0.0,
):
    c = int(rng.integers(c_min, c_max + 1))
    s = int(rng.integers(s_min, s_max + 1))
    K = int(rng.integers(1, k_max + 1))
    n = int(rng.integers(1, n_max + 1))
    xs, ys, os_ = FiniteSpace.numbered("x", n), FiniteSpace.numbered("y", c), FiniteSpace.numbered("o", s)
    dep = rng.random() < instance_dependent
    tclass = random_class(rng, ys, os_, K, n if dep else None, zero_prob, tilt)
    h0 = tuple(int(v) for v in rng.integers(0, c, size=n))
    hclass = random_hclass(rng, n, c, h0)
    t0 = tclass[int(rng.integers(0, K))]
    if loss == "concentration":
        spec = LossSpec.concentration(random_sets(rng, c, s))
    else:
        spec = LossSpec()
    return Scenario(xs, ys, os_, random_dx(rng, xs), h0, t0, hclass, tclass, spec)


def naive_members(scenario):
    """Per-instance nested-list matrices of every class member."""
    n = scenario.n
    out = []
    for t in scenario.tclass:
        arr = t.matrices.tolist()
        out.append([arr[0] if len(arr) == 1 else arr[x] for x in range(n)])
    return out


def naive_t0(scenario):
    arr = scenario.t0.matrices.tolist()
    return [arr[0] if len(arr) == 1 else arr[x] for x in range(scenario.n)]


def nested(hclass_small, extra):
    """A class and a superset of it, for monotonicity checks."""
    tables = [tuple(t) for t in hclass_small.tables.tolist()]
    return HypothesisClass.explicit(tables), HypothesisClass.explicit(tables + extra)


def all_tables(n, c):
    return [tuple(t) for t in itertools.product(range(c), repeat=n)]


def random_context(rng, n, c):
    """``dx``, ``h0`` and the class of all labelings, as needed by the source comparison."""
    xs = FiniteSpace.numbered("x", n)
    return SimpleNamespace(
        dx=make_distribution(xs, rng.dirichlet(np.ones(n))),
        h0=tuple(int(v) for v in rng.integers(0, c, n)),
        hclass=HypothesisClass.all_functions(n, c),
    )
