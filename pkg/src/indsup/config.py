"""YAML run configuration: parsing into a :class:`Scenario` plus run parameters.

Layout::

    scenario:
      name: demo
      instances: 3                 # count or list of names
      labels: [y1, y2, y3]         # count or list of names
      annotations: [o1, o2]        # needed for explicit transition classes
      dx: uniform                  # or a list of nonnegative weights
      h0: [y1, y2, y3]             # label names or indices
      hypotheses: {kind: all_functions}
      transitions: {kind: explicit, matrices: [...]}
      t0: 0                        # index, {params: {...}} or {matrix: [...]}
      loss: {kind: cross_entropy}  # or {kind: concentration, sets: ...}
      sets: diagonal               # optional sets for reporting, when loss is cross-entropy
      evidence: [{pair: [y1, y2], vector: [...]}]
    run:
      m: [100, 1000]
      trials: 20
      delta: 0.05
      seed: 0
      caps: {weak_vc: 12, natarajan: 16, eta: 5000000}

Concentration sets are lists of outcome names or indices, or one of the
shorthands ``diagonal`` (``S_i = {o_i}``) and ``superset`` (subsets
containing the label).
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import yaml

from .complexity import NATARAJAN_CAP, WEAK_VC_CAP
from .errors import ConfigError, IndsupError, UnknownDemoError
from .losses import CONCENTRATION, CROSS_ENTROPY, LossSpec
from .scenario import HypothesisClass, Scenario
from .separation import ETA_GRID_CAP
from .spaces import FiniteSpace, make_distribution
from .transition import TransitionClass, TransitionHypothesis, build_class, superset_concentration_sets

DEMO_FILES = {
    "example-4-6": "example-4-6.yaml",
    "massart-noise": "massart-noise.yaml",
    "superset": "superset.yaml",
    "mixed-annotators": "mixed-annotators.yaml",
    "mixed-annotators-distinguished": "mixed-annotators-distinguished.yaml",
    "learning-from-difference": "learning-from-difference.yaml",
}

RUN_DEFAULTS = {
    "m": [100, 1000, 10000],
    "trials": 20,
    "delta": 0.05,
    "seed": 0,
    "caps": {"weak_vc": WEAK_VC_CAP, "natarajan": NATARAJAN_CAP, "eta": ETA_GRID_CAP},
}


@dataclass(frozen=True)
class RunParams:
    m: tuple[int, ...]
    trials: int
    delta: float
    seed: int
    caps: Mapping[str, int] = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class RunConfig:
    scenario: Scenario
    run: RunParams
    evidence: Mapping[tuple[int, int], np.ndarray]
    sets: tuple[frozenset[int], ...] | None
    canonical: Mapping[str, Any]

    def dump(self) -> str:
        return dump_canonical(self.canonical)


def dump_canonical(data: Mapping[str, Any]) -> str:
    return yaml.safe_dump(_plain(data), sort_keys=True, default_flow_style=None, width=100)


def _plain(v: Any) -> Any:
    if isinstance(v, Mapping):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    return v


# -- small typed readers ------------------------------------------------------------


def _need(d: Mapping[str, Any], key: str, path: str) -> Any:
    if not isinstance(d, Mapping):
        raise ConfigError(path, "expected a mapping", d)
    if key not in d:
        raise ConfigError(f"{path}.{key}" if path else key, "missing required field")
    return d[key]


def _int(v: Any, path: str, lo: int | None = None) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(path, "expected an integer", v)
    if lo is not None and v < lo:
        raise ConfigError(path, f"must be at least {lo}", v)
    return v


def _float(v: Any, path: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(path, "expected a number", v)
    return float(v)


def _list(v: Any, path: str) -> list:
    if not isinstance(v, list):
        raise ConfigError(path, "expected a list", v)
    return v


def _space(v: Any, path: str, prefix: str) -> FiniteSpace:
    if isinstance(v, int) and not isinstance(v, bool):
        if v < 1:
            raise ConfigError(path, "must be at least 1", v)
        return FiniteSpace.numbered(prefix, v)
    names = _list(v, path)
    try:
        return FiniteSpace(tuple(str(n) for n in names))
    except IndsupError as e:
        raise ConfigError(path, str(e), v) from e


def _ref(v: Any, space: FiniteSpace, path: str) -> int:
    """A name in ``space`` or a 0-based index into it."""
    if isinstance(v, int) and not isinstance(v, bool):
        if not 0 <= v < space.size:
            raise ConfigError(path, f"index out of range 0..{space.size - 1}", v)
        return v
    if str(v) in space.names:
        return space.index(str(v))
    raise ConfigError(path, f"unknown name (expected one of {list(space.names)})", v)


# -- stanzas ------------------------------------------------------------------------


def _hypotheses(raw: Any, xs: FiniteSpace, ys: FiniteSpace, path: str) -> HypothesisClass:
    kind = _need(raw, "kind", path)
    try:
        if kind == "all_functions":
            return HypothesisClass.all_functions(xs.size, ys.size)
        if kind == "explicit":
            tables = _list(_need(raw, "tables", path), f"{path}.tables")
            rows = []
            for a, t in enumerate(tables):
                t = _list(t, f"{path}.tables[{a}]")
                if len(t) != xs.size:
                    raise ConfigError(f"{path}.tables[{a}]", f"expected {xs.size} labels", t)
                rows.append([_ref(v, ys, f"{path}.tables[{a}][{b}]") for b, v in enumerate(t)])
            return HypothesisClass.explicit(rows)
        if kind == "threshold_1d":
            emb = [_float(v, f"{path}.embedding[{k}]") for k, v in enumerate(_list(_need(raw, "embedding", path), f"{path}.embedding"))]
            if len(emb) != xs.size:
                raise ConfigError(f"{path}.embedding", f"expected {xs.size} values", emb)
            if ys.size != 2:
                raise ConfigError(path, "threshold classifiers need exactly two labels")
            return HypothesisClass.threshold_1d(emb)
    except ConfigError:
        raise
    except IndsupError as e:
        raise ConfigError(path, str(e)) from e
    raise ConfigError(f"{path}.kind", "unknown hypothesis class kind", kind)


def _sets(raw: Any, ys: FiniteSpace, os_: FiniteSpace, path: str) -> tuple[frozenset[int], ...]:
    if raw == "diagonal":
        try:
            return tuple(frozenset({os_.index(y)}) for y in ys.names)
        except IndsupError as e:
            raise ConfigError(path, "diagonal sets need an outcome named after every label") from e
    if raw == "superset":
        if os_.size != 2**ys.size:
            raise ConfigError(path, "superset sets need the subset annotation space")
        return tuple(superset_concentration_sets(ys.size))
    items = _list(raw, path)
    if len(items) != ys.size:
        raise ConfigError(path, f"expected one set per label ({ys.size})", raw)
    return tuple(
        frozenset(_ref(o, os_, f"{path}[{i}][{k}]") for k, o in enumerate(_list(S, f"{path}[{i}]")))
        for i, S in enumerate(items)
    )


def _t0(raw: Any, tclass: TransitionClass, path: str) -> TransitionHypothesis:
    if isinstance(raw, int) and not isinstance(raw, bool):
        if not 0 <= raw < len(tclass):
            raise ConfigError(path, f"class has {len(tclass)} members", raw)
        return tclass[raw]
    if isinstance(raw, Mapping) and "params" in raw:
        params = raw["params"]
        if not isinstance(params, Mapping):
            raise ConfigError(f"{path}.params", "expected a mapping", params)
        try:
            return tclass[tclass.find(**{str(k): _float(v, f"{path}.params.{k}") for k, v in params.items()})]
        except ConfigError:
            raise
        except IndsupError as e:
            raise ConfigError(f"{path}.params", str(e), dict(params)) from e
    if isinstance(raw, Mapping) and "matrix" in raw:
        try:
            t = TransitionHypothesis(tclass.label_space, tclass.annotation_space, np.asarray(raw["matrix"], dtype=float))
        except (IndsupError, ValueError) as e:
            raise ConfigError(f"{path}.matrix", str(e)) from e
        return t
    raise ConfigError(path, "expected an index, {params: ...} or {matrix: ...}", raw)


def parse_config(data: Any, *, source: str = "<config>") -> RunConfig:
    """Validate a loaded YAML document and build the scenario it describes."""
    if not isinstance(data, Mapping):
        raise ConfigError("", "top level must be a mapping", data)
    unknown = set(data) - {"scenario", "run"}
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown top-level field")
    sc = _need(data, "scenario", "")
    if not isinstance(sc, Mapping):
        raise ConfigError("scenario", "expected a mapping", sc)
    allowed = {"name", "instances", "labels", "annotations", "dx", "h0", "hypotheses", "transitions", "t0", "loss", "sets", "evidence"}
    extra = set(sc) - allowed
    if extra:
        raise ConfigError(f"scenario.{sorted(extra)[0]}", "unknown field")
    canon: dict[str, Any] = {}
    name = str(sc.get("name", ""))
    xs = _space(_need(sc, "instances", "scenario"), "scenario.instances", "x")
    ys = _space(_need(sc, "labels", "scenario"), "scenario.labels", "y")
    ann = None
    if "annotations" in sc:
        ann = _space(sc["annotations"], "scenario.annotations", "o")
    spec = _need(sc, "transitions", "scenario")
    if not isinstance(spec, Mapping):
        raise ConfigError("scenario.transitions", "expected a mapping", spec)
    try:
        tclass = build_class(copy.deepcopy(dict(spec)), ys, ann)
    except IndsupError as e:
        raise ConfigError("scenario.transitions", str(e)) from e
    os_ = tclass.annotation_space
    if tclass.n_instances not in (None, xs.size):
        raise ConfigError("scenario.transitions", f"class is defined on {tclass.n_instances} instances, not {xs.size}")

    dx_raw = sc.get("dx", "uniform")
    if dx_raw == "uniform":
        weights = [1.0] * xs.size
    else:
        weights = [_float(v, f"scenario.dx[{k}]") for k, v in enumerate(_list(dx_raw, "scenario.dx"))]
    try:
        dx = make_distribution(xs, weights)
    except IndsupError as e:
        raise ConfigError("scenario.dx", str(e), dx_raw) from e

    h0_raw = _list(_need(sc, "h0", "scenario"), "scenario.h0")
    if len(h0_raw) != xs.size:
        raise ConfigError("scenario.h0", f"expected {xs.size} labels", h0_raw)
    h0 = tuple(_ref(v, ys, f"scenario.h0[{k}]") for k, v in enumerate(h0_raw))
    hyp_raw = _need(sc, "hypotheses", "scenario")
    hclass = _hypotheses(hyp_raw, xs, ys, "scenario.hypotheses")
    t0 = _t0(sc.get("t0", 0), tclass, "scenario.t0")

    loss_raw = sc.get("loss", {"kind": CROSS_ENTROPY})
    kind = _need(loss_raw, "kind", "scenario.loss")
    if kind == CROSS_ENTROPY:
        loss = LossSpec()
    elif kind == CONCENTRATION:
        loss = LossSpec.concentration(_sets(_need(loss_raw, "sets", "scenario.loss"), ys, os_, "scenario.loss.sets"))
    else:
        raise ConfigError("scenario.loss.kind", "expected cross_entropy or concentration", kind)
    sets = loss.sets
    if "sets" in sc:
        sets = _sets(sc["sets"], ys, os_, "scenario.sets")

    evidence: dict[tuple[int, int], np.ndarray] = {}
    for k, e in enumerate(_list(sc.get("evidence", []), "scenario.evidence")):
        p = f"scenario.evidence[{k}]"
        pair = _list(_need(e, "pair", p), f"{p}.pair")
        if len(pair) != 2:
            raise ConfigError(f"{p}.pair", "expected two labels", pair)
        key = (_ref(pair[0], ys, f"{p}.pair[0]"), _ref(pair[1], ys, f"{p}.pair[1]"))
        vec = [_float(v, f"{p}.vector[{q}]") for q, v in enumerate(_list(_need(e, "vector", p), f"{p}.vector"))]
        if len(vec) != os_.size:
            raise ConfigError(f"{p}.vector", f"expected {os_.size} entries", vec)
        evidence[key] = np.asarray(vec)

    try:
        scenario = Scenario(xs, ys, os_, dx, h0, t0, hclass, tclass, loss, name=name)
    except IndsupError as e:
        raise ConfigError("scenario", str(e)) from e

    run = _run(data.get("run", {}) or {})

    canon["name"] = name
    canon["instances"] = list(xs.names)
    canon["labels"] = list(ys.names)
    if ann is not None:
        canon["annotations"] = list(ann.names)
    canon["dx"] = "uniform" if dx_raw == "uniform" else weights
    canon["h0"] = [ys.names[i] for i in h0]
    canon["hypotheses"] = _plain(hyp_raw)
    canon["transitions"] = _plain(spec)
    canon["t0"] = _plain(sc.get("t0", 0))
    loss_c: dict[str, Any] = {"kind": loss.kind}
    if loss.sets is not None:
        loss_c["sets"] = [[os_.names[o] for o in sorted(S)] for S in loss.sets]
    canon["loss"] = loss_c
    if "sets" in sc:
        canon["sets"] = [[os_.names[o] for o in sorted(S)] for S in sets]
    if evidence:
        canon["evidence"] = [
            {"pair": [ys.names[i], ys.names[j]], "vector": evidence[(i, j)].tolist()} for (i, j) in sorted(evidence)
        ]
    canonical = {
        "scenario": canon,
        "run": {"m": list(run.m), "trials": run.trials, "delta": run.delta, "seed": run.seed, "caps": dict(run.caps)},
    }
    return RunConfig(scenario, run, evidence, sets, canonical)


def _run(raw: Any) -> RunParams:
    if not isinstance(raw, Mapping):
        raise ConfigError("run", "expected a mapping", raw)
    extra = set(raw) - set(RUN_DEFAULTS)
    if extra:
        raise ConfigError(f"run.{sorted(extra)[0]}", "unknown field")
    m_raw = raw.get("m", RUN_DEFAULTS["m"])
    if isinstance(m_raw, int) and not isinstance(m_raw, bool):
        m_raw = [m_raw]
    ms = tuple(_int(v, f"run.m[{k}]", 1) for k, v in enumerate(_list(m_raw, "run.m")))
    if not ms or list(ms) != sorted(ms):
        raise ConfigError("run.m", "expected a non-empty ascending list", list(ms))
    trials = _int(raw.get("trials", RUN_DEFAULTS["trials"]), "run.trials", 1)
    delta = _float(raw.get("delta", RUN_DEFAULTS["delta"]), "run.delta")
    if not 0 < delta < 1:
        raise ConfigError("run.delta", "must lie in (0, 1)", delta)
    seed = _int(raw.get("seed", RUN_DEFAULTS["seed"]), "run.seed", 0)
    caps = dict(RUN_DEFAULTS["caps"])
    caps_raw = raw.get("caps", {}) or {}
    if not isinstance(caps_raw, Mapping):
        raise ConfigError("run.caps", "expected a mapping", caps_raw)
    for k, v in caps_raw.items():
        if k not in caps:
            raise ConfigError(f"run.caps.{k}", "unknown cap")
        caps[k] = _int(v, f"run.caps.{k}", 1)
    return RunParams(ms, trials, delta, seed, caps)


def load_yaml(text: str, source: str = "<config>") -> Any:
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        where = f"{source}:{mark.line + 1}" if mark is not None else source
        raise ConfigError(where, f"invalid YAML ({getattr(e, 'problem', None) or e})") from e


def demo_text(name: str) -> str:
    if name not in DEMO_FILES:
        raise UnknownDemoError(f"unknown demo {name!r}; available: {', '.join(sorted(DEMO_NAMES))}")
    return resources.files("indsup").joinpath("demos", DEMO_FILES[name]).read_text()


def load_config(path: str | Path) -> RunConfig:
    """Parse a config file; ``demo:NAME`` loads a bundled configuration."""
    p = str(path)
    if p.startswith("demo:"):
        text, source = demo_text(p[5:]), p
    else:
        try:
            text = Path(p).read_text()
        except OSError as e:
            raise ConfigError(p, f"cannot read config ({e.strerror})") from e
        source = p
    return parse_config(load_yaml(text, source), source=source)


def bundled_config(name: str) -> RunConfig:
    return parse_config(load_yaml(demo_text(name), name), source=name)


def bundled_scenario(name: str) -> Scenario:
    return bundled_config(name).scenario


DEMO_NAMES = tuple(DEMO_FILES) + ("non-learnable-sequence",)
