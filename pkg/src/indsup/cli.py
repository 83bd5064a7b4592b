"""``indsup`` command line.

Exit codes: 0 success, 1 when the checked learnability condition fails,
2 for usage or configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from . import __version__
from .complexity import (
    dimension_bound,
    natarajan_dimension,
    scenario_weak_vc_major,
    transition_dimension,
)
from .config import DEMO_NAMES, RunConfig, bundled_config, load_config
from .errors import CapExceededError, IndsupError, NoWrongHypothesisError, UnknownDemoError
from .joint import difference_scenario, verify_no_free_separation
from .learning import (
    bound_inputs,
    learning_curve,
    summarize_curve,
    write_curve_csv,
    write_summary_csv,
)
from .scenario import Scenario
from .separation import (
    CONSTRAINT_NOTE,
    concentration_degree,
    evidence_bound,
    identifiability_level,
    non_learnability_witness,
    separation_degree,
)
from .spaces import FiniteSpace, make_distribution
from .transition import TransitionClass, build_class

SCHEMA_VERSION = 1
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


# -- output helpers -----------------------------------------------------------------


def jsonable(v: Any) -> Any:
    """Plain JSON types; infinities become the strings ``"inf"`` / ``"-inf"``."""
    if isinstance(v, Mapping):
        return {str(k): jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return jsonable(v.tolist())
    if isinstance(v, np.generic):
        v = v.item()
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
    return v


def dumps(data: Mapping[str, Any]) -> str:
    return json.dumps(jsonable(data), sort_keys=True, indent=2) + "\n"


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    p = out / name
    p.write_text(text)
    return p


def _report(out: Path, name: str, data: dict[str, Any]) -> None:
    data = {"schema_version": SCHEMA_VERSION, **data}
    text = dumps(data)
    _write(out, name, text)
    sys.stdout.write(text)


def _pair(sc: Scenario, i: int, j: int) -> str:
    return f"{sc.y_space.names[i]}->{sc.y_space.names[j]}"


# -- report builders ----------------------------------------------------------------


def separation_payload(sc: Scenario, evidence=None, sets=None, eta_cap: int | None = None) -> dict[str, Any]:
    rep = separation_degree(sc)
    ys = sc.y_space.names
    out: dict[str, Any] = {
        "scenario": sc.summary(),
        "gamma": rep.gamma,
        "separated": rep.separated,
        "pairwise": {_pair(sc, i, j): v for i, row in enumerate(rep.pairwise) for j, v in enumerate(row) if v is not None},
        "grid_caveat": rep.grid_caveat,
        "notes": list(rep.notes),
        "constraint_set": CONSTRAINT_NOTE,
        "witness": None,
    }
    if rep.witness is not None:
        x, i, j, ti, tj = rep.witness
        out["witness"] = {"x": sc.x_space.names[x], "i": ys[i], "j": ys[j], "t_i": ti, "t_j": tj}
    if sets is not None:
        cr = concentration_degree(sc, sets)
        w = None
        if cr.witness is not None:
            t, x, i, j = cr.witness
            w = {"t": t, "x": sc.x_space.names[x], "i": ys[i], "j": ys[j]}
        out["concentration"] = {"gamma_c": cr.value, "pinsker_bound": 2 * cr.value**2 if cr.value >= 0 else None, "witness": w}
    if evidence:
        er = evidence_bound(sc, evidence)
        out["evidence"] = {
            "bound": er.bound,
            "gammas": {_pair(sc, *k): v for k, v in er.gammas.items()},
            "lipschitz": {_pair(sc, *k): v for k, v in er.lipschitz.items()},
            "failure": None if er.failure is None else list(er.failure),
        }
    if eta_cap is not None:
        out["eta"] = eta_payload(sc, eta_cap)
    return out


def eta_payload(sc: Scenario, cap: int) -> dict[str, Any]:
    try:
        r = identifiability_level(sc, cap=cap)
    except CapExceededError as e:
        return {"eta": None, "skipped": str(e)}
    except NoWrongHypothesisError as e:
        return {"eta": math.inf, "skipped": str(e)}
    return {
        "eta": r.eta,
        "witness_h": [sc.y_space.names[v] for v in r.witness_h],
        "witness_t": r.witness_t,
        "numerator": r.numerator,
        "denominator": r.denominator,
    }


def pairwise_csv(sc: Scenario) -> str:
    rep = separation_degree(sc)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label", *sc.y_space.names])
    for i, row in enumerate(rep.pairwise):
        w.writerow([sc.y_space.names[i], *("" if v is None else jsonable(v) if math.isinf(v) else repr(v) for v in row)])
    return buf.getvalue()


# -- commands -----------------------------------------------------------------------


def _config(args) -> RunConfig:
    if not args.config:
        raise _Usage("--config is required for this command")
    return load_config(args.config)


class _Usage(Exception):
    pass


def cmd_separation(args) -> int:
    cfg = _config(args)
    sc = cfg.scenario
    payload = separation_payload(sc, cfg.evidence, cfg.sets, cfg.run.caps["eta"])
    out = Path(args.out)
    _write(out, "pairwise.csv", pairwise_csv(sc))
    _report(out, "separation.json", {"command": "separation", **payload})
    return EXIT_OK if payload["separated"] else EXIT_FAIL


def cmd_eta(args) -> int:
    cfg = _config(args)
    payload = eta_payload(cfg.scenario, cfg.run.caps["eta"])
    _report(Path(args.out), "eta.json", {"command": "eta", "scenario": cfg.scenario.summary(), **payload})
    eta = payload["eta"]
    return EXIT_OK if eta is not None and eta > 0 else EXIT_FAIL


def cmd_curve(args) -> int:
    cfg = _config(args)
    run = cfg.run
    ms = _parse_m(args.m) if args.m else list(run.m)
    trials = run.trials if args.trials is None else args.trials
    delta = run.delta if args.delta is None else args.delta
    seed = run.seed if args.seed is None else args.seed
    out = Path(args.out)
    paths = [out / "curve.csv", out / "curve_summary.csv"]
    try:
        inputs = bound_inputs(cfg.scenario, eta_cap=run.caps["eta"], dim_cap=run.caps["weak_vc"])
        records = learning_curve(cfg.scenario, ms, trials, seed, delta=delta, inputs=inputs)
        buf = io.StringIO()
        write_curve_csv(records, buf)
        _write(out, "curve.csv", buf.getvalue())
        buf = io.StringIO()
        summary = summarize_curve(records)
        write_summary_csv(summary, buf)
        _write(out, "curve_summary.csv", buf.getvalue())
    except BaseException:
        for p in paths:
            if p.exists():
                p.unlink()
        raise
    _report(
        out,
        "curve.json",
        {
            "command": "curve",
            "scenario": cfg.scenario.summary(),
            "m": ms,
            "trials": trials,
            "delta": delta,
            "seed": seed,
            "bound_inputs": {"b": inputs.b, "eta": inputs.eta, "d": inputs.d, "eta_source": inputs.eta_source, "d_source": inputs.d_source},
            "summary": [{"m": s.m, "mean_risk": s.mean_risk, "q05": s.q05, "q95": s.q95, "bound": s.bound} for s in summary],
        },
    )
    return EXIT_OK


def _dim_entry(fn: Callable[[], Any]) -> dict[str, Any]:
    try:
        return fn().to_dict()
    except CapExceededError as e:
        return {"error": f"{e}; rerun with --randomized for a certified lower bound"}


def cmd_dimension(args) -> int:
    cfg = _config(args)
    sc = cfg.scenario
    caps = cfg.run.caps
    mode = "random" if args.randomized else "exhaustive"
    seed = cfg.run.seed if args.seed is None else args.seed
    nat = _dim_entry(lambda: natarajan_dimension(sc.hclass, cap=caps["natarajan"], mode=mode, seed=seed))
    wvc = _dim_entry(lambda: scenario_weak_vc_major(sc, cap=caps["weak_vc"], mode=mode, seed=seed))
    dt = _dim_entry(lambda: transition_dimension(sc.tclass, sc.loss, sc.n, cap=caps["weak_vc"], mode=mode, seed=seed))
    bound = None
    if nat.get("exhaustive") and dt.get("exhaustive"):
        bound = dimension_bound(nat["value"], dt["value"], sc.c)
    payload = {
        "command": "dimension",
        "scenario": sc.summary(),
        "natarajan": nat,
        "weak_vc_major": wvc,
        "transition": dt,
        "dimension_bound": bound,
        "threshold_rule": "strict: loss > u",
    }
    _report(Path(args.out), "dimension.json", payload)
    return EXIT_OK


def _sources(tclass: TransitionClass, labels: FiniteSpace) -> tuple[TransitionClass, TransitionClass, float, bool]:
    spec = tclass.spec
    if spec.get("kind") != "joint":
        raise _Usage("the joint command needs a scenario whose transitions are of kind 'joint'")
    built = []
    for src in spec["sources"]:
        ann = src.get("annotations")
        space = FiniteSpace(tuple(str(a) for a in ann)) if ann is not None else (labels if src.get("kind") == "explicit" else None)
        built.append(build_class(src, labels, space))
    return built[0], built[1], float(spec["lambda"]), bool(spec.get("distinguished", True))


def joint_payload(sc: Scenario) -> dict[str, Any]:
    c1, c2, lam, dist = _sources(sc.tclass, sc.y_space)
    checks = {}
    for i in range(sc.c):
        for j in range(sc.c):
            if i != j:
                checks[_pair(sc, i, j)] = verify_no_free_separation(c1, c2, lam, sc, i, j, distinguished=dist).to_dict()
    rep = separation_degree(sc)
    return {
        "scenario": sc.summary(),
        "lambda": lam,
        "distinguished": dist,
        "constrained": bool(sc.tclass.spec.get("constraints")),
        "annotation_space": list(sc.o_space.names),
        "gamma": rep.gamma,
        "pairwise": {_pair(sc, i, j): v for i, row in enumerate(rep.pairwise) for j, v in enumerate(row) if v is not None},
        "no_free_separation": checks,
        "rows_t0": sc.t0.expand(sc.n)[0].tolist(),
        "members": len(sc.tclass),
    }


def cmd_joint(args) -> int:
    cfg = _config(args)
    payload = joint_payload(cfg.scenario)
    if cfg.evidence:
        er = evidence_bound(cfg.scenario, cfg.evidence)
        payload["evidence_bound"] = er.bound
    _report(Path(args.out), "joint.json", {"command": "joint", **payload})
    return EXIT_OK if payload["gamma"] > 0 else EXIT_FAIL


# -- demos --------------------------------------------------------------------------


def non_learnable_template(k_max: int = 8) -> Scenario:
    """Binary noisy labels with rates ``0.5 - 0.3/sqrt(k)`` approaching the coin flip."""
    from .losses import LossSpec
    from .scenario import HypothesisClass

    labels = FiniteSpace(("y1", "y2"))
    rates = [0.5 - 0.3 / math.sqrt(k) for k in range(1, k_max + 1)]
    tclass = build_class({"kind": "uniform_noise", "rates": rates}, labels)
    xs = FiniteSpace.numbered("x", 2)
    return Scenario(
        xs, labels, labels, make_distribution(xs, [1, 1]), (0, 1), tclass[0],
        HypothesisClass.all_functions(2, 2), tclass, LossSpec(), name="non-learnable-sequence",
    )


def non_learnable_payload(ks: Sequence[int] = (1, 2, 4, 8)) -> dict[str, Any]:
    template = non_learnable_template(max(ks))
    steps = []
    for k in ks:
        w = non_learnability_witness(template, k)
        steps.append(
            {
                "k": k,
                "x": template.x_space.names[w.x],
                "i": template.y_space.names[w.i],
                "j": template.y_space.names[w.j],
                "t0_rate": template.tclass[w.t0_index].params["rate"],
                "t_minus_rate": template.tclass[w.t_minus_index].params["rate"],
                "h_minus": [template.y_space.names[v] for v in w.h_minus],
                "kl": w.kl,
                "eta": w.eta.eta,
                "one_over_k": 1.0 / k,
                "eta_le_one_over_k": w.eta.eta <= 1.0 / k,
                "chain_holds": w.chain_holds,
            }
        )
    return {"template": template.summary(), "sequence": steps, "all_hold": all(s["eta_le_one_over_k"] for s in steps)}


def demo_payload(name: str, eta_cap: int | None = None) -> tuple[dict[str, Any], bool]:
    """Report for a bundled demo and whether its headline claim holds."""
    if name == "non-learnable-sequence":
        p = non_learnable_payload()
        return p, p["all_hold"]
    if name not in DEMO_NAMES:
        raise UnknownDemoError(f"unknown demo {name!r}; available: {', '.join(sorted(DEMO_NAMES))}")
    cfg = bundled_config(name)
    sc = cfg.scenario
    cap = cfg.run.caps["eta"] if eta_cap is None else eta_cap
    p = separation_payload(sc, cfg.evidence, cfg.sets, cap)
    ok = p["separated"]
    if name.startswith("mixed-annotators"):
        jp = joint_payload(sc)
        p["joint"] = jp
        rows = sc.transitions.reshape(-1, sc.s)
        half = bool(np.all(np.abs(rows - 0.5) <= 1e-12))
        p["rows_all_half"] = half
        ok = p["separated"] if jp["distinguished"] else half and not p["separated"]
    if name == "learning-from-difference":
        setup = difference_scenario()
        p["evidence_bound_expected"] = 0.5 * (2 * 0.2 / 2) ** 2
        p["marginal_gammas"] = list(setup.marginal_gammas)
        ok = ok and setup.report.ok and all(g == 0 for g in setup.marginal_gammas)
    return p, ok


def cmd_demo(args) -> int:
    if args.name is None or args.name == "list":
        sys.stdout.write("\n".join(DEMO_NAMES) + "\n")
        return EXIT_OK
    payload, ok = demo_payload(args.name)
    _report(Path(args.out), f"demo-{args.name}.json", {"command": "demo", "demo": args.name, "claim_holds": ok, **payload})
    return EXIT_OK if ok else EXIT_FAIL


# -- entry point --------------------------------------------------------------------


def _parse_m(text: str) -> list[int]:
    try:
        ms = [int(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise _Usage(f"--m expects comma-separated integers, got {text!r}") from e
    if not ms or any(m < 1 for m in ms) or ms != sorted(ms):
        raise _Usage("--m must be an ascending list of positive integers")
    return ms


COMMANDS = {
    "separation": cmd_separation,
    "curve": cmd_curve,
    "dimension": cmd_dimension,
    "joint": cmd_joint,
    "eta": cmd_eta,
    "demo": cmd_demo,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="indsup", description="Learnability checks for indirect supervision on finite spaces.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("name", nargs="?", help="demo name (demo command only)")
    p.add_argument("--config", help="YAML config path, or demo:NAME for a bundled one")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default=".", help="output directory (default: current)")
    p.add_argument("--trials", type=int)
    p.add_argument("--delta", type=float)
    p.add_argument("--m", help="comma-separated sample sizes, e.g. 100,1000")
    p.add_argument("--randomized", action="store_true", help="randomized lower-bound dimension search")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE
    if args.name is not None and args.command != "demo":
        sys.stderr.write(f"error: unexpected argument {args.name!r}\n")
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except _Usage as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_USAGE
    except IndsupError as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
