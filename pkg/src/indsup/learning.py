"""Empirical risk minimization over the finite (hypothesis x transition) grid.

Also learning curves and a Monte-Carlo check of the high-probability bound
``R(ERM) <= (2b/eta)(sqrt(2G/m) + 4G/m + sqrt(2 ln(4/delta)/m))``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from typing import IO, Iterable, Sequence

import numpy as np

from .complexity import WEAK_VC_CAP, complexity_for_bound, gamma_bar
from .errors import (
    BadParamsError,
    CapExceededError,
    EmptyDatasetError,
    NoWrongHypothesisError,
    UnboundedLossError,
)
from .losses import CROSS_ENTROPY
from .scenario import Dataset, Scenario, empirical_annotation_risk, loss_ceiling, sample_dataset
from .separation import ETA_GRID_CAP, concentration_degree, identifiability_level, separation_degree

#: Relative tolerance for treating two empirical risks as tied.
TIE_TOLERANCE = 1e-12

CURVE_HEADER = ("m", "trial", "seed", "risk", "bound", "b", "eta", "d", "delta")
SUMMARY_HEADER = ("m", "mean_risk", "q05", "q95", "bound")


@dataclass(frozen=True)
class ErmResult:
    """Selected pair and diagnostics. ``h_star`` is the learned classifier."""

    h_star: tuple[int, ...]
    h_index: int
    t_star: int
    empirical_risk: float
    true_classification_risk: float
    ties: int


def empirical_risk_grid(scenario: Scenario, dataset: Dataset) -> np.ndarray:
    """``(H, K)`` empirical annotation risk of every candidate, from pair counts."""
    if dataset.m == 0:
        raise EmptyDatasetError("ERM on an empty dataset")
    n, s = scenario.n, scenario.s
    C = dataset.counts(n, s).astype(float)  # (n, s)
    L = scenario.loss_tensor  # (K, n, c, s)
    w = C[None, :, None, :]
    with np.errstate(invalid="ignore"):
        G = np.where(w > 0, w * L, 0.0).sum(axis=-1)  # (K, n, c)
    tables = scenario.hclass.tables
    totals = G[:, np.arange(n)[None, :], tables].sum(axis=-1)  # (K, H)
    return totals.T / dataset.m


def erm(scenario: Scenario, dataset: Dataset) -> ErmResult:
    """Full scan; the lexicographically first (hypothesis, transition) co-minimizer wins.

    Infinite risks rank after every finite one. Risks within
    ``TIE_TOLERANCE * max(1, |min|)`` of the minimum count as ties, which
    absorbs summation-order noise between algebraically equal candidates.
    """
    R = empirical_risk_grid(scenario, dataset)
    best = float(R.min())
    if math.isinf(best):
        tied = np.ones_like(R, dtype=bool)
    else:
        tied = R <= best + TIE_TOLERANCE * max(1.0, abs(best))
    flat = int(np.flatnonzero(tied.ravel())[0])
    h, k = divmod(flat, R.shape[1])
    table = tuple(int(v) for v in scenario.hclass.tables[h])
    risk = empirical_annotation_risk(table, scenario.tclass[k], dataset, scenario.loss)
    return ErmResult(
        h_star=table,
        h_index=h,
        t_star=k,
        empirical_risk=risk,
        true_classification_risk=float(scenario.classification_risks[h]),
        ties=int(tied.sum()),
    )


# -- the bound ---------------------------------------------------------------------


def theorem_bound(b: float, eta: float, d: int, m: int, delta: float) -> float:
    """``(2b/eta)(sqrt(2G/m) + 4G/m + sqrt(2 ln(4/delta)/m))`` with ``G = gamma_bar(m, d)``."""
    if not (b > 0 and math.isfinite(b)):
        raise BadParamsError(f"b must be positive and finite, got {b}")
    if not (eta > 0 and math.isfinite(eta)):
        raise BadParamsError(f"eta must be positive and finite, got {eta}")
    if d < 0 or m < 1:
        raise BadParamsError("need d >= 0 and m >= 1")
    if not 0 < delta < 1:
        raise BadParamsError(f"delta must lie in (0, 1), got {delta}")
    g = gamma_bar(m, d)
    return (2 * b / eta) * (math.sqrt(2 * g / m) + 4 * g / m + math.sqrt(2 * math.log(4 / delta) / m))


@dataclass(frozen=True)
class BoundInputs:
    """Constants fed to :func:`theorem_bound`, with where each came from.

    ``eta`` may be the exact grid value or a lower bound (separation degree
    for cross-entropy, concentration degree for the set loss); the bound
    stays valid either way. ``d`` is None when no dimension is available.
    """

    b: float
    eta: float
    d: int | None
    eta_source: str
    d_source: str

    def bound(self, m: int, delta: float) -> float:
        if not 0 < delta < 1:
            raise BadParamsError(f"delta must lie in (0, 1), got {delta}")
        if math.isinf(self.eta) and self.eta > 0:
            return 0.0  # no hypothesis with positive risk
        if self.d is None or not math.isfinite(self.b) or not self.eta > 0:
            return math.inf
        return theorem_bound(self.b, self.eta, self.d, m, delta)


def bound_inputs(scenario: Scenario, *, eta_cap: int = ETA_GRID_CAP, dim_cap: int = WEAK_VC_CAP) -> BoundInputs:
    try:
        b = loss_ceiling(scenario)
    except UnboundedLossError:
        b = math.inf
    if len(scenario.hclass) * len(scenario.tclass) <= eta_cap:
        try:
            eta, eta_src = identifiability_level(scenario, cap=eta_cap).eta, "exact"
        except NoWrongHypothesisError:
            eta, eta_src = math.inf, "exact (no wrong hypothesis)"
    elif scenario.loss.kind == CROSS_ENTROPY:
        eta, eta_src = separation_degree(scenario).gamma, "separation degree"
    else:
        eta, eta_src = concentration_degree(scenario).value, "concentration degree"
    try:
        est = complexity_for_bound(scenario, cap=dim_cap)
        d, d_src = est.d, est.source
    except CapExceededError:
        d, d_src = None, "unavailable"
    return BoundInputs(b, eta, d, eta_src, d_src)


# -- learning curves ---------------------------------------------------------------


@dataclass(frozen=True)
class CurveRecord:
    m: int
    trial: int
    seed: int
    risk: float
    bound: float
    b: float
    eta: float
    d: int | None
    delta: float

    def row(self) -> list[str]:
        return [_fmt(v) for v in (self.m, self.trial, self.seed, self.risk, self.bound, self.b, self.eta, self.d, self.delta)]


def _fmt(v: object) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def learning_curve(
    scenario: Scenario,
    m_grid: Sequence[int],
    trials: int,
    base_seed: int,
    *,
    delta: float = 0.05,
    inputs: BoundInputs | None = None,
) -> list[CurveRecord]:
    """One record per (m, trial); the dataset seed is ``base_seed + trial``."""
    if trials < 1:
        raise BadParamsError("trials must be at least 1")
    ms = [int(m) for m in m_grid]
    if not ms or any(m < 1 for m in ms) or ms != sorted(ms):
        raise BadParamsError("m grid must be a non-empty ascending list of positive sizes")
    if inputs is None:
        inputs = bound_inputs(scenario)
    out = []
    for m in ms:
        bound = inputs.bound(m, delta)
        for t in range(trials):
            seed = base_seed + t
            res = erm(scenario, sample_dataset(scenario, m, seed))
            out.append(CurveRecord(m, t, seed, res.true_classification_risk, bound, inputs.b, inputs.eta, inputs.d, delta))
    return out


@dataclass(frozen=True)
class CurveSummary:
    m: int
    mean_risk: float
    q05: float
    q95: float
    bound: float

    def row(self) -> list[str]:
        return [_fmt(v) for v in (self.m, self.mean_risk, self.q05, self.q95, self.bound)]


def summarize_curve(records: Iterable[CurveRecord]) -> list[CurveSummary]:
    by_m: dict[int, list[CurveRecord]] = {}
    for r in records:
        by_m.setdefault(r.m, []).append(r)
    out = []
    for m in sorted(by_m):
        risks = np.array([r.risk for r in by_m[m]])
        out.append(
            CurveSummary(
                m,
                float(risks.mean()),
                float(np.quantile(risks, 0.05)),
                float(np.quantile(risks, 0.95)),
                by_m[m][0].bound,
            )
        )
    return out


def write_curve_csv(records: Iterable[CurveRecord], fh: IO[str]) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CURVE_HEADER)
    for r in records:
        w.writerow(r.row())


def write_summary_csv(rows: Iterable[CurveSummary], fh: IO[str]) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(SUMMARY_HEADER)
    for r in rows:
        w.writerow(r.row())


@dataclass(frozen=True)
class CoverageResult:
    fraction: float
    bound: float
    risks: tuple[float, ...]
    inputs: BoundInputs

    def to_dict(self) -> dict:
        d = asdict(self)
        d["risks"] = list(self.risks)
        return d


def bound_coverage(
    scenario: Scenario,
    m: int,
    delta: float,
    trials: int,
    base_seed: int,
    *,
    inputs: BoundInputs | None = None,
) -> CoverageResult:
    """Fraction of trials whose ERM classification risk is within the bound."""
    if trials < 1:
        raise BadParamsError("trials must be at least 1")
    if inputs is None:
        inputs = bound_inputs(scenario)
    bound = inputs.bound(m, delta)
    risks = tuple(
        erm(scenario, sample_dataset(scenario, m, base_seed + t)).true_classification_risk for t in range(trials)
    )
    frac = sum(r <= bound for r in risks) / trials
    return CoverageResult(frac, bound, risks, inputs)
