"""Censoring-aware evaluation metrics and bootstrap model comparison.

Weighting convention (documented once here, used everywhere): cases by
horizon tau carry weight 1/G(T-) at their diagnosis time; probands whose
event-free status at tau is observed (followed past tau, or dead earlier)
carry 1/G(tau-); probands censored before tau carry zero metric weight but
still inform the censoring curve G.  Left limits are used wherever a weight
divides by G.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from riskfusion.cohort import CohortRecord
from riskfusion.ensemble import CensoringModel
from riskfusion.errors import FitError

LOG_EPS = 1e-12
SNB_THRESHOLD = 0.0167

EVENT_CODES = {"censored": 0, "breast": 1, "death": 2}


@dataclass(frozen=True)
class EvalRecord:
    """One proband's evaluation row at a fixed horizon."""

    predictions: dict[str, float]
    follow_up_years: float
    event: str
    y: int
    weight: float
    stratum: Optional[str] = None


def make_eval_records(
    records: Sequence[CohortRecord],
    predictions: dict[str, np.ndarray],
    tau: float,
    G: CensoringModel,
) -> list[EvalRecord]:
    out: list[EvalRecord] = []
    for i, rec in enumerate(records):
        if rec.breast_by(tau):
            y, w = 1, G.weight_at_left(rec.stratum, rec.follow_up_years)
        elif rec.known_event_free_at(tau):
            y, w = 0, G.weight_at_left(rec.stratum, tau)
        else:
            y, w = 0, 0.0
        out.append(
            EvalRecord(
                predictions={m: float(p[i]) for m, p in predictions.items()},
                follow_up_years=rec.follow_up_years,
                event=rec.event,
                y=y,
                weight=w,
                stratum=rec.stratum,
            )
        )
    return out


def _arrays(records: Sequence[EvalRecord], model: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    y = np.asarray([r.y for r in records], dtype=float)
    p = np.asarray([r.predictions[model] for r in records], dtype=float)
    w = np.asarray([r.weight for r in records], dtype=float)
    return y, p, w


# ---------------------------------------------------------------------------
# array-level metric cores (shared by the record API and the bootstrap)


def oe_core(y: np.ndarray, p: np.ndarray, w: np.ndarray) -> float:
    expected = float(np.sum(w * p))
    if expected <= 0:
        raise ValueError("expected events are zero")
    return float(np.sum(w * y)) / expected


def auc_core(y: np.ndarray, p: np.ndarray, w: np.ndarray) -> float:
    """Weighted case-outscores-control probability; score ties count half.

    One sort: walking predictions upward keeps the running control mass
    below each case, which is the weighted Mann-Whitney sum.
    """
    case_w = w * y
    ctrl_w = w * (1.0 - y)
    total_cases = case_w.sum()
    total_ctrls = ctrl_w.sum()
    if total_cases <= 0 or total_ctrls <= 0:
        raise ValueError("need at least one weighted case and control")
    order = np.argsort(p, kind="stable")
    p_s = p[order]
    case_s = case_w[order]
    ctrl_s = ctrl_w[order]
    boundary = np.empty(len(p_s), dtype=bool)
    boundary[0] = True
    boundary[1:] = p_s[1:] != p_s[:-1]
    group = np.cumsum(boundary) - 1
    n_groups = int(group[-1]) + 1
    ctrl_g = np.bincount(group, weights=ctrl_s, minlength=n_groups)
    case_g = np.bincount(group, weights=case_s, minlength=n_groups)
    ctrl_below = np.concatenate(([0.0], np.cumsum(ctrl_g)[:-1]))
    num = float(np.sum(case_g * (ctrl_below + 0.5 * ctrl_g)))
    return num / (total_cases * total_ctrls)


def brier_core(y: np.ndarray, p: np.ndarray, w: np.ndarray) -> float:
    total = w.sum()
    if total <= 0:
        raise ValueError("no weighted records")
    return float(np.sum(w * (p - y) ** 2) / total)


def log_core(y: np.ndarray, p: np.ndarray, w: np.ndarray) -> float:
    total = w.sum()
    if total <= 0:
        raise ValueError("no weighted records")
    pc = np.clip(p, LOG_EPS, 1.0 - LOG_EPS)
    ll = y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc)
    return float(-np.sum(w * ll) / total)


def snb_core(y: np.ndarray, p: np.ndarray, w: np.ndarray, threshold: float) -> float:
    case_mass = float(np.sum(w * y))
    ctrl_mass = float(np.sum(w * (1.0 - y)))
    total = case_mass + ctrl_mass
    if case_mass <= 0 or ctrl_mass <= 0:
        raise ValueError("degenerate prevalence")
    prevalence = case_mass / total
    positive = p >= threshold
    tpr = float(np.sum(w * y * positive)) / case_mass
    fpr = float(np.sum(w * (1.0 - y) * positive)) / ctrl_mass
    odds_t = threshold / (1.0 - threshold)
    odds_pi = prevalence / (1.0 - prevalence)
    return tpr - (odds_t / odds_pi) * fpr


# ---------------------------------------------------------------------------
# record-level API


def oe_ratio(records: Sequence[EvalRecord], model: str) -> float:
    return oe_core(*_arrays(records, model))


def auc_ipcw(records: Sequence[EvalRecord], model: str) -> float:
    return auc_core(*_arrays(records, model))


def brier_ipcw(records: Sequence[EvalRecord], model: str) -> float:
    return brier_core(*_arrays(records, model))


def log_score(records: Sequence[EvalRecord], model: str) -> float:
    return log_core(*_arrays(records, model))


def snb(records: Sequence[EvalRecord], model: str, threshold: float = SNB_THRESHOLD) -> float:
    """Standardized net benefit at a risk threshold; positive = p >= threshold."""
    y, p, w = _arrays(records, model)
    return snb_core(y, p, w, threshold)


def relative_improvement(score_model: float, score_reference: float) -> float:
    """Percent improvement of a score where smaller is better."""
    if score_reference == 0:
        raise ValueError("reference score is zero")
    return 100.0 * (score_reference - score_model) / score_reference


class _Fenwick:
    def __init__(self, n: int) -> None:
        self.tree = np.zeros(n + 1)

    def add(self, i: int, v: float) -> None:
        i += 1
        while i < len(self.tree):
            self.tree[i] += v
            i += i & (-i)

    def prefix(self, i: int) -> float:
        # sum of entries with index < i
        s = 0.0
        while i > 0:
            s += self.tree[i]
            i -= i & (-i)
        return float(s)


def uno_c(
    records: Sequence[CohortRecord],
    scores: np.ndarray,
    G: CensoringModel,
    tau: float = 10.0,
) -> float:
    """IPCW concordance over pairs (i, j) with T_i < T_j, T_i <= tau, case i.

    Pair weight is G(T_i-)^-2; score ties count half.  Record j only needs
    follow-up beyond T_i, whatever its own outcome.  Records are processed
    by decreasing follow-up with a Fenwick tree over score ranks, so the
    total cost is n log n.
    """
    times = np.asarray([r.follow_up_years for r in records], dtype=float)
    scores = np.asarray(scores, dtype=float)
    is_case = np.asarray([r.event == "breast" for r in records])
    usable_i = is_case & (times <= tau)
    if not np.any(usable_i):
        raise ValueError("no usable case in the horizon")

    uniq_scores = np.unique(scores)
    ranks = np.searchsorted(uniq_scores, scores)
    bit = _Fenwick(len(uniq_scores))
    inserted = 0

    order = np.argsort(-times, kind="stable")
    num = 0.0
    den = 0.0
    i = 0
    n = len(order)
    while i < n:
        j = i
        t = times[order[i]]
        while j < n and times[order[j]] == t:
            j += 1
        for k in order[i:j]:
            if usable_i[k] and inserted > 0:
                w = G.weight_at_left(records[k].stratum, times[k]) ** 2
                less = bit.prefix(int(ranks[k]))
                eq = bit.prefix(int(ranks[k]) + 1) - less
                num += w * (less + 0.5 * eq)
                den += w * inserted
        for k in order[i:j]:
            bit.add(int(ranks[k]), 1.0)
            inserted += 1
        i = j
    if den <= 0:
        raise ValueError("no usable pairs")
    return num / den


def calibration_deciles(records: Sequence[EvalRecord], model: str) -> list[dict]:
    """Equal-weighted-count bins by prediction with per-bin O/E and CI.

    Ties are kept together (stable sort), so constant predictions collapse
    into fewer bins; the CI is log-normal on O/E with SE = sqrt(sum w^2 y)/O.
    """
    rows = [r for r in records if r.weight > 0]
    if len(rows) < 10:
        raise ValueError("need at least 10 weighted records")
    y = np.asarray([r.y for r in rows], dtype=float)
    p = np.asarray([r.predictions[model] for r in rows], dtype=float)
    w = np.asarray([r.weight for r in rows], dtype=float)
    order = np.argsort(p, kind="stable")
    y, p, w = y[order], p[order], w[order]
    cum = np.cumsum(w)
    total = cum[-1]
    bins: list[dict] = []
    start = 0
    for b in range(10):
        limit = total * (b + 1) / 10.0
        end = int(np.searchsorted(cum, limit, side="left")) + 1
        end = min(max(end, start + 1), len(y))
        # keep tied predictions in one bin
        while end < len(y) and p[end - 1] == p[end]:
            end += 1
        if start >= len(y):
            break
        yy, pp, ww = y[start:end], p[start:end], w[start:end]
        observed = float(np.sum(ww * yy))
        expected = float(np.sum(ww * pp))
        oe = observed / expected if expected > 0 else math.nan
        if observed > 0:
            se_log = math.sqrt(float(np.sum(ww**2 * yy))) / observed
            ci = (oe * math.exp(-1.96 * se_log), oe * math.exp(1.96 * se_log))
        else:
            ci = (0.0, math.nan)
        bins.append(
            {
                "bin": len(bins) + 1,
                "n": int(len(yy)),
                "mean_prediction": float(np.sum(ww * pp) / np.sum(ww)),
                "observed": observed,
                "expected": expected,
                "oe": oe,
                "ci_low": ci[0],
                "ci_high": ci[1],
            }
        )
        start = end
        if start >= len(y):
            break
    return bins


# ---------------------------------------------------------------------------
# bootstrap comparison

METRIC_DIRECTIONS = {
    "oe": "closest_to_one",
    "auc": "higher",
    "brier": "lower",
    "log_score": "lower",
    "snb": "higher",
}


def _better(name: str, a: float, b: float) -> bool:
    direction = METRIC_DIRECTIONS[name]
    if direction == "closest_to_one":
        return abs(a - 1.0) < abs(b - 1.0)
    if direction == "higher":
        return a > b
    return a < b


def _km_left_weights(
    times: np.ndarray, censored: np.ndarray, queries: np.ndarray
) -> np.ndarray:
    """1/G(q-) for each query under the reverse Kaplan-Meier curve.

    Risk sets at a jump exclude the non-censoring events tied at that time,
    matching km_censoring.
    """
    if np.any(times <= 0):
        raise FitError("follow-up times must be positive")
    uniq, inv = np.unique(times, return_inverse=True)
    d_cens = np.bincount(inv, weights=censored.astype(float), minlength=len(uniq))
    d_evt = np.bincount(inv, weights=(~censored).astype(float), minlength=len(uniq))
    total = float(len(times))
    at_risk = total - np.concatenate(([0.0], np.cumsum(d_cens + d_evt)[:-1]))
    n_eff = at_risk - d_evt
    factors = np.ones(len(uniq))
    mask = d_cens > 0
    if np.any(mask & (n_eff <= 0)):
        raise FitError("censoring survival reaches zero inside the data")
    factors[mask] = 1.0 - d_cens[mask] / n_eff[mask]
    G = np.cumprod(factors)
    idx = np.searchsorted(uniq, queries, side="left") - 1
    out = np.where(idx >= 0, G[np.clip(idx, 0, len(G) - 1)], 1.0)
    if np.any(out <= 0):
        raise FitError("a metric weight divides by a zero censoring probability")
    return 1.0 / out


def _replicate_weights(
    times: np.ndarray,
    events: np.ndarray,
    strata_codes: np.ndarray,
    tau: float,
) -> tuple[np.ndarray, np.ndarray]:
    """(y, w) arrays under the documented weighting convention."""
    n = len(times)
    y = ((events == EVENT_CODES["breast"]) & (times <= tau)).astype(float)
    known_free = (
        ((events == EVENT_CODES["breast"]) & (times > tau))
        | (events == EVENT_CODES["death"])
        | ((events == EVENT_CODES["censored"]) & (times >= tau))
    )
    w = np.zeros(n)
    for code in np.unique(strata_codes):
        sel = strata_codes == code
        censored = events[sel] == EVENT_CODES["censored"]
        queries = np.where(y[sel] > 0, times[sel], tau)
        wts = _km_left_weights(times[sel], censored, queries)
        w[sel] = np.where(y[sel] > 0, wts, np.where(known_free[sel], wts, 0.0))
    return y, w


def _metric_row(
    name: str, y: np.ndarray, p: np.ndarray, w: np.ndarray, threshold: float
) -> float:
    if name == "oe":
        return oe_core(y, p, w)
    if name == "auc":
        return auc_core(y, p, w)
    if name == "brier":
        return brier_core(y, p, w)
    if name == "log_score":
        return log_core(y, p, w)
    if name == "snb":
        return snb_core(y, p, w, threshold)
    raise ValueError(f"unknown metric {name!r}")


@dataclass(frozen=True)
class MetricReport:
    models: tuple[str, ...]
    metrics: tuple[str, ...]
    point: dict
    ci: dict
    wins: dict
    ties: dict
    B: int
    seed: int
    tau: float
    relative: Optional[dict] = None

    def to_json_dict(self) -> dict:
        doc = {
            "schema_version": 1,
            "models": list(self.models),
            "metrics": list(self.metrics),
            "tau": self.tau,
            "bootstrap": {"B": self.B, "seed": self.seed},
            "point": self.point,
            "ci": self.ci,
            "win_proportions": self.wins,
            "ties": self.ties,
        }
        if self.relative is not None:
            doc["relative_improvement"] = self.relative
        return doc


def bootstrap_compare(
    records: Sequence[CohortRecord],
    predictions: dict[str, np.ndarray],
    tau: float,
    metrics: Sequence[str] = ("oe", "auc", "brier", "log_score", "snb"),
    B: int = 1000,
    seed: int = 0,
    threshold: float = SNB_THRESHOLD,
    reference: Optional[str] = None,
) -> MetricReport:
    """Percentile bootstrap CIs and pairwise win proportions.

    Replicates resample probands with replacement, re-fit the censoring
    curve (within each stratum), and recompute every metric for every model
    on the same resample, so comparisons are paired.  Wins are strict in
    each metric's preferred direction; O/E wins by being closer to 1.
    Replicate b draws from SeedSequence(seed, spawn_key=(b,)), so results do
    not depend on scheduling.  With a reference model, percent improvements
    in brier and log score are reported against it.
    """
    records = list(records)
    models = tuple(predictions.keys())
    metrics = tuple(metrics)
    for name in metrics:
        if name not in METRIC_DIRECTIONS:
            raise ValueError(f"unknown metric {name!r}")
    if reference is not None and reference not in models:
        raise ValueError(f"reference model {reference!r} has no predictions")
    n = len(records)
    times = np.asarray([r.follow_up_years for r in records], dtype=float)
    events = np.asarray([EVENT_CODES[r.event] for r in records], dtype=np.int64)
    strata_labels = sorted({r.stratum for r in records}, key=lambda s: (s is not None, s))
    strata_codes = np.asarray(
        [strata_labels.index(r.stratum) for r in records], dtype=np.int64
    )
    P = np.column_stack([np.asarray(predictions[m], dtype=float) for m in models])

    def evaluate(idx: np.ndarray) -> np.ndarray:
        y, w = _replicate_weights(times[idx], events[idx], strata_codes[idx], tau)
        out = np.empty((len(models), len(metrics)))
        for mi in range(len(models)):
            p = P[idx, mi]
            for ki, name in enumerate(metrics):
                out[mi, ki] = _metric_row(name, y, p, w, threshold)
        return out

    full = evaluate(np.arange(n))
    reps = np.empty((B, len(models), len(metrics)))
    for b in range(B):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(b,)))
        reps[b] = evaluate(rng.integers(0, n, size=n))

    point = {
        name: {m: float(full[mi, ki]) for mi, m in enumerate(models)}
        for ki, name in enumerate(metrics)
    }
    ci = {
        name: {
            m: [
                float(np.percentile(reps[:, mi, ki], 2.5)),
                float(np.percentile(reps[:, mi, ki], 97.5)),
            ]
            for mi, m in enumerate(models)
        }
        for ki, name in enumerate(metrics)
    }
    wins: dict[str, dict[str, float]] = {}
    ties: dict[str, dict[str, int]] = {}
    for ki, name in enumerate(metrics):
        wins[name] = {}
        ties[name] = {}
        for ai, a in enumerate(models):
            for bi, b_model in enumerate(models):
                if a == b_model:
                    continue
                va = reps[:, ai, ki]
                vb = reps[:, bi, ki]
                won = int(sum(1 for k in range(B) if _better(name, va[k], vb[k])))
                wins[name][f"{a}>{b_model}"] = won / B
                ties[name][f"{a}>{b_model}"] = int(np.sum(va == vb))

    relative = None
    if reference is not None:
        relative = {}
        ri = models.index(reference)
        for score_name in ("brier", "log_score"):
            if score_name not in metrics:
                continue
            ki = metrics.index(score_name)
            relative[score_name] = {}
            for mi, m in enumerate(models):
                if m == reference:
                    continue
                point_rel = relative_improvement(full[mi, ki], full[ri, ki])
                rel_reps = 100.0 * (reps[:, ri, ki] - reps[:, mi, ki]) / reps[:, ri, ki]
                relative[score_name][m] = {
                    "percent": float(point_rel),
                    "ci": [
                        float(np.percentile(rel_reps, 2.5)),
                        float(np.percentile(rel_reps, 97.5)),
                    ],
                }

    return MetricReport(
        models=models,
        metrics=metrics,
        point=point,
        ci=ci,
        wins=wins,
        ties=ties,
        B=B,
        seed=seed,
        tau=tau,
        relative=relative,
    )
