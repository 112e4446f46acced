"""Censoring-aware evaluation metrics against hand fixtures and slow oracles.

The hand fixture is built so every weight and prediction is a dyadic
rational: all sums and products inside the metric cores are then exact in
floating point and the final division is a single correctly rounded
operation, so comparisons against Fraction-derived values hold bit for bit.
"""

import math
from fractions import Fraction

import numpy as np
import pytest

from oracles import km_censoring_curve, km_left, uno_c_slow
from riskfusion.cohort import CohortRecord
from riskfusion.ensemble import km_censoring
from riskfusion.errors import FitError
from riskfusion.metrics import (
    EVENT_CODES,
    METRIC_DIRECTIONS,
    SNB_THRESHOLD,
    MetricReport,
    _km_left_weights,
    _replicate_weights,
    auc_ipcw,
    bootstrap_compare,
    brier_ipcw,
    calibration_deciles,
    log_score,
    make_eval_records,
    oe_ratio,
    relative_improvement,
    snb,
    uno_c,
)

from conftest import baseline_factors, single_proband

PEDIGREE = single_proband(age=45)
FACTORS = baseline_factors()


def record(ident, fu, event, stratum=None):
    return CohortRecord(
        id=ident,
        pedigree=PEDIGREE,
        risk_factors=FACTORS,
        baseline_age=45,
        follow_up_years=fu,
        event=event,
        stratum=stratum,
    )


# --- the dyadic censored fixture, tau = 4 ---
#
# follow-up / event / prediction:
#   A 1.0 breast    0.5     case, weight 1/G(1-) = 1
#   F 1.5 death     0.25    known non-case, weight 1/G(4-) = 2
#   C 2.0 censored  0.9     censored before tau, weight 0
#   D 2.0 censored  0.8     censored before tau, weight 0
#   B 3.0 breast    0.25    case, weight 1/G(3-) = 2
#   E 5.0 censored  0.125   event-free at tau, weight 1/G(4-) = 2
#
# The only censoring jump below tau is at t=2 where 2 of 4 at risk leave,
# so G = 1/2 on (2, 4].

FIXTURE_TAU = 4.0
FIXTURE_ROWS = [
    (1.0, "breast", 0.5),
    (1.5, "death", 0.25),
    (2.0, "censored", 0.9),
    (2.0, "censored", 0.8),
    (3.0, "breast", 0.25),
    (5.0, "censored", 0.125),
]


def fixture_records():
    recs = [record(i, fu, ev) for i, (fu, ev, _) in enumerate(FIXTURE_ROWS)]
    preds = {"m": np.array([p for _, _, p in FIXTURE_ROWS])}
    G = km_censoring(recs)
    return recs, preds, G


def test_fixture_weights_are_the_documented_convention():
    recs, preds, G = fixture_records()
    ev = make_eval_records(recs, preds, FIXTURE_TAU, G)
    assert [r.y for r in ev] == [1, 0, 0, 0, 1, 0]
    assert [r.weight for r in ev] == [1.0, 2.0, 0.0, 0.0, 2.0, 2.0]


def test_oe_fixture_exact():
    recs, preds, G = fixture_records()
    ev = make_eval_records(recs, preds, FIXTURE_TAU, G)
    # O = 1 + 2 = 3;  E = 1(1/2) + 2(1/4) + 2(1/4) + 2(1/8) = 7/4
    assert oe_ratio(ev, "m") == float(Fraction(3, 1) / Fraction(7, 4))


def test_auc_fixture_exact():
    recs, preds, G = fixture_records()
    ev = make_eval_records(recs, preds, FIXTURE_TAU, G)
    # case mass: A=1 at 0.5, B=2 at 0.25; control mass: F=2 at 0.25, E=2 at 0.125
    # pairs: A beats both (1*2 + 1*2), B beats E (2*2), B ties F (half of 2*2)
    want = Fraction(2 + 2 + 4 + 2, 3 * 4)
    assert auc_ipcw(ev, "m") == float(want)


def test_brier_fixture_exact():
    recs, preds, G = fixture_records()
    ev = make_eval_records(recs, preds, FIXTURE_TAU, G)
    # sum w (p - y)^2 = 1(1/4) + 2(1/16) + 2(9/16) + 2(1/64) = 49/32, total w = 7
    want = Fraction(49, 32) / 7
    assert want == Fraction(7, 32)
    assert brier_ipcw(ev, "m") == float(want)  # a dyadic: exactly 0.21875


def test_log_score_fixture():
    recs, preds, G = fixture_records()
    ev = make_eval_records(recs, preds, FIXTURE_TAU, G)
    want = -(
        1.0 * math.log(0.5)         # case A at p = 1/2
        + 2.0 * math.log(1.0 - 0.25)  # non-case F at p = 1/4
        + 2.0 * math.log(0.25)        # case B at p = 1/4
        + 2.0 * math.log(1.0 - 0.125)  # non-case E at p = 1/8
    ) / 7.0
    assert log_score(ev, "m") == pytest.approx(want, abs=1e-15)


def test_snb_fixture_exact():
    recs, preds, G = fixture_records()
    ev = make_eval_records(recs, preds, FIXTURE_TAU, G)
    # threshold 1/2: only A positive -> TPR = 1/3, FPR = 0, so the odds term drops
    assert snb(ev, "m", threshold=0.5) == float(Fraction(1, 3))

    # threshold 1/4: A, B, F positive -> TPR = 1, FPR = 1/2; mirror the float path
    tpr, fpr = 1.0, 0.5
    prevalence = 3.0 / 7.0
    odds_pi = prevalence / (1.0 - prevalence)
    odds_t = 0.25 / (1.0 - 0.25)
    assert snb(ev, "m", threshold=0.25) == tpr - (odds_t / odds_pi) * fpr


def test_snb_default_threshold_is_published_value():
    assert SNB_THRESHOLD == 0.0167


def test_relative_improvement():
    assert relative_improvement(0.09, 0.10) == pytest.approx(10.0)
    assert relative_improvement(0.12, 0.10) == pytest.approx(-20.0)
    with pytest.raises(ValueError):
        relative_improvement(0.1, 0.0)


def test_metric_degenerate_inputs():
    recs, preds, G = fixture_records()
    ev = make_eval_records(recs, preds, FIXTURE_TAU, G)
    zero = [r for r in ev if r.weight == 0.0]
    with pytest.raises(ValueError):
        oe_ratio(zero, "m")
    cases_only = [r for r in ev if r.y == 1]
    with pytest.raises(ValueError):
        auc_ipcw(cases_only, "m")


# --- Uno's C ---


def test_uno_perfect_and_reversed():
    recs = [record(0, 1.0, "breast"), record(1, 2.0, "breast"), record(2, 3.0, "censored")]
    G = km_censoring(recs)
    assert uno_c(recs, np.array([0.9, 0.4, 0.1]), G, tau=10.0) == 1.0
    assert uno_c(recs, np.array([0.1, 0.4, 0.9]), G, tau=10.0) == 0.0
    assert uno_c(recs, np.array([0.3, 0.3, 0.3]), G, tau=10.0) == 0.5


def test_uno_horizon_excludes_late_cases():
    recs = [record(0, 1.0, "breast"), record(1, 6.0, "breast"), record(2, 7.0, "censored")]
    G = km_censoring(recs)
    # tau=5 leaves only the first case; both pairs concordant with its score
    assert uno_c(recs, np.array([0.9, 0.1, 0.5]), G, tau=5.0) == 1.0
    with pytest.raises(ValueError, match="no usable case"):
        uno_c(recs, np.array([0.9, 0.1, 0.5]), G, tau=0.5)


def random_cohort_rows(rng, n):
    times = np.round(rng.uniform(0.2, 9.0, size=n), 2)
    events = rng.choice(["breast", "death", "censored"], size=n, p=[0.25, 0.1, 0.65])
    return [record(i, float(times[i]), events[i]) for i in range(n)]


def test_uno_matches_quadratic_oracle():
    rng = np.random.default_rng(42)
    for trial in range(5):
        n = 250
        recs = random_cohort_rows(rng, n)
        # ties in scores included deliberately
        scores = np.round(rng.uniform(size=n), 2)
        G = km_censoring(recs)
        steps = km_censoring_curve(
            [r.follow_up_years for r in recs], [r.event == "censored" for r in recs]
        )
        g_left = np.array([km_left(steps, r.follow_up_years) for r in recs])
        want = uno_c_slow(
            np.array([r.follow_up_years for r in recs]),
            np.array([1 if r.event == "breast" else 0 for r in recs]),
            scores,
            g_left,
            tau=5.0,
        )
        got = uno_c(recs, scores, G, tau=5.0)
        assert got == pytest.approx(want, abs=1e-12)


def test_uno_permuted_scores_near_half():
    rng = np.random.default_rng(2025)
    n = 2000
    recs = random_cohort_rows(rng, n)
    G = km_censoring(recs)
    scores = rng.uniform(size=n)
    draws = []
    for _ in range(30):
        perm = rng.permutation(n)
        draws.append(uno_c(recs, scores[perm], G, tau=5.0))
    draws = np.array(draws)
    se = draws.std(ddof=1)
    assert abs(draws[0] - 0.5) < 3.5 * se
    assert abs(draws.mean() - 0.5) < 3.5 * se / math.sqrt(len(draws))


# --- calibration table ---


def test_calibration_deciles_structure():
    rng = np.random.default_rng(9)
    n = 400
    p = rng.uniform(0.01, 0.5, size=n)
    recs = [
        record(i, 6.0 if rng.uniform() > p[i] else 2.0,
               "censored" if rng.uniform() > p[i] else "breast")
        for i in range(n)
    ]
    preds = {"m": p}
    G = km_censoring(recs)
    ev = make_eval_records(recs, preds, 5.0, G)
    bins = calibration_deciles(ev, "m")
    assert len(bins) == 10
    assert [b["bin"] for b in bins] == list(range(1, 11))
    assert sum(b["n"] for b in bins) == sum(1 for r in ev if r.weight > 0)
    means = [b["mean_prediction"] for b in bins]
    assert means == sorted(means)
    for b in bins:
        if b["observed"] > 0:
            assert b["ci_low"] <= b["oe"] <= b["ci_high"]


def test_calibration_ties_collapse_bins():
    recs = [record(i, 6.0 if i % 5 else 2.0, "censored" if i % 5 else "breast") for i in range(50)]
    ev = make_eval_records(recs, {"m": np.full(50, 0.2)}, 5.0, km_censoring(recs))
    bins = calibration_deciles(ev, "m")
    assert len(bins) == 1
    assert bins[0]["n"] == 50


def test_calibration_needs_enough_rows():
    recs = [record(i, 6.0, "censored") for i in range(5)]
    ev = make_eval_records(recs, {"m": np.full(5, 0.2)}, 5.0, km_censoring(recs))
    with pytest.raises(ValueError, match="at least 10"):
        calibration_deciles(ev, "m")


# --- vectorized weight path against the record path and the oracle ---


def test_km_left_weights_match_oracle():
    rng = np.random.default_rng(31)
    times = np.round(rng.uniform(0.5, 8.0, size=120), 1)
    censored = rng.uniform(size=120) < 0.5
    queries = np.array([0.3, 1.0, 2.5, 4.0, 7.9, 8.0])
    steps = km_censoring_curve(times, censored)
    want = np.array([1.0 / km_left(steps, q) for q in queries])
    got = _km_left_weights(times, censored, queries)
    np.testing.assert_allclose(got, want, rtol=0, atol=1e-14)


def test_replicate_weights_match_record_path():
    rng = np.random.default_rng(77)
    recs = []
    for i in range(300):
        stratum = "strong" if rng.uniform() < 0.4 else "less"
        fu = float(np.round(rng.uniform(0.2, 9.0), 2))
        event = str(rng.choice(["breast", "death", "censored"], p=[0.2, 0.1, 0.7]))
        recs.append(record(i, fu, event, stratum))
    tau = 5.0
    G = km_censoring(recs, strata=lambda r: r.stratum)
    ev = make_eval_records(recs, {"m": np.zeros(len(recs))}, tau, G)

    times = np.array([r.follow_up_years for r in recs])
    events = np.array([EVENT_CODES[r.event] for r in recs])
    codes = np.array([0 if r.stratum == "strong" else 1 for r in recs])
    y, w = _replicate_weights(times, events, codes, tau)

    np.testing.assert_array_equal(y, [r.y for r in ev])
    np.testing.assert_allclose(w, [r.weight for r in ev], rtol=0, atol=1e-12)


# --- bootstrap comparison ---


def bootstrap_inputs(n=400, seed=8):
    rng = np.random.default_rng(seed)
    risk = rng.uniform(0.05, 0.6, size=n)
    is_case = rng.uniform(size=n) < risk
    fu = np.where(is_case, rng.uniform(0.5, 4.5, size=n), rng.uniform(5.0, 9.0, size=n))
    # sprinkle early censorings so G is not flat
    early = (~is_case) & (rng.uniform(size=n) < 0.25)
    fu = np.where(early, rng.uniform(0.5, 4.5, size=n), fu)
    recs = [
        record(
            i,
            float(np.round(fu[i], 2)),
            "breast" if is_case[i] else "censored",
        )
        for i in range(n)
    ]
    preds = {"good": risk, "noise": np.full(n, float(risk.mean()))}
    return recs, preds


def test_bootstrap_compare_report():
    recs, preds = bootstrap_inputs()
    report = bootstrap_compare(
        recs, preds, tau=5.0, metrics=("oe", "auc", "brier"), B=40, seed=3,
        reference="noise",
    )
    assert isinstance(report, MetricReport)
    assert report.models == ("good", "noise")
    assert report.B == 40 and report.seed == 3 and report.tau == 5.0

    doc = report.to_json_dict()
    assert doc["schema_version"] == 1
    assert set(doc["point"]) == {"oe", "auc", "brier"}
    for name in ("oe", "auc", "brier"):
        lo, hi = doc["ci"][name]["good"]
        assert lo <= doc["point"][name]["good"] <= hi
        wins_g = doc["win_proportions"][name]["good>noise"]
        wins_n = doc["win_proportions"][name]["noise>good"]
        ties = doc["ties"][name]["good|noise"] if "good|noise" in doc["ties"][name] else None
        assert 0.0 <= wins_g <= 1.0 and 0.0 <= wins_n <= 1.0
        if ties is not None:
            assert wins_g + wins_n + ties / report.B == pytest.approx(1.0)
    # informative predictions dominate the constant on discrimination
    assert doc["win_proportions"]["auc"]["good>noise"] > 0.9
    assert "relative_improvement" in doc
    rel = doc["relative_improvement"]["brier"]["good"]
    assert rel["percent"] == pytest.approx(
        relative_improvement(doc["point"]["brier"]["good"], doc["point"]["brier"]["noise"])
    )
    assert rel["ci"][0] <= rel["percent"] <= rel["ci"][1]


def test_bootstrap_compare_is_deterministic():
    recs, preds = bootstrap_inputs(n=200, seed=5)
    a = bootstrap_compare(recs, preds, tau=5.0, metrics=("oe", "auc"), B=25, seed=11)
    b = bootstrap_compare(recs, preds, tau=5.0, metrics=("oe", "auc"), B=25, seed=11)
    assert a.to_json_dict() == b.to_json_dict()
    c = bootstrap_compare(recs, preds, tau=5.0, metrics=("oe", "auc"), B=25, seed=12)
    assert c.ci != a.ci


def test_bootstrap_compare_input_checks():
    recs, preds = bootstrap_inputs(n=100)
    with pytest.raises(ValueError, match="unknown metric"):
        bootstrap_compare(recs, preds, tau=5.0, metrics=("f1",), B=5)
    with pytest.raises(ValueError, match="no predictions"):
        bootstrap_compare(recs, preds, tau=5.0, B=5, reference="mystery")


def test_metric_directions_catalog():
    assert METRIC_DIRECTIONS == {
        "oe": "closest_to_one",
        "auc": "higher",
        "brier": "lower",
        "log_score": "lower",
        "snb": "higher",
    }
