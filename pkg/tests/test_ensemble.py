"""Censoring model, training-frame assembly, and the stacked logistic fits."""

import numpy as np
import pytest

from oracles import irls_logistic, km_censoring_curve, km_left
from riskfusion.cohort import CohortRecord
from riskfusion.ensemble import (
    FittedEnsemble,
    KIND_LABELS,
    LABEL_KINDS,
    StepFunction,
    apply_transform,
    build_training_frame,
    default_tau_grid,
    fit_ensemble_fixed,
    fit_ensemble_time,
    importance_weights,
    km_censoring,
    predict_ensemble,
)
from riskfusion.errors import FitError

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


def records_from(pairs, stratum=None):
    return [record(i, fu, ev, stratum) for i, (fu, ev) in enumerate(pairs)]


# --- censoring model ---

KM_ROWS = [
    (2.0, "breast"),
    (3.0, "censored"),
    (3.0, "breast"),
    (4.0, "censored"),
    (6.0, "death"),
    (7.0, "censored"),
    (9.0, "breast"),
]


def test_km_matches_hand_fixture():
    G = km_censoring(records_from(KM_ROWS)).curve(None)
    # at t=3: risk set 6, the tied breast event leaves first, so 1 of 5 censored
    g3 = 1.0 * (1.0 - 1.0 / 5.0)
    g4 = g3 * (1.0 - 1.0 / 4.0)
    g7 = g4 * (1.0 - 1.0 / 2.0)
    np.testing.assert_array_equal(G.times, [3.0, 4.0, 7.0])
    np.testing.assert_array_equal(G.values, [g3, g4, g7])


def test_km_matches_oracle():
    rows = KM_ROWS + [(5.5, "censored"), (5.5, "censored"), (1.0, "breast")]
    G = km_censoring(records_from(rows)).curve(None)
    steps = km_censoring_curve([fu for fu, _ in rows], [ev == "censored" for _, ev in rows])
    np.testing.assert_array_equal(G.times, [t for t, _ in steps])
    np.testing.assert_array_equal(G.values, [g for _, g in steps])
    for t in (0.5, 3.0, 3.5, 4.0, 5.5, 8.0, 100.0):
        assert G.at_left(t) == km_left(steps, t)


def test_step_function_conventions():
    G = StepFunction(times=np.array([3.0, 4.0]), values=np.array([0.8, 0.6]))
    assert G.at(2.9) == 1.0
    assert G.at(3.0) == 0.8
    assert G.at_left(3.0) == 1.0
    assert G.at(3.5) == 0.8
    assert G.at_left(4.0) == 0.8
    assert G.at(4.0) == 0.6
    assert G.at_left(120.0) == 0.6


def test_weight_is_reciprocal_left_limit():
    model = km_censoring(records_from(KM_ROWS))
    g3 = 1.0 - 1.0 / 5.0
    assert model.weight_at_left(None, 4.0) == 1.0 / g3
    assert model.weight_at_left(None, 2.0) == 1.0


def test_weight_undefined_after_curve_hits_zero():
    # the last subject is censored, so G drops to 0 there
    model = km_censoring(records_from([(5.0, "breast"), (6.0, "censored")]))
    assert model.curve(None).at(6.0) == 0.0
    with pytest.raises(FitError, match="censoring survival is 0"):
        model.weight_at_left(None, 7.0)


def test_km_stratified():
    a = records_from([(2.0, "censored"), (4.0, "breast")], stratum="strong")
    b = records_from([(3.0, "censored"), (5.0, "breast")], stratum="less")
    model = km_censoring(a + b, strata=lambda r: r.stratum)
    assert model.curve("strong").times.tolist() == [2.0]
    assert model.curve("less").times.tolist() == [3.0]
    with pytest.raises(FitError, match="no censoring curve"):
        model.curve("missing")


def test_single_unstratified_curve_serves_any_stratum():
    model = km_censoring(records_from(KM_ROWS))
    assert model.curve("anything").times.tolist() == [3.0, 4.0, 7.0]


def test_km_rejects_nonpositive_followup():
    with pytest.raises(FitError, match="follow-up times must be positive"):
        km_censoring(records_from([(0.0, "censored")]))


def test_km_rejects_empty_cohort():
    with pytest.raises(FitError, match="empty cohort"):
        km_censoring([])


# --- training frame ---


def frame_records():
    return records_from(
        [
            (1.5, "breast"),    # case by tau >= 2
            (6.0, "censored"),  # event-free at every tau <= 6
            (2.5, "censored"),  # resolvable only at tau <= 2
            (1.0, "death"),     # known non-case at every tau
            (4.5, "breast"),    # event-free at tau = 2, case at tau = 5
        ]
    )


def test_training_frame_row_semantics():
    recs = frame_records()
    G = km_censoring(recs)
    tau_grid = (2, 5)
    p1 = np.full((5, 2), 0.04)
    p2 = np.full((5, 2), 0.09)
    frame = build_training_frame(recs, tau_grid, G, p1, p2, transform="sqrt")

    # every record resolves at tau=2; record 2's censoring drops it at tau=5
    assert frame.proband.tolist() == [0, 0, 1, 1, 2, 3, 3, 4, 4]
    assert frame.tau.tolist() == [2.0, 5.0, 2.0, 5.0, 2.0, 2.0, 5.0, 2.0, 5.0]
    assert frame.transform == "sqrt"
    assert frame.tau_grid == (2, 5)
    np.testing.assert_array_equal(frame.p1, np.full(9, 0.2))
    np.testing.assert_array_equal(frame.p2, np.full(9, 0.3))

    # case weights are 1/G at the event time's left limit
    g_case0 = G.curve(None).at_left(1.5)
    g_case4 = G.curve(None).at_left(4.5)
    assert frame.y.tolist() == [
        1.0 / g_case0,
        1.0 / g_case0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        1.0 / g_case4,
    ]
    np.testing.assert_array_equal(frame.w, np.ones(9))


def test_training_frame_extra_weights():
    recs = frame_records()
    G = km_censoring(recs)
    p = np.full((5, 1), 0.04)
    frame = build_training_frame(
        recs, (2,), G, p, p, extra_weights=np.array([2.0, 1.0, 0.5, 3.0, 1.5])
    )
    assert frame.w.tolist() == [2.0, 1.0, 0.5, 3.0, 1.5]


def test_training_frame_input_checks():
    recs = frame_records()
    G = km_censoring(recs)
    p = np.full((5, 2), 0.05)
    with pytest.raises(ValueError, match="strictly increasing"):
        build_training_frame(recs, (5, 2), G, p, p)
    with pytest.raises(ValueError, match="strictly increasing"):
        build_training_frame(recs, (2, 2, 5), G, p, p)
    with pytest.raises(ValueError, match="prediction matrices"):
        build_training_frame(recs, (2,), G, p, p)


def test_content_hash_tracks_rows():
    recs = frame_records()
    G = km_censoring(recs)
    p = np.full((5, 1), 0.04)
    f1 = build_training_frame(recs, (2,), G, p, p)
    f2 = build_training_frame(recs, (2,), G, p, p)
    f3 = build_training_frame(recs, (2,), G, p * 2, p)
    assert f1.content_hash() == f2.content_hash()
    assert f1.content_hash() != f3.content_hash()
    assert f1.content_hash().startswith("sha256:")


# --- fitting ---


def synthetic_binary_cohort(n=4000, seed=11, beta=(-2.0, 1.2, 0.8, 0.5)):
    """Uncensored design: every non-case is followed past tau, so G == 1."""
    rng = np.random.default_rng(seed)
    p1 = rng.uniform(0.01, 0.35, size=n)
    p2 = rng.uniform(0.01, 0.35, size=n)
    s1, s2 = np.sqrt(p1), np.sqrt(p2)
    z = beta[0] + beta[1] * s1 + beta[2] * s2 + beta[3] * s1 * s2
    y = rng.uniform(size=n) < 1.0 / (1.0 + np.exp(-z))
    recs = [
        record(i, 4.5 if y[i] else 5.0, "breast" if y[i] else "censored")
        for i in range(n)
    ]
    return recs, p1, p2, y


def test_uncensored_fit_matches_plain_logistic():
    recs, p1, p2, y = synthetic_binary_cohort()
    G = km_censoring(recs)
    # all cases happen strictly before the single censoring time, so weights are 1
    frame = build_training_frame(
        recs, (5,), G, p1.reshape(-1, 1), p2.reshape(-1, 1), transform="sqrt"
    )
    np.testing.assert_array_equal(np.sort(np.unique(frame.y)), [0.0, 1.0])

    fit = fit_ensemble_fixed(frame)
    s1, s2 = np.sqrt(p1), np.sqrt(p2)
    design = np.column_stack([np.ones_like(s1), s1, s2, s1 * s2])
    want = irls_logistic(design, y.astype(float))
    np.testing.assert_allclose(fit.coefficients, want, rtol=0, atol=1e-6)
    assert fit.kind == "fixed_horizon"
    assert fit.metadata["dropped_columns"] == []
    assert len(fit.metadata["robust_se"]) == 4
    assert fit.metadata["n_rows"] == len(frame)


def test_fixed_fit_rejects_multiple_taus():
    recs = frame_records()
    G = km_censoring(recs)
    p = np.full((5, 2), 0.05)
    frame = build_training_frame(recs, (2, 5), G, p, p)
    with pytest.raises(ValueError, match="single tau"):
        fit_ensemble_fixed(frame)


def test_time_varying_fit_and_predict():
    rng = np.random.default_rng(7)
    n = 3000
    p1 = rng.uniform(0.01, 0.3, size=n)
    p2 = rng.uniform(0.01, 0.3, size=n)
    # event times spread over 1..8 so each tau resolves a different case mix
    times = rng.uniform(0.5, 8.5, size=n)
    is_case = rng.uniform(size=n) < np.clip(p1 + p2, 0.02, 0.9)
    recs = [
        record(i, float(times[i]), "breast" if is_case[i] else "censored")
        for i in range(n)
    ]
    G = km_censoring(recs)
    grid = (1, 2, 3, 4, 5)
    frame = build_training_frame(
        recs, grid, G, np.tile(p1[:, None], (1, 5)), np.tile(p2[:, None], (1, 5))
    )
    fit = fit_ensemble_time(frame)
    assert fit.kind == "time_varying"
    assert len(fit.coefficients) == 8
    assert fit.tau_grid == grid

    with pytest.raises(ValueError, match="needs tau"):
        predict_ensemble(fit, 0.05, 0.05)
    with pytest.raises(ValueError, match="outside supported range"):
        predict_ensemble(fit, 0.05, 0.05, tau=9)
    out = predict_ensemble(fit, 0.05, 0.05, tau=3)
    assert out.shape == (1,)
    assert 0.0 < out[0] < 1.0


def test_collinear_column_is_dropped_not_fatal():
    recs, p1, _, _ = synthetic_binary_cohort(n=1500, seed=3)
    G = km_censoring(recs)
    frame = build_training_frame(recs, (5,), G, p1.reshape(-1, 1), p1.reshape(-1, 1))
    fit = fit_ensemble_fixed(frame)
    dropped = fit.metadata["dropped_columns"]
    assert dropped
    for j in dropped:
        assert fit.coefficients[j] == 0.0


def test_fit_error_paths():
    recs = frame_records()
    G = km_censoring(recs)
    empty = build_training_frame(recs[1:2], (2,), G, [[0.1]], [[0.1]])
    # a lone event-free row has constant y
    with pytest.raises(FitError, match="constant"):
        fit_ensemble_fixed(empty)

    none = build_training_frame(recs[2:3], (5,), G, [[0.1]], [[0.1]])
    with pytest.raises(FitError, match="empty training frame"):
        fit_ensemble_fixed(none)


def test_separated_data_raises_fit_error():
    n = 400
    rng = np.random.default_rng(5)
    p1 = rng.uniform(0.01, 0.5, size=n)
    p2 = rng.uniform(0.01, 0.5, size=n)
    y = p1 > 0.2
    recs = [
        record(i, 4.5 if y[i] else 5.0, "breast" if y[i] else "censored")
        for i in range(n)
    ]
    G = km_censoring(recs)
    frame = build_training_frame(recs, (5,), G, p1.reshape(-1, 1), p2.reshape(-1, 1))
    with pytest.raises(FitError):
        fit_ensemble_fixed(frame)


# --- prediction fixtures ---

REPORTED_FIXED = (2.55, 0.86, 1.21, 0.11)
REPORTED_TIME = (-10.28, 43.11, 38.30, 0.35, -257.23, -3.21, -2.42, 22.98)


def test_reported_fixed_coefficients_reproduce_logit():
    model = FittedEnsemble(
        kind="fixed_horizon", coefficients=REPORTED_FIXED, transform="sqrt", tau_grid=(5,)
    )
    z = 2.55 + 0.86 * 0.2 + 1.21 * 0.2 + 0.11 * (0.2 * 0.2)
    want = 1.0 / (1.0 + np.exp(-z))
    got = predict_ensemble(model, 0.04, 0.04)
    assert got.shape == (1,)
    assert got[0] == pytest.approx(want, abs=1e-12)


def test_reported_time_coefficients_reproduce_logit():
    model = FittedEnsemble(
        kind="time_varying", coefficients=REPORTED_TIME, transform="sqrt", tau_grid=()
    )
    b = REPORTED_TIME
    tau = 0.01
    z = b[0] + b[1] * 0.2 + b[2] * 0.2 + b[3] * 0.04 + tau * (
        b[4] + b[5] * 0.2 + b[6] * 0.2 + b[7] * 0.04
    )
    want = 1.0 / (1.0 + np.exp(-z))
    assert predict_ensemble(model, 0.04, 0.04, tau=tau)[0] == pytest.approx(want, abs=1e-12)


def test_zero_coefficients_predict_half_exactly():
    for kind, n in (("fixed_horizon", 4), ("time_varying", 8)):
        model = FittedEnsemble(
            kind=kind, coefficients=(0.0,) * n, transform="sqrt", tau_grid=(1, 5)
        )
        got = predict_ensemble(model, 0.123, 0.456, tau=2)
        assert got[0] == 0.5

    batch = predict_ensemble(
        FittedEnsemble("fixed_horizon", (0.0,) * 4, "none", (5,)),
        np.array([0.1, 0.2, 0.9]),
        np.array([0.3, 0.4, 0.5]),
    )
    np.testing.assert_array_equal(batch, [0.5, 0.5, 0.5])


def test_transform_handling():
    np.testing.assert_array_equal(apply_transform(np.array([0.04, 0.25]), "sqrt"), [0.2, 0.5])
    np.testing.assert_array_equal(apply_transform(np.array([0.04, 0.25]), "none"), [0.04, 0.25])
    with pytest.raises(ValueError, match="unknown transform"):
        apply_transform(np.array([0.1]), "logit")

    fixed = FittedEnsemble("fixed_horizon", (0.0, 1.0, 0.0, 0.0), "none", (5,))
    raw = predict_ensemble(fixed, 0.25, 0.9)
    sqrt_model = FittedEnsemble("fixed_horizon", (0.0, 1.0, 0.0, 0.0), "sqrt", (5,))
    assert predict_ensemble(sqrt_model, 0.25, 0.9)[0] > raw[0]


# --- persistence ---


def test_save_load_round_trip(tmp_path):
    model = FittedEnsemble(
        kind="time_varying",
        coefficients=REPORTED_TIME,
        transform="sqrt",
        tau_grid=(1, 2, 3, 4, 5, 6, 7, 8),
        metadata={"n_rows": 123},
    )
    path = tmp_path / "lr2.json"
    model.save(str(path))
    loaded = FittedEnsemble.load(str(path))
    assert loaded == model
    assert loaded.to_json_dict()["schema_version"] == 1


@pytest.mark.parametrize(
    "patch, match",
    [
        ({"kind": "mystery"}, "unknown ensemble kind"),
        ({"coefficients": [1.0, 2.0]}, "needs 4 coefficients"),
        ({"transform": "cube"}, "unknown transform"),
    ],
)
def test_load_validation(patch, match):
    doc = {
        "kind": "fixed_horizon",
        "coefficients": [0.1, 0.2, 0.3, 0.4],
        "transform": "sqrt",
        "tau_grid": [5],
    }
    doc.update(patch)
    with pytest.raises(ValueError, match=match):
        FittedEnsemble.from_json_dict(doc)


def test_kind_labels():
    assert KIND_LABELS == {"fixed_horizon": "lr1", "time_varying": "lr2"}
    assert LABEL_KINDS["lr1"] == "fixed_horizon"


# --- helpers ---


def test_default_tau_grid():
    recs = records_from([(7.3, "breast"), (9.9, "censored"), (2.0, "breast")])
    assert default_tau_grid(recs) == (1, 2, 3, 4, 5, 6, 7)
    assert default_tau_grid(records_from([(0.4, "breast")])) == (1,)
    with pytest.raises(FitError, match="no breast events"):
        default_tau_grid(records_from([(5.0, "censored")]))


def test_importance_weights_track_density_shift():
    rng = np.random.default_rng(0)
    train = rng.normal(0.0, 1.0, size=(500, 1))
    target = rng.normal(1.0, 1.0, size=(500, 1))
    w = importance_weights(train, target, seed=1)
    assert w.shape == (500,)
    assert np.all(w >= 0)
    assert w.mean() == pytest.approx(1.0, abs=1e-12)
    # ratio should rise with the feature; check by rank correlation sign
    order = np.argsort(train[:, 0])
    low, high = w[order[:150]].mean(), w[order[-150:]].mean()
    assert high > 2 * low


def test_importance_weights_constant_features():
    train = np.zeros((40, 2))
    target = np.zeros((25, 2))
    np.testing.assert_array_equal(importance_weights(train, target), np.ones(40))
