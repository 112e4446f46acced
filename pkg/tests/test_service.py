"""HTTP surface: scoring, validation payloads, and what-if deltas."""

import pytest
from fastapi.testclient import TestClient

from riskfusion.ensemble import FittedEnsemble
from riskfusion.io import float_str
from riskfusion.pedigree import parse_pedigree, parse_risk_factors
from riskfusion.predict import score_model
from riskfusion.service import build_app


def member(ident, relation, sex, age, **kw):
    doc = {
        "id": ident,
        "relation": relation,
        "sex": sex,
        "current_age_or_death_age": age,
        "alive": True,
    }
    doc.update(kw)
    return doc


def base_request(**overrides):
    doc = {
        "pedigree": {
            "schema_version": 1,
            "members": [
                member(1, "proband", "female", 45),
                member(2, "sister", "female", 48, breast_cancer=40),
            ],
        },
        "risk_factors": {"age_at_menarche": 13, "num_biopsies": 1},
        "tau": [5],
    }
    doc.update(overrides)
    return doc


@pytest.fixture(scope="module")
def client(params):
    lr1 = FittedEnsemble("fixed_horizon", (2.55, 0.86, 1.21, 0.11), "sqrt", (5,))
    return TestClient(build_app(params, {"lr1": lr1}))


@pytest.fixture(scope="module")
def bare_client(params):
    return TestClient(build_app(params))


def test_health(client, params):
    doc = client.get("/health").json()
    assert doc["status"] == "ok"
    assert doc["backend"] in ("compiled", "pure")
    assert doc["parameters"] == params.label


def test_models_listing(client, bare_client):
    doc = bare_client.get("/models").json()
    assert [m["name"] for m in doc["models"]] == ["brcapro", "bcrat", "combined_m"]
    doc = client.get("/models").json()
    lr1 = next(m for m in doc["models"] if m["name"] == "lr1")
    assert lr1["kind"] == "fixed_horizon"
    assert lr1["tau_range"] == [5, 5]
    assert lr1["transform"] == "sqrt"


def test_score_happy_path(client, params):
    body = base_request()
    resp = client.post("/score", json=body)
    assert resp.status_code == 200
    doc = resp.json()
    assert doc["schema_version"] == 1
    assert doc["tau"] == [5]
    assert set(doc["models"]) == {"brcapro", "bcrat", "combined_m", "lr1"}
    ped = parse_pedigree(body["pedigree"])
    X = parse_risk_factors(body["risk_factors"], ped)
    for name in ("brcapro", "bcrat", "combined_m"):
        entry = doc["models"][name]
        assert entry["eligible"] is True
        want = score_model(name, ped, X, 5, params)
        assert entry["risks"]["5"] == float_str(want)
    cp = doc["carrier_probabilities"]
    assert set(cp) == {"none", "brca1_only", "brca2_only", "both", "any"}
    assert float(cp["none"]) + float(cp["any"]) == pytest.approx(1.0, abs=1e-12)


def test_score_multiple_horizons(client):
    doc = client.post("/score", json=base_request(tau=[5, 10], models=["brcapro"])).json()
    assert set(doc["models"]) == {"brcapro"}
    assert set(doc["models"]["brcapro"]["risks"]) == {"5", "10"}
    r5 = float(doc["models"]["brcapro"]["risks"]["5"])
    r10 = float(doc["models"]["brcapro"]["risks"]["10"])
    assert 0.0 < r5 < r10 < 1.0


def test_score_scalar_tau_accepted(client):
    doc = client.post("/score", json=base_request(tau=5, models=["brcapro"])).json()
    assert doc["tau"] == [5]


def test_score_partial_eligibility(client):
    body = base_request()
    body["pedigree"]["members"][0]["genetic_test"] = "BRCA1+"
    resp = client.post("/score", json=body)
    assert resp.status_code == 200
    doc = resp.json()
    assert doc["models"]["brcapro"]["eligible"] is True
    entry = doc["models"]["bcrat"]
    assert entry["eligible"] is False
    assert "BRCA1/2" in entry["reason"]
    assert entry["status"] == 422
    assert doc["models"]["lr1"]["eligible"] is False


def test_score_nothing_applicable(client):
    body = base_request(models=["bcrat"])
    body["pedigree"]["members"][0]["current_age_or_death_age"] = 19
    resp = client.post("/score", json=body)
    assert resp.status_code == 422
    doc = resp.json()
    assert doc["error"] == "ineligible"
    assert doc["models"]["bcrat"]["eligible"] is False


def test_score_validation_failure(client):
    body = base_request()
    del body["pedigree"]["members"][0]["alive"]
    body["pedigree"]["members"][1]["sex"] = "male"
    resp = client.post("/score", json=body)
    assert resp.status_code == 400
    doc = resp.json()
    assert doc["error"] == "validation"
    assert len(doc["diagnostics"]) == 2
    for diag in doc["diagnostics"]:
        assert {"field", "message", "member_id"} <= set(diag)


def test_score_rejects_malformed_json(client):
    resp = client.post(
        "/score", content=b"{not json", headers={"content-type": "application/json"}
    )
    assert resp.status_code == 400
    assert resp.json()["diagnostics"][0]["field"] == "$"


def test_score_rejects_non_object_body(client):
    resp = client.post("/score", json=[1, 2])
    assert resp.status_code == 400


@pytest.mark.parametrize(
    "patch, field",
    [
        ({"tau": []}, "tau"),
        ({"tau": [0]}, "tau"),
        ({"tau": [True]}, "tau"),
        ({"a": 0}, "a"),
        ({"a": 200}, "a"),
        ({"models": []}, "models"),
        ({"models": ["gail2"]}, "models"),
    ],
)
def test_score_request_field_errors(client, patch, field):
    resp = client.post("/score", json=base_request(**patch))
    assert resp.status_code == 400
    doc = resp.json()
    assert any(d["field"] == field for d in doc["diagnostics"])


def test_score_unknown_model_lists_available(bare_client):
    resp = bare_client.post("/score", json=base_request(models=["lr1"]))
    # lr1 only exists when the service was started with a fitted ensemble
    assert resp.status_code == 400
    message = resp.json()["diagnostics"][0]["message"]
    assert "unknown model(s) lr1" in message
    assert "combined_m" in message


# --- what-if ---


def test_whatif_risk_factor_delta(client):
    body = {
        "base": base_request(models=["bcrat", "combined_m"]),
        "deltas": [{"op": "set_risk_factor", "field": "num_biopsies", "value": 2}],
    }
    resp = client.post("/whatif", json=body)
    assert resp.status_code == 200
    doc = resp.json()
    assert doc["baseline"]["models"]["bcrat"]["eligible"]
    (row,) = doc["rows"]
    assert row["delta"]["op"] == "set_risk_factor"
    base_risk = float(doc["baseline"]["models"]["bcrat"]["risks"]["5"])
    new_risk = float(row["result"]["models"]["bcrat"]["risks"]["5"])
    # a second biopsy raises the questionnaire hazard under these tables
    assert new_risk > base_risk
    assert row["difference"]["bcrat"]["5"] == float_str(new_risk - base_risk)


def test_whatif_add_and_remove_relative(client):
    affected = member(0, "sister", "female", 50, breast_cancer=42)
    del affected["id"]
    body = {
        "base": base_request(models=["brcapro"]),
        "deltas": [
            {"op": "add_relative", "member": affected},
            {"op": "remove_relative", "id": 2},
        ],
    }
    doc = client.post("/whatif", json=body).json()
    added, removed = doc["rows"]
    # a second affected sister pushes the carrier posterior and the risk up
    assert float(added["difference"]["brcapro"]["5"]) > 0
    # dropping the affected sister pulls it down
    assert float(removed["difference"]["brcapro"]["5"]) < 0


def test_whatif_set_member(client):
    body = {
        "base": base_request(models=["brcapro"]),
        "deltas": [
            {"op": "set_member", "id": 2, "field": "breast_cancer", "value": None},
        ],
    }
    doc = client.post("/whatif", json=body).json()
    (row,) = doc["rows"]
    assert float(row["difference"]["brcapro"]["5"]) < 0


def test_whatif_set_tau_yields_no_difference_overlap(client):
    body = {
        "base": base_request(models=["brcapro"]),
        "deltas": [{"op": "set_tau", "tau": [10]}],
    }
    doc = client.post("/whatif", json=body).json()
    (row,) = doc["rows"]
    assert row["result"]["tau"] == [10]
    assert row["difference"] == {}


@pytest.mark.parametrize(
    "delta, needle",
    [
        ({"no": "op"}, "op"),
        ({"op": "teleport"}, "unknown delta op"),
        ({"op": "remove_relative", "id": 99}, "no member"),
        ({"op": "set_member", "id": 99, "field": "alive", "value": False}, "no member"),
        ({"op": "set_risk_factor", "value": 1}, "field"),
        ({"op": "add_relative"}, "member"),
    ],
)
def test_whatif_delta_errors_are_per_row(client, delta, needle):
    body = {"base": base_request(models=["brcapro"]), "deltas": [delta]}
    resp = client.post("/whatif", json=body)
    assert resp.status_code == 200
    (row,) = resp.json()["rows"]
    assert needle in row["error"]["message"]
    assert "result" not in row


def test_whatif_invalid_delta_document(client):
    # the edit itself parses but produces an invalid pedigree
    body = {
        "base": base_request(models=["brcapro"]),
        "deltas": [{"op": "set_member", "id": 2, "field": "sex", "value": "male"}],
    }
    (row,) = client.post("/whatif", json=body).json()["rows"]
    assert row["error"]["diagnostics"]


def test_whatif_ineligible_base(client):
    base = base_request(models=["bcrat"])
    base["pedigree"]["members"][0]["current_age_or_death_age"] = 19
    resp = client.post("/whatif", json={"base": base, "deltas": []})
    assert resp.status_code == 422
    doc = resp.json()
    assert doc["error"] == "ineligible"
    assert doc["baseline"]["models"]["bcrat"]["eligible"] is False


def test_whatif_needs_base(client):
    resp = client.post("/whatif", json={"deltas": []})
    assert resp.status_code == 400
    resp = client.post("/whatif", json={"base": base_request(), "deltas": "nope"})
    assert resp.status_code == 400
