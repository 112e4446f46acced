"""Regenerate docs/contract-corpus/ from the reference implementation.

The corpus pins the validation and scoring contract shared by the Python
suite and the browser client's tests: document in, verdict/diagnostics out,
and full score/whatif responses with risk strings verbatim.  Run this only
when the contract changes on purpose; tests/test_contract_corpus.py fails on
any drift between the committed corpus and the implementation.
"""

from __future__ import annotations

import json
from pathlib import Path

from fastapi.testclient import TestClient

from riskfusion.ensemble import FittedEnsemble
from riskfusion.errors import ValidationError
from riskfusion.parameters import load_parameters
from riskfusion.pedigree import parse_pedigree, parse_risk_factors
from riskfusion.service import build_app

ROOT = Path(__file__).resolve().parents[1]
OUT = ROOT / "docs" / "contract-corpus"

LR1 = FittedEnsemble("fixed_horizon", (2.55, 0.86, 1.21, 0.11), "sqrt", (5,))


def member(ident: int, relation: str, age: int, **extra) -> dict:
    female = {
        "proband", "mother", "sister", "daughter",
        "maternal_grandmother", "paternal_grandmother",
        "maternal_aunt", "paternal_aunt",
    }
    doc = {
        "id": ident,
        "relation": relation,
        "sex": "female" if relation in female else "male",
        "current_age_or_death_age": age,
        "alive": True,
    }
    doc.update(extra)
    return doc


def pedigree_doc(*members: dict, version: int | None = 1) -> dict:
    doc: dict = {"members": list(members)}
    if version is not None:
        doc["schema_version"] = version
    return doc


# --- validation corpus ------------------------------------------------------

PEDIGREE_CASES: list[tuple[str, object]] = [
    ("minimal-proband", pedigree_doc(member(0, "proband", 40))),
    (
        "nuclear-family",
        pedigree_doc(
            member(0, "proband", 45),
            member(1, "mother", 71, breast_cancer=52),
            member(2, "father", 74),
            member(3, "sister", 48),
        ),
    ),
    (
        "full-second-degree",
        pedigree_doc(
            member(0, "proband", 50),
            member(1, "mother", 75),
            member(2, "father", 78),
            member(3, "maternal_grandmother", 94, alive=False),
            member(4, "maternal_grandfather", 88, alive=False),
            member(5, "paternal_grandmother", 91, alive=False),
            member(6, "paternal_grandfather", 83, alive=False),
            member(7, "maternal_aunt", 70, breast_cancer=61),
            member(8, "paternal_uncle", 68),
            member(9, "daughter", 25),
            member(10, "son", 22),
        ),
    ),
    (
        "tested-relatives",
        pedigree_doc(
            member(0, "proband", 38),
            member(1, "sister", 42, breast_cancer=39, genetic_test="BRCA1+"),
            member(2, "mother", 66, ovarian_cancer=58, genetic_test="negative"),
        ),
    ),
    (
        "ashkenazi-proband",
        pedigree_doc(
            member(0, "proband", 44, ethnicity_flags={"ashkenazi": True}, race="white"),
            member(1, "mother", 70, breast_cancer=49),
        ),
    ),
    (
        "surgery-history",
        pedigree_doc(
            member(0, "proband", 47),
            member(1, "mother", 72, breast_cancer=45, prophylactic_mastectomy_age=50),
            member(2, "maternal_aunt", 69, prophylactic_oophorectomy_age=44),
        ),
    ),
    (
        "age-clamp-warning",
        pedigree_doc(
            member(0, "proband", 52),
            member(1, "paternal_grandmother", 97, alive=False),
        ),
    ),
    (
        "dead-relative",
        pedigree_doc(
            member(0, "proband", 41),
            member(1, "father", 70, alive=False),
        ),
    ),
    (
        "unknown-fields-ignored",
        pedigree_doc(
            {**member(0, "proband", 39), "notes": "entered at intake", "clinic_id": 7}
        ),
    ),
    (
        "version-absent-defaults",
        pedigree_doc(member(0, "proband", 36), version=None),
    ),
    (
        "carrier-proband",
        pedigree_doc(member(0, "proband", 43, genetic_test="both+")),
    ),
    (
        "explicit-nulls-are-absence",
        pedigree_doc(
            member(0, "proband", 45, breast_cancer=None, ovarian_cancer=None,
                   genetic_test=None, prophylactic_mastectomy_age=None),
        ),
    ),
    ("document-not-object", ["not", "a", "pedigree"]),
    ("members-missing", {"schema_version": 1}),
    ("members-empty", pedigree_doc()),
    ("version-unsupported", pedigree_doc(member(0, "proband", 40), version=2)),
    (
        "fields-missing",
        {"schema_version": 1, "members": [{"id": 0, "relation": "proband",
                                           "current_age_or_death_age": 40}]},
    ),
    (
        "relation-unknown",
        pedigree_doc({**member(0, "proband", 40), "relation": "cousin"}),
    ),
    (
        "sex-relation-mismatch",
        pedigree_doc(
            member(0, "proband", 45),
            {**member(1, "sister", 48), "sex": "male"},
        ),
    ),
    (
        "id-not-integer",
        pedigree_doc({**member(0, "proband", 40), "id": True}),
    ),
    (
        "onset-after-age",
        pedigree_doc(
            member(0, "proband", 45),
            member(1, "mother", 50, breast_cancer=60),
        ),
    ),
    (
        "ovarian-on-male",
        pedigree_doc(
            member(0, "proband", 45),
            member(1, "brother", 40, ovarian_cancer=38),
        ),
    ),
    (
        "duplicate-ids",
        pedigree_doc(
            member(0, "proband", 45),
            member(1, "sister", 48),
            member(1, "brother", 50),
        ),
    ),
    (
        "two-probands",
        pedigree_doc(member(0, "proband", 45), member(1, "proband", 47)),
    ),
    (
        "proband-not-first",
        pedigree_doc(member(1, "mother", 70), member(0, "proband", 45)),
    ),
    (
        "dead-proband",
        pedigree_doc({**member(0, "proband", 45), "alive": False}),
    ),
    (
        "duplicate-mother",
        pedigree_doc(
            member(0, "proband", 45),
            member(1, "mother", 70),
            member(2, "mother", 72),
        ),
    ),
    (
        "onset-after-surgery",
        pedigree_doc(
            member(0, "proband", 45),
            member(1, "mother", 70, breast_cancer=55, prophylactic_mastectomy_age=50),
        ),
    ),
    (
        "surgery-after-age",
        pedigree_doc(
            member(0, "proband", 45),
            member(1, "maternal_aunt", 50, prophylactic_oophorectomy_age=60),
        ),
    ),
    (
        "test-unknown-value",
        pedigree_doc(member(0, "proband", 45, genetic_test="BRCA3+")),
    ),
    (
        "ethnicity-not-object",
        pedigree_doc(member(0, "proband", 45, ethnicity_flags="ashkenazi")),
    ),
    (
        "race-unknown-value",
        pedigree_doc(member(0, "proband", 45, race="martian")),
    ),
    (
        "age-zero",
        pedigree_doc(member(0, "proband", 45), member(1, "daughter", 0)),
    ),
    (
        "alive-not-boolean",
        pedigree_doc({**member(0, "proband", 45), "alive": "yes"}),
    ),
    (
        "member-error-suppresses-structural",
        pedigree_doc(
            member(0, "proband", 45),
            {**member(1, "proband", 47), "sex": "robot"},
        ),
    ),
    (
        "male-ovarian-type-error-doubles",
        pedigree_doc(
            member(0, "proband", 45),
            member(1, "brother", 40, ovarian_cancer="forty"),
        ),
    ),
]

RF_PEDIGREE = pedigree_doc(
    member(0, "proband", 45),
    member(1, "mother", 71, breast_cancer=52),
    member(2, "sister", 48),
)

RISK_FACTOR_CASES: list[tuple[str, object, object]] = [
    ("empty-document", {}, RF_PEDIGREE),
    (
        "all-fields-valid",
        {
            "age_at_menarche": 12,
            "num_biopsies": 1,
            "age_first_live_birth": 28,
            "affected_first_degree": 1,
            "atypical_hyperplasia": 0,
        },
        RF_PEDIGREE,
    ),
    ("nulls-mean-unknown",
     {"age_at_menarche": None, "num_biopsies": None, "atypical_hyperplasia": None},
     RF_PEDIGREE),
    ("x4-without-pedigree", {"affected_first_degree": 3}, None),
    ("not-an-object", [1, 2], RF_PEDIGREE),
    ("menarche-zero", {"age_at_menarche": 0}, RF_PEDIGREE),
    ("biopsies-three", {"num_biopsies": 3}, RF_PEDIGREE),
    ("afb-boolean", {"age_first_live_birth": True}, RF_PEDIGREE),
    ("x4-mismatch", {"affected_first_degree": 2}, RF_PEDIGREE),
    ("x4-negative", {"affected_first_degree": -1}, RF_PEDIGREE),
    ("hyperplasia-two", {"atypical_hyperplasia": 2}, RF_PEDIGREE),
    # null x4 counts as present-but-invalid, unlike the other optionals
    ("x4-null", {"affected_first_degree": None}, RF_PEDIGREE),
    ("menarche-string", {"age_at_menarche": "12"}, RF_PEDIGREE),
]


def build_validation_corpus() -> tuple[list[dict], list[dict]]:
    ped_rows = []
    for name, doc in PEDIGREE_CASES:
        row: dict = {"name": name, "document": doc}
        try:
            p = parse_pedigree(doc)
            row["valid"] = True
            row["warnings"] = list(p.warnings)
        except ValidationError as exc:
            row["valid"] = False
            row["errors"] = exc.diagnostics
        ped_rows.append(row)

    rf_rows = []
    for name, doc, ped_doc in RISK_FACTOR_CASES:
        row = {"name": name, "document": doc, "pedigree": ped_doc}
        ped = parse_pedigree(ped_doc) if ped_doc is not None else None
        try:
            parse_risk_factors(doc, ped)
            row["valid"] = True
        except ValidationError as exc:
            row["valid"] = False
            row["errors"] = exc.diagnostics
        rf_rows.append(row)
    return ped_rows, rf_rows


# --- scoring corpus ---------------------------------------------------------

def score_cases() -> list[tuple[str, dict]]:
    nuclear = pedigree_doc(
        member(0, "proband", 45),
        member(1, "mother", 71, breast_cancer=52),
        member(2, "father", 74),
        member(3, "sister", 48),
    )
    strong = pedigree_doc(
        member(0, "proband", 41),
        member(1, "sister", 44, breast_cancer=38),
        member(2, "mother", 67, ovarian_cancer=59),
    )
    second_degree = pedigree_doc(
        member(0, "proband", 50),
        member(1, "maternal_grandmother", 89, alive=False, breast_cancer=72),
        member(2, "maternal_aunt", 70, breast_cancer=61),
        member(3, "paternal_aunt", 66),
        member(4, "daughter", 24),
    )
    rf_mid = {"age_at_menarche": 13, "num_biopsies": 1}
    return [
        ("solo-proband-defaults",
         {"pedigree": pedigree_doc(member(0, "proband", 45))}),
        ("nuclear-two-horizons",
         {"pedigree": nuclear, "risk_factors": rf_mid, "tau": [5, 10]}),
        ("strong-history",
         {"pedigree": strong, "risk_factors": {"age_at_menarche": 11}, "tau": [5]}),
        ("second-degree-only",
         {"pedigree": second_degree, "tau": [5]}),
        ("known-carrier-tiles",
         {"pedigree": pedigree_doc(
             member(0, "proband", 43, genetic_test="BRCA1+"),
             member(1, "mother", 70, breast_cancer=48)),
          "tau": [5]}),
        ("negative-test-all-eligible",
         {"pedigree": pedigree_doc(member(0, "proband", 43, genetic_test="negative")),
          "tau": [5]}),
        ("ashkenazi-prior",
         {"pedigree": pedigree_doc(
             member(0, "proband", 44, ethnicity_flags={"ashkenazi": True}),
             member(1, "mother", 70, breast_cancer=49)),
          "tau": [5]}),
        ("race-black",
         {"pedigree": pedigree_doc(member(0, "proband", 52, race="black")),
          "risk_factors": rf_mid, "tau": [5]}),
        ("race-hispanic-heavy-factors",
         {"pedigree": pedigree_doc(member(0, "proband", 57, race="hispanic")),
          "risk_factors": {"num_biopsies": 2, "atypical_hyperplasia": 1,
                           "age_first_live_birth": 31},
          "tau": [5]}),
        ("young-proband-age-gate",
         {"pedigree": pedigree_doc(member(0, "proband", 19)), "tau": [5]}),
        ("old-proband-horizon-gate",
         {"pedigree": pedigree_doc(member(0, "proband", 88)), "tau": [5]}),
        ("baseline-age-override",
         {"pedigree": nuclear, "risk_factors": rf_mid, "tau": [5], "a": 52}),
        ("family-history-toggle",
         {"pedigree": nuclear, "risk_factors": rf_mid, "tau": [5],
          "use_family_history": False}),
        ("single-model-subset",
         {"pedigree": nuclear, "models": ["brcapro"], "tau": [5]}),
        ("nothing-applicable",
         {"pedigree": pedigree_doc(member(0, "proband", 19)),
          "models": ["bcrat"], "tau": [5]}),
        ("scalar-tau",
         {"pedigree": pedigree_doc(member(0, "proband", 60)), "tau": 7}),
        ("affected-daughter",
         {"pedigree": pedigree_doc(
             member(0, "proband", 62),
             member(1, "daughter", 33, breast_cancer=29)),
          "tau": [5]}),
        ("surgery-in-family",
         {"pedigree": pedigree_doc(
             member(0, "proband", 47),
             member(1, "mother", 72, breast_cancer=45, prophylactic_mastectomy_age=50),
             member(2, "sister", 49, prophylactic_oophorectomy_age=45)),
          "tau": [5]}),
        ("proband-prior-ovarian",
         {"pedigree": pedigree_doc(member(0, "proband", 45, ovarian_cancer=40)),
          "tau": [5]}),
        ("ensemble-explicit",
         {"pedigree": nuclear, "risk_factors": rf_mid,
          "models": ["brcapro", "bcrat", "lr1"], "tau": [5]}),
    ]


def whatif_cases() -> list[tuple[str, dict]]:
    base = {
        "pedigree": pedigree_doc(
            member(0, "proband", 45),
            member(1, "mother", 71, breast_cancer=52),
            member(2, "sister", 48),
        ),
        "risk_factors": {"age_at_menarche": 13, "num_biopsies": 1},
        "tau": [5],
    }
    return [
        ("biopsy-count-up",
         {"base": base,
          "deltas": [{"op": "set_risk_factor", "field": "num_biopsies", "value": 2}]}),
        ("add-affected-sister",
         {"base": base,
          "deltas": [{"op": "add_relative",
                      "member": member(9, "sister", 48, breast_cancer=44)}]}),
        ("remove-then-retime",
         {"base": base,
          "deltas": [{"op": "remove_relative", "id": 2},
                     {"op": "set_tau", "tau": [10]}]}),
        ("error-row-keeps-going",
         {"base": base,
          "deltas": [{"op": "set_member", "id": 99, "field": "breast_cancer",
                      "value": 44},
                     {"op": "set_risk_factor", "field": "num_biopsies",
                      "value": 0}]}),
    ]


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    ped_rows, rf_rows = build_validation_corpus()

    app = build_app(load_parameters(None), {"lr1": LR1})
    client = TestClient(app)
    expected = {}
    for name, request in score_cases():
        resp = client.post("/score", json=request)
        expected[name] = {"status": resp.status_code, "body": resp.json()}
    whatif_expected = {}
    for name, request in whatif_cases():
        resp = client.post("/whatif", json=request)
        whatif_expected[name] = {"status": resp.status_code, "body": resp.json()}

    def dump(path: Path, doc) -> None:
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")

    dump(OUT / "pedigrees.json", {"schema_version": 1, "cases": ped_rows})
    dump(OUT / "riskfactors.json", {"schema_version": 1, "cases": rf_rows})
    dump(OUT / "score-cases.json",
         {"schema_version": 1, "cases": [{"name": n, "request": r}
                                         for n, r in score_cases()]})
    dump(OUT / "score-expected.json", {"schema_version": 1, "cases": expected})
    dump(OUT / "whatif-cases.json",
         {"schema_version": 1, "cases": [{"name": n, "request": r}
                                         for n, r in whatif_cases()]})
    dump(OUT / "whatif-expected.json", {"schema_version": 1, "cases": whatif_expected})
    LR1.save(OUT / "lr1.json")

    for row in ped_rows:
        mark = "ok " if row["valid"] else "ERR"
        msgs = "; ".join(e["message"] for e in row.get("errors", []))
        print(f"{mark} {row['name']}: {msgs}")
    for row in rf_rows:
        mark = "ok " if row["valid"] else "ERR"
        msgs = "; ".join(e["message"] for e in row.get("errors", []))
        print(f"{mark} rf/{row['name']}: {msgs}")
    for name, exp in expected.items():
        models = exp["body"].get("models", {})
        flags = ",".join(f"{m}:{'+' if v.get('eligible') else '-'}"
                         for m, v in models.items())
        print(f"{exp['status']} {name}: {flags}")
    for name, exp in whatif_expected.items():
        rows = exp["body"].get("rows", [])
        kinds = ",".join("result" if "result" in r else "error" for r in rows)
        print(f"{exp['status']} whatif/{name}: {kinds}")


if __name__ == "__main__":
    main()
