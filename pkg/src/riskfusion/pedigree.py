"""Pedigree and risk-factor domain types, validation, and serialization.

A pedigree is a flat list of relatives tied to the counselee (the proband,
always member 0) through a closed relation vocabulary covering first- and
second-degree kin.  Parent links are implied by the relation labels, so no
explicit graph wiring is stored or accepted.

All types are frozen dataclasses; construct through :func:`parse_pedigree`
or the dataclass constructors directly.  Validation failures raise
:class:`riskfusion.errors.ValidationError` carrying field-level diagnostics
whose wording comes from ``contract/validation-messages.json`` so that any
client re-implementing the checks can match the server character for
character.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Any, Iterable, Optional

from riskfusion.errors import ValidationError

MAX_AGE = 94  # parameter tables run on ages 1..94

RELATIONS = (
    "proband",
    "mother",
    "father",
    "sister",
    "brother",
    "daughter",
    "son",
    "maternal_grandmother",
    "maternal_grandfather",
    "paternal_grandmother",
    "paternal_grandfather",
    "maternal_aunt",
    "maternal_uncle",
    "paternal_aunt",
    "paternal_uncle",
)

# Relations that may appear at most once per pedigree.
SINGULAR_RELATIONS = frozenset(
    {
        "proband",
        "mother",
        "father",
        "maternal_grandmother",
        "maternal_grandfather",
        "paternal_grandmother",
        "paternal_grandfather",
    }
)

SEX_FOR_RELATION = {
    "proband": "female",
    "mother": "female",
    "sister": "female",
    "daughter": "female",
    "maternal_grandmother": "female",
    "paternal_grandmother": "female",
    "maternal_aunt": "female",
    "paternal_aunt": "female",
    "father": "male",
    "brother": "male",
    "son": "male",
    "maternal_grandfather": "male",
    "paternal_grandfather": "male",
    "maternal_uncle": "male",
    "paternal_uncle": "male",
}

FIRST_DEGREE_FEMALE = frozenset({"mother", "sister", "daughter"})

GENETIC_TESTS = ("BRCA1+", "BRCA2+", "both+", "negative")

RACES = ("white", "black", "hispanic", "asian", "native_american", "unknown")

SCHEMA_VERSION = 1


def _load_messages() -> dict[str, str]:
    text = (
        resources.files("riskfusion")
        .joinpath("contract/validation-messages.json")
        .read_text(encoding="utf-8")
    )
    return json.loads(text)["messages"]


MESSAGES = _load_messages()


def render_message(key: str, **kwargs: Any) -> str:
    """Fill a diagnostic template from the shared message catalog."""
    template = MESSAGES[key]
    out = template
    for name, value in kwargs.items():
        out = out.replace("{" + name + "}", str(value))
    return out


class _Diagnostics:
    """Accumulates field-level errors and warnings during parsing."""

    def __init__(self) -> None:
        self.errors: list[dict] = []
        self.warnings: list[dict] = []

    def error(self, field_name: str, key: str, member_id: Optional[int] = None, **kw: Any) -> None:
        self.errors.append(
            {"field": field_name, "message": render_message(key, **kw), "member_id": member_id}
        )

    def warn(self, field_name: str, key: str, member_id: Optional[int] = None, **kw: Any) -> None:
        self.warnings.append(
            {"field": field_name, "message": render_message(key, **kw), "member_id": member_id}
        )

    def raise_if_errors(self) -> None:
        if self.errors:
            raise ValidationError(self.errors)


@dataclass(frozen=True)
class Relative:
    """One pedigree member.

    ``current_age_or_death_age`` is the current age for living members and
    the age at death otherwise.  Cancer fields hold the onset age or None;
    absence of an onset age means unaffected.  ``genetic_test`` is None when
    no test result is known; "negative" is a real result, not a default.
    """

    id: int
    relation: str
    sex: str
    current_age_or_death_age: int
    alive: bool
    breast_cancer: Optional[int] = None
    ovarian_cancer: Optional[int] = None
    genetic_test: Optional[str] = None
    prophylactic_mastectomy_age: Optional[int] = None
    prophylactic_oophorectomy_age: Optional[int] = None
    ethnicity_flags: dict = field(default_factory=lambda: {"ashkenazi": False})
    race: str = "unknown"

    @property
    def age(self) -> int:
        return self.current_age_or_death_age

    @property
    def ashkenazi(self) -> bool:
        return bool(self.ethnicity_flags.get("ashkenazi", False))

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "relation": self.relation,
            "sex": self.sex,
            "current_age_or_death_age": self.current_age_or_death_age,
            "alive": self.alive,
            "breast_cancer": self.breast_cancer,
            "ovarian_cancer": self.ovarian_cancer,
            "genetic_test": self.genetic_test,
            "prophylactic_mastectomy_age": self.prophylactic_mastectomy_age,
            "prophylactic_oophorectomy_age": self.prophylactic_oophorectomy_age,
            "ethnicity_flags": {"ashkenazi": self.ashkenazi},
            "race": self.race,
        }


@dataclass(frozen=True)
class Pedigree:
    """Validated family history; ``members[0]`` is always the proband."""

    members: tuple[Relative, ...]
    warnings: tuple[dict, ...] = ()

    @property
    def proband(self) -> Relative:
        return self.members[0]

    def member_by_relation(self, relation: str) -> Optional[Relative]:
        for m in self.members:
            if m.relation == relation:
                return m
        return None

    def members_by_relation(self, relation: str) -> tuple[Relative, ...]:
        return tuple(m for m in self.members if m.relation == relation)

    def to_json_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "members": [m.to_json_dict() for m in self.members],
        }


@dataclass(frozen=True)
class RiskFactors:
    """The five questionnaire covariates.

    None encodes "unknown" where the model admits it:
      * age_at_menarche: unknown behaves as the oldest (>= 14) category
      * num_biopsies: unknown behaves as 0; a stored 2 means two or more
      * atypical_hyperplasia: unknown disables both biopsy interactions

    age_first_live_birth is always an integer; nulliparous women are
    encoded as 25 by convention.  affected_first_degree mirrors
    count_affected_first_degree on the paired pedigree.
    """

    age_at_menarche: Optional[int] = None
    num_biopsies: Optional[int] = None
    age_first_live_birth: int = 25
    affected_first_degree: int = 0
    atypical_hyperplasia: Optional[int] = None

    def to_json_dict(self) -> dict:
        return {
            "age_at_menarche": self.age_at_menarche,
            "num_biopsies": self.num_biopsies,
            "age_first_live_birth": self.age_first_live_birth,
            "affected_first_degree": self.affected_first_degree,
            "atypical_hyperplasia": self.atypical_hyperplasia,
        }


def _check_optional_age(
    value: Any,
    member_id: int,
    field_name: str,
    not_int_key: str,
    below_min_key: str,
    diags: _Diagnostics,
    **kw: Any,
) -> Optional[int]:
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        diags.error(field_name, not_int_key, member_id, **kw)
        return None
    if value < 1:
        diags.error(field_name, below_min_key, member_id, **kw)
        return None
    return value


def _parse_member(raw: Any, index: int, diags: _Diagnostics) -> Optional[Relative]:
    if not isinstance(raw, dict):
        diags.error(f"members[{index}]", "document_not_object")
        return None

    member_id: Optional[int] = None
    raw_id = raw.get("id")
    if isinstance(raw_id, bool) or not isinstance(raw_id, int):
        diags.error(f"members[{index}].id", "id_not_integer")
    else:
        member_id = raw_id

    for name in ("relation", "sex", "current_age_or_death_age", "alive"):
        if name not in raw:
            diags.error(name, "field_missing", member_id, field=name)

    relation = raw.get("relation")
    if relation is not None and relation not in RELATIONS:
        diags.error("relation", "relation_invalid", member_id, allowed=", ".join(RELATIONS))
        relation = None

    sex = raw.get("sex")
    if sex is not None and sex not in ("female", "male"):
        diags.error("sex", "sex_invalid", member_id, allowed="female, male")
        sex = None
    if relation is not None and sex is not None and SEX_FOR_RELATION[relation] != sex:
        diags.error(
            "sex",
            "sex_relation_mismatch",
            member_id,
            relation=relation,
            expected=SEX_FOR_RELATION[relation],
        )

    alive = raw.get("alive")
    if alive is not None and not isinstance(alive, bool):
        diags.error("alive", "alive_not_boolean", member_id)
        alive = None

    age = raw.get("current_age_or_death_age")
    if age is not None:
        if isinstance(age, bool) or not isinstance(age, int):
            diags.error("current_age_or_death_age", "age_not_integer", member_id)
            age = None
        elif age < 1:
            diags.error("current_age_or_death_age", "age_below_min", member_id)
            age = None
        elif age > MAX_AGE:
            diags.warn("current_age_or_death_age", "age_clamped", member_id, age=age)
            age = MAX_AGE

    breast = _check_optional_age(
        raw.get("breast_cancer"), member_id, "breast_cancer",
        "onset_not_integer", "onset_below_min", diags, cancer="breast_cancer",
    )
    ovarian = _check_optional_age(
        raw.get("ovarian_cancer"), member_id, "ovarian_cancer",
        "onset_not_integer", "onset_below_min", diags, cancer="ovarian_cancer",
    )
    mastectomy = _check_optional_age(
        raw.get("prophylactic_mastectomy_age"), member_id, "prophylactic_mastectomy_age",
        "surgery_not_integer", "surgery_below_min", diags, surgery="prophylactic_mastectomy_age",
    )
    oophorectomy = _check_optional_age(
        raw.get("prophylactic_oophorectomy_age"), member_id, "prophylactic_oophorectomy_age",
        "surgery_not_integer", "surgery_below_min", diags, surgery="prophylactic_oophorectomy_age",
    )

    if sex == "male":
        if raw.get("ovarian_cancer") is not None:
            diags.error("ovarian_cancer", "ovarian_male", member_id)
            ovarian = None
        if raw.get("prophylactic_oophorectomy_age") is not None:
            diags.error("prophylactic_oophorectomy_age", "oophorectomy_male", member_id)
            oophorectomy = None

    if age is not None:
        for cancer_name, onset in (("breast_cancer", breast), ("ovarian_cancer", ovarian)):
            if onset is not None and onset > age:
                diags.error(cancer_name, "onset_after_age", member_id, cancer=cancer_name, onset=onset, age=age)
        for surgery_name, s_age in (
            ("prophylactic_mastectomy_age", mastectomy),
            ("prophylactic_oophorectomy_age", oophorectomy),
        ):
            if s_age is not None and s_age > age:
                diags.error(
                    surgery_name, "surgery_after_age", member_id,
                    surgery=surgery_name, surgery_age=s_age, age=age,
                )
    if breast is not None and mastectomy is not None and breast > mastectomy:
        diags.error(
            "breast_cancer", "onset_after_surgery", member_id,
            cancer="breast_cancer", onset=breast,
            surgery="prophylactic_mastectomy_age", surgery_age=mastectomy,
        )
    if ovarian is not None and oophorectomy is not None and ovarian > oophorectomy:
        diags.error(
            "ovarian_cancer", "onset_after_surgery", member_id,
            cancer="ovarian_cancer", onset=ovarian,
            surgery="prophylactic_oophorectomy_age", surgery_age=oophorectomy,
        )

    test = raw.get("genetic_test")
    if test is not None and test not in GENETIC_TESTS:
        diags.error("genetic_test", "test_invalid", member_id, allowed=", ".join(GENETIC_TESTS))
        test = None

    ethnicity = raw.get("ethnicity_flags", {"ashkenazi": False})
    if (
        not isinstance(ethnicity, dict)
        or not isinstance(ethnicity.get("ashkenazi", False), bool)
    ):
        diags.error("ethnicity_flags", "ethnicity_invalid", member_id)
        ethnicity = {"ashkenazi": False}

    race = raw.get("race", "unknown")
    if race not in RACES:
        diags.error("race", "race_invalid", member_id, allowed=", ".join(RACES))
        race = "unknown"

    if member_id is None or relation is None or sex is None or age is None or alive is None:
        return None
    return Relative(
        id=member_id,
        relation=relation,
        sex=sex,
        current_age_or_death_age=age,
        alive=alive,
        breast_cancer=breast,
        ovarian_cancer=ovarian,
        genetic_test=test,
        prophylactic_mastectomy_age=mastectomy,
        prophylactic_oophorectomy_age=oophorectomy,
        ethnicity_flags={"ashkenazi": bool(ethnicity.get("ashkenazi", False))},
        race=race,
    )


def parse_pedigree(document: Any) -> Pedigree:
    """Validate a pedigree document and return the immutable Pedigree.

    Accepts the parsed JSON object (dict).  Raises ValidationError with the
    full list of diagnostics; non-fatal issues (age clamping) surface as
    warnings on the returned Pedigree.
    """
    diags = _Diagnostics()
    if not isinstance(document, dict):
        diags.error("$", "document_not_object")
        diags.raise_if_errors()

    version = document.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        diags.error("schema_version", "schema_version_unsupported", version=version)

    raw_members = document.get("members")
    if not isinstance(raw_members, list):
        diags.error("members", "members_not_array")
        diags.raise_if_errors()
    if len(raw_members) == 0:
        diags.error("members", "members_empty")
        diags.raise_if_errors()

    members: list[Relative] = []
    for i, raw in enumerate(raw_members):
        m = _parse_member(raw, i, diags)
        if m is not None:
            members.append(m)

    # Structural checks only make sense once every member parsed cleanly.
    if len(members) == len(raw_members):
        seen_ids: set[int] = set()
        for m in members:
            if m.id in seen_ids:
                diags.error("id", "id_duplicate", m.id, id=m.id)
            seen_ids.add(m.id)

        probands = [m for m in members if m.relation == "proband"]
        if len(probands) != 1:
            diags.error("members", "proband_count", count=len(probands))
        elif members[0].relation != "proband":
            diags.error("members", "proband_first")
        else:
            if not members[0].alive:
                diags.error("alive", "proband_dead", members[0].id)

        counts: dict[str, int] = {}
        for m in members:
            counts[m.relation] = counts.get(m.relation, 0) + 1
        for relation, n in counts.items():
            if relation in SINGULAR_RELATIONS and n > 1 and relation != "proband":
                diags.error("relation", "relation_duplicate", relation=relation)

    diags.raise_if_errors()
    return Pedigree(members=tuple(members), warnings=tuple(diags.warnings))


def parse_risk_factors(document: Any, pedigree: Optional[Pedigree] = None) -> RiskFactors:
    """Validate a risk-factor document; cross-check X4 against the pedigree."""
    diags = _Diagnostics()
    if not isinstance(document, dict):
        diags.error("$", "rf_not_object")
        diags.raise_if_errors()

    def opt_int(name: str, key: str, low: int, high: int) -> Optional[int]:
        v = document.get(name)
        if v is None:
            return None
        if isinstance(v, bool) or not isinstance(v, int) or not (low <= v <= high):
            diags.error(name, key)
            return None
        return v

    menarche = opt_int("age_at_menarche", "rf_menarche_invalid", 1, MAX_AGE)
    biopsies = opt_int("num_biopsies", "rf_biopsies_invalid", 0, 2)
    hyperplasia = opt_int("atypical_hyperplasia", "rf_hyperplasia_invalid", 0, 1)

    afb = document.get("age_first_live_birth", 25)
    if isinstance(afb, bool) or not isinstance(afb, int) or not (1 <= afb <= MAX_AGE):
        diags.error("age_first_live_birth", "rf_afb_invalid")
        afb = 25

    if "affected_first_degree" in document:
        x4 = document["affected_first_degree"]
        if isinstance(x4, bool) or not isinstance(x4, int) or x4 < 0:
            diags.error("affected_first_degree", "rf_x4_invalid")
            x4 = 0
        elif pedigree is not None:
            expected = count_affected_first_degree(pedigree)
            if x4 != expected:
                diags.error(
                    "affected_first_degree", "rf_x4_mismatch", value=x4, count=expected
                )
    else:
        x4 = count_affected_first_degree(pedigree) if pedigree is not None else 0

    diags.raise_if_errors()
    return RiskFactors(
        age_at_menarche=menarche,
        num_biopsies=biopsies,
        age_first_live_birth=afb,
        affected_first_degree=x4,
        atypical_hyperplasia=hyperplasia,
    )


def serialize_pedigree(p: Pedigree) -> dict:
    return p.to_json_dict()


def count_affected_first_degree(p: Pedigree) -> int:
    """Female first-degree relatives (mother, sisters, daughters) with breast cancer."""
    return sum(
        1
        for m in p.members
        if m.relation in FIRST_DEGREE_FEMALE
        and m.sex == "female"
        and m.breast_cancer is not None
    )


@dataclass(frozen=True)
class StratumRules:
    """Family-history stratification triggers.

    A pedigree falls in the "strong" stratum when any trigger fires over the
    relatives (the proband's own diagnoses are not consulted): an ovarian
    cancer at any age, a breast cancer at or under the onset threshold, or
    at least ``min_breast_count`` breast cancers in the bloodline.
    """

    any_ovarian: bool = True
    breast_onset_at_or_below: int = 50
    min_breast_count: int = 2

    @staticmethod
    def from_json_dict(doc: dict) -> "StratumRules":
        rules = doc.get("rules", {})
        return StratumRules(
            any_ovarian=bool(rules.get("any_ovarian", True)),
            breast_onset_at_or_below=int(rules.get("breast_onset_at_or_below", 50)),
            min_breast_count=int(rules.get("min_breast_count", 2)),
        )


def stratify_family_history(p: Pedigree, rules: StratumRules) -> str:
    relatives = [m for m in p.members if m.relation != "proband"]
    if rules.any_ovarian and any(m.ovarian_cancer is not None for m in relatives):
        return "strong"
    breast_onsets = [m.breast_cancer for m in relatives if m.breast_cancer is not None]
    if any(t <= rules.breast_onset_at_or_below for t in breast_onsets):
        return "strong"
    if len(breast_onsets) >= rules.min_breast_count:
        return "strong"
    return "less"


def normalize_document(document: Any) -> dict:
    """Parse then re-serialize: the canonical form used in round-trip tests."""
    return serialize_pedigree(parse_pedigree(document))


def proband_substitute(p: Pedigree, **changes: Any) -> Pedigree:
    """Return a copy of the pedigree with fields of the proband replaced."""
    new_proband = replace(p.proband, **changes)
    return Pedigree(members=(new_proband,) + p.members[1:], warnings=p.warnings)


def iter_relatives(p: Pedigree) -> Iterable[Relative]:
    return (m for m in p.members if m.relation != "proband")
