"""Cohort records: one proband with baseline state and follow-up outcome.

Follow-up is recorded on the time-since-baseline scale.  ``event`` is the
first thing that ended breast-cancer-free observation: a breast diagnosis,
death from another cause, or censoring (including administrative end of
follow-up).  A record censored at or after a horizon tau with no prior event
is known event-free at tau; a death before tau is also a known non-case.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional

from riskfusion.errors import ValidationError
from riskfusion.pedigree import (
    Pedigree,
    RiskFactors,
    parse_pedigree,
    parse_risk_factors,
)

EVENTS = ("breast", "death", "censored")


@dataclass(frozen=True)
class CohortRecord:
    id: int
    pedigree: Pedigree
    risk_factors: RiskFactors
    baseline_age: int
    follow_up_years: float
    event: str
    stratum: Optional[str] = None
    latent_genotypes: Optional[dict[int, int]] = None

    def known_event_free_at(self, tau: float) -> bool:
        """True when absence of a breast event through tau is observed."""
        if self.event == "breast":
            return self.follow_up_years > tau
        if self.event == "death":
            return True
        return self.follow_up_years >= tau

    def breast_by(self, tau: float) -> bool:
        return self.event == "breast" and self.follow_up_years <= tau

    def to_json_dict(self) -> dict:
        doc: dict[str, Any] = {
            "id": self.id,
            "pedigree": self.pedigree.to_json_dict(),
            "risk_factors": self.risk_factors.to_json_dict(),
            "baseline_age": self.baseline_age,
            "follow_up_years": self.follow_up_years,
            "event": self.event,
        }
        if self.stratum is not None:
            doc["stratum"] = self.stratum
        if self.latent_genotypes is not None:
            doc["latent_genotypes"] = {str(k): v for k, v in self.latent_genotypes.items()}
        return doc


def parse_cohort_record(doc: Any) -> CohortRecord:
    if not isinstance(doc, dict):
        raise ValidationError([{"field": "$", "message": "cohort record must be a JSON object"}])
    problems = []
    for name in ("id", "pedigree", "risk_factors", "baseline_age", "follow_up_years", "event"):
        if name not in doc:
            problems.append({"field": name, "message": f"required field {name} is missing"})
    if doc.get("event") not in EVENTS and "event" in doc:
        problems.append({"field": "event", "message": f"event must be one of {', '.join(EVENTS)}"})
    if problems:
        raise ValidationError(problems)

    pedigree = parse_pedigree(doc["pedigree"])
    rf = parse_risk_factors(doc["risk_factors"], pedigree)
    follow_up = float(doc["follow_up_years"])
    if follow_up < 0:
        raise ValidationError(
            [{"field": "follow_up_years", "message": "follow_up_years must be non-negative"}]
        )
    latent = doc.get("latent_genotypes")
    if latent is not None:
        latent = {int(k): int(v) for k, v in latent.items()}
    return CohortRecord(
        id=int(doc["id"]),
        pedigree=pedigree,
        risk_factors=rf,
        baseline_age=int(doc["baseline_age"]),
        follow_up_years=follow_up,
        event=doc["event"],
        stratum=doc.get("stratum"),
        latent_genotypes=latent,
    )
