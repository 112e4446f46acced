"""Synthetic cohort generator.

Families contain first- and second-degree relatives only.  Birth offsets are
drawn generation by generation (parents and children from the proband,
grandparents and siblings from the parents, aunts and uncles from the
grandmothers), founder genotypes come from the configured ethnicity's allele
frequencies, descendants follow single-locus transmission, and baseline cancer
histories are sampled from the genotype-specific onset tables.  Future
outcomes are drawn from the fused non-carrier hazard (carriers keep the
pedigree-model hazard), with no censoring inside the horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterator, Optional

import numpy as np

from riskfusion import _kernels as K
from riskfusion.cohort import CohortRecord
from riskfusion.errors import ParameterError
from riskfusion.mendelian import tables_for
from riskfusion.parameters import MAX_AGE, ParameterSet
from riskfusion.pedigree import (
    Pedigree,
    Relative,
    RiskFactors,
    count_affected_first_degree,
    stratify_family_history,
)
from riskfusion.relhaz import normalized_pair

COUNT_GROUPS = (
    "sister",
    "brother",
    "daughter",
    "son",
    "maternal_aunt",
    "maternal_uncle",
    "paternal_aunt",
    "paternal_uncle",
)


@dataclass(frozen=True)
class Categorical:
    values: tuple
    probs: tuple

    @classmethod
    def from_mapping(cls, raw: dict, name: str, cast=int) -> "Categorical":
        if not isinstance(raw, dict) or not raw:
            raise ParameterError(f"{name}: expected a non-empty mapping")
        try:
            items = sorted((cast(k), float(v)) for k, v in raw.items())
        except (TypeError, ValueError) as exc:
            raise ParameterError(f"{name}: bad entry ({exc})") from None
        probs = [p for _, p in items]
        if any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-9:
            raise ParameterError(f"{name}: probabilities must be >= 0 and sum to 1")
        return cls(tuple(v for v, _ in items), tuple(probs))

    def draw(self, rng: np.random.Generator):
        return self.values[rng.choice(len(self.values), p=np.asarray(self.probs))]


@dataclass(frozen=True)
class SimConfig:
    proband_age: Categorical
    counts: dict[str, Categorical]
    menarche: Categorical
    biopsies: Categorical
    hyperplasia: Categorical
    gap_mean: float = 27.0
    gap_sd: float = 6.0
    gap_min: float = 14.0
    gap_max: float = 45.0
    death_mean: float = 80.0
    death_sd: float = 15.0
    tau: int = 5
    race: str = "white"
    ethnicity: str = "ashkenazi"
    seed: Optional[int] = None

    @classmethod
    def from_json_dict(cls, doc: dict) -> "SimConfig":
        if not isinstance(doc, dict):
            raise ParameterError("simulation config must be a JSON object")
        cov = doc.get("covariates", {})
        counts = {}
        for group in COUNT_GROUPS:
            raw = doc.get("counts", {}).get(group, {"0": 1.0})
            counts[group] = Categorical.from_mapping(raw, f"counts.{group}")
        gap = doc.get("age_gap", {})
        death = doc.get("death_age", {})
        cfg = cls(
            proband_age=Categorical.from_mapping(doc["proband_age"], "proband_age"),
            counts=counts,
            menarche=Categorical.from_mapping(
                cov.get("age_at_menarche", {"13": 1.0}), "covariates.age_at_menarche"
            ),
            biopsies=Categorical.from_mapping(
                cov.get("biopsies", {"0": 1.0}), "covariates.biopsies"
            ),
            hyperplasia=Categorical.from_mapping(
                cov.get("hyperplasia", {"unknown": 1.0}),
                "covariates.hyperplasia",
                cast=str,
            ),
            gap_mean=float(gap.get("mean", 27.0)),
            gap_sd=float(gap.get("sd", 6.0)),
            gap_min=float(gap.get("min", 14.0)),
            gap_max=float(gap.get("max", 45.0)),
            death_mean=float(death.get("mean", 80.0)),
            death_sd=float(death.get("sd", 15.0)),
            tau=int(doc.get("tau", 5)),
            race=str(doc.get("race", "white")),
            ethnicity=str(doc.get("ethnicity", "ashkenazi")),
            seed=doc.get("seed"),
        )
        if cfg.gap_sd <= 0 or cfg.death_sd <= 0:
            raise ParameterError("age-gap and death-age standard deviations must be positive")
        if cfg.tau < 1:
            raise ParameterError("tau must be at least 1")
        if max(cfg.proband_age.values) + cfg.tau > MAX_AGE:
            raise ParameterError(
                f"proband ages plus tau must stay within the {MAX_AGE}-year table"
            )
        if min(cfg.proband_age.values) < 20:
            raise ParameterError("proband ages below 20 are outside the hazard model")
        return cfg


def _gap(cfg: SimConfig, rng: np.random.Generator) -> float:
    g = rng.normal(cfg.gap_mean, cfg.gap_sd)
    return min(max(g, cfg.gap_min), cfg.gap_max)


def _clamp_age(offset: float) -> int:
    return int(min(max(round(offset), 1), MAX_AGE))


def _draw_genotype(prior: np.ndarray, rng: np.random.Generator) -> int:
    return int(rng.choice(4, p=prior))


def _transmit(mother: int, father: int, rng: np.random.Generator) -> int:
    return int(rng.choice(4, p=K.TRANSMISSION[:, mother, father]))


def simulate_family(
    cfg: SimConfig, params: ParameterSet, rng: np.random.Generator
) -> tuple[list[dict], dict[int, int]]:
    """Sample structure, birth offsets, and latent genotypes for one family.

    Returns member drafts (relation, sex, age) in a fixed order with the
    proband first, plus the genotype of every member by id.  Draw order is
    fixed so the stream is reproducible.
    """
    a0 = int(cfg.proband_age.draw(rng))
    counts = {g: int(cfg.counts[g].draw(rng)) for g in COUNT_GROUPS}

    birth: dict[str, float] = {"proband": float(a0)}
    birth["mother"] = birth["proband"] + _gap(cfg, rng)
    birth["father"] = birth["proband"] + _gap(cfg, rng)
    children = [birth["proband"] - _gap(cfg, rng) for _ in range(counts["daughter"] + counts["son"])]
    birth["maternal_grandmother"] = birth["mother"] + _gap(cfg, rng)
    birth["maternal_grandfather"] = birth["mother"] + _gap(cfg, rng)
    birth["paternal_grandmother"] = birth["father"] + _gap(cfg, rng)
    birth["paternal_grandfather"] = birth["father"] + _gap(cfg, rng)
    siblings = [
        birth["mother"] - _gap(cfg, rng) for _ in range(counts["sister"] + counts["brother"])
    ]
    maternal_au = [
        birth["maternal_grandmother"] - _gap(cfg, rng)
        for _ in range(counts["maternal_aunt"] + counts["maternal_uncle"])
    ]
    paternal_au = [
        birth["paternal_grandmother"] - _gap(cfg, rng)
        for _ in range(counts["paternal_aunt"] + counts["paternal_uncle"])
    ]

    prior = params.genotype_prior(cfg.ethnicity == "ashkenazi")
    geno: dict[str, int] = {}
    for who in (
        "maternal_grandmother",
        "maternal_grandfather",
        "paternal_grandmother",
        "paternal_grandfather",
    ):
        geno[who] = _draw_genotype(prior, rng)
    geno["mother"] = _transmit(geno["maternal_grandmother"], geno["maternal_grandfather"], rng)
    geno["father"] = _transmit(geno["paternal_grandmother"], geno["paternal_grandfather"], rng)
    geno["proband"] = _transmit(geno["mother"], geno["father"], rng)
    partner = _draw_genotype(prior, rng)

    drafts: list[dict] = []

    def add(relation: str, sex: str, offset: float, genotype: int) -> None:
        drafts.append(
            {
                "id": len(drafts),
                "relation": relation,
                "sex": sex,
                "age": _clamp_age(offset),
                "genotype": genotype,
            }
        )

    add("proband", "female", birth["proband"], geno["proband"])
    add("mother", "female", birth["mother"], geno["mother"])
    add("father", "male", birth["father"], geno["father"])
    for i in range(counts["sister"] + counts["brother"]):
        rel = "sister" if i < counts["sister"] else "brother"
        add(rel, "female" if rel == "sister" else "male", siblings[i],
            _transmit(geno["mother"], geno["father"], rng))
    for i in range(counts["daughter"] + counts["son"]):
        rel = "daughter" if i < counts["daughter"] else "son"
        add(rel, "female" if rel == "daughter" else "male", children[i],
            _transmit(geno["proband"], partner, rng))
    add("maternal_grandmother", "female", birth["maternal_grandmother"], geno["maternal_grandmother"])
    add("maternal_grandfather", "male", birth["maternal_grandfather"], geno["maternal_grandfather"])
    add("paternal_grandmother", "female", birth["paternal_grandmother"], geno["paternal_grandmother"])
    add("paternal_grandfather", "male", birth["paternal_grandfather"], geno["paternal_grandfather"])
    for i in range(counts["maternal_aunt"] + counts["maternal_uncle"]):
        rel = "maternal_aunt" if i < counts["maternal_aunt"] else "maternal_uncle"
        add(rel, "female" if rel == "maternal_aunt" else "male", maternal_au[i],
            _transmit(geno["maternal_grandmother"], geno["maternal_grandfather"], rng))
    for i in range(counts["paternal_aunt"] + counts["paternal_uncle"]):
        rel = "paternal_aunt" if i < counts["paternal_aunt"] else "paternal_uncle"
        add(rel, "female" if rel == "paternal_aunt" else "male", paternal_au[i],
            _transmit(geno["paternal_grandmother"], geno["paternal_grandfather"], rng))

    genotypes = {d["id"]: d["genotype"] for d in drafts}
    return drafts, genotypes


def _sample_onset(
    pen: np.ndarray, age: int, rng: np.random.Generator
) -> Optional[int]:
    """Onset year in 1..age with mass pen[t-1], else unaffected."""
    mass = pen[:age]
    total = float(mass.sum())
    u = rng.random()
    if u >= total:
        return None
    return int(np.searchsorted(np.cumsum(mass), u, side="right")) + 1


def assign_phenotypes(
    drafts: list[dict],
    cfg: SimConfig,
    params: ParameterSet,
    rng: np.random.Generator,
) -> list[Relative]:
    """Sample baseline cancer histories and non-proband death ages."""
    members: list[Relative] = []
    for d in drafts:
        g = d["genotype"]
        onset_b = _sample_onset(
            params.penetrance_for("breast", d["sex"], g, cfg.race), d["age"], rng
        )
        onset_o = None
        if d["sex"] == "female":
            onset_o = _sample_onset(
                params.penetrance_for("ovarian", d["sex"], g, cfg.race), d["age"], rng
            )
        alive = True
        age = d["age"]
        if d["relation"] != "proband":
            death = int(min(max(round(rng.normal(cfg.death_mean, cfg.death_sd)), 1), MAX_AGE))
            if death < d["age"]:
                alive = False
                age = death
            if onset_b is not None and onset_b > age:
                onset_b = None
            if onset_o is not None and onset_o > age:
                onset_o = None
        extra = {}
        if d["relation"] == "proband":
            extra = {"ethnicity_flags": {"ashkenazi": cfg.ethnicity == "ashkenazi"},
                     "race": cfg.race}
        members.append(
            Relative(
                id=d["id"],
                relation=d["relation"],
                sex=d["sex"],
                current_age_or_death_age=age,
                alive=alive,
                breast_cancer=onset_b,
                ovarian_cancer=onset_o,
                **extra,
            )
        )
    return members


def draw_covariates(
    cfg: SimConfig, pedigree: Pedigree, rng: np.random.Generator
) -> RiskFactors:
    menarche = int(cfg.menarche.draw(rng))
    biopsies = int(cfg.biopsies.draw(rng))
    hyper_raw = str(cfg.hyperplasia.draw(rng))
    hyperplasia = None if hyper_raw == "unknown" else int(hyper_raw)
    if biopsies == 0:
        hyperplasia = None
    proband = pedigree.proband
    child_ages = [
        m.current_age_or_death_age
        for m in pedigree.members
        if m.relation in ("daughter", "son")
    ]
    if child_ages:
        afb = min(max(proband.age - max(child_ages), 12), 60)
    else:
        afb = 25
    return RiskFactors(
        age_at_menarche=menarche,
        num_biopsies=biopsies,
        age_first_live_birth=afb,
        affected_first_degree=count_affected_first_degree(pedigree),
        atypical_hyperplasia=hyperplasia,
    )


def simulate_outcome(
    genotype: int,
    a0: int,
    X: RiskFactors,
    cfg: SimConfig,
    params: ParameterSet,
    rng: np.random.Generator,
) -> tuple[float, str]:
    """Yearly event draw over (breast, death) hazards past baseline."""
    tables = tables_for(params)
    if genotype == 0:
        haz0 = tables.breast_hazards("female", cfg.race)[0]
        r_under, r_over = normalized_pair(X, params, cfg.race)
        ages = np.arange(1, MAX_AGE + 1)
        r0 = np.where(ages < 50, r_under, r_over)
        hazard = 1.0 - np.power(1.0 - haz0, r0)
    else:
        hazard = tables.breast_hazards("female", cfg.race)[genotype]
    mort = params.mortality
    for t in range(a0 + 1, a0 + cfg.tau + 1):
        u = rng.random()
        hb = float(hazard[t - 1])
        hd = float(mort[t - 1])
        if u < hb:
            return float(t - a0), "breast"
        if u < hb + hd:
            return float(t - a0), "death"
    return float(cfg.tau), "censored"


def simulate_proband(
    index: int, cfg: SimConfig, params: ParameterSet, seed: int
) -> Optional[CohortRecord]:
    """One proband from substream (seed, spawn_key=(index,)); None if excluded."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))
    drafts, genotypes = simulate_family(cfg, params, rng)
    members = assign_phenotypes(drafts, cfg, params, rng)
    proband = members[0]
    pedigree = Pedigree(members=tuple(members))
    X = draw_covariates(cfg, pedigree, rng)
    if proband.breast_cancer is not None:
        return None
    follow_up, event = simulate_outcome(
        genotypes[0], proband.age, X, cfg, params, rng
    )
    return CohortRecord(
        id=index,
        pedigree=pedigree,
        risk_factors=X,
        baseline_age=proband.age,
        follow_up_years=follow_up,
        event=event,
        stratum=stratify_family_history(pedigree, params.stratum_rules),
        latent_genotypes=genotypes,
    )


def iter_cohort(
    n: int, cfg: SimConfig, params: ParameterSet, seed: int
) -> Iterator[Optional[CohortRecord]]:
    """Yield one entry per draw; None marks a baseline-case exclusion."""
    if n < 1:
        raise ValueError("n must be at least 1")
    for i in range(n):
        yield simulate_proband(i, cfg, params, seed)


def simulate_cohort(
    n: int, cfg: SimConfig, params: ParameterSet, seed: Optional[int] = None
) -> tuple[list[CohortRecord], dict]:
    if seed is None:
        seed = cfg.seed
    if seed is None:
        raise ParameterError("a seed is required (config or argument)")
    records: list[CohortRecord] = []
    excluded = 0
    for rec in iter_cohort(n, cfg, params, int(seed)):
        if rec is None:
            excluded += 1
        else:
            records.append(rec)
    cases = sum(1 for r in records if r.event == "breast")
    deaths = sum(1 for r in records if r.event == "death")
    carriers = sum(1 for r in records if r.latent_genotypes[0] > 0)
    summary = {
        "n_drawn": n,
        "n_retained": len(records),
        "excluded_baseline_cases": excluded,
        "cases_within_horizon": cases,
        "deaths_within_horizon": deaths,
        "case_rate": cases / len(records) if records else math.nan,
        "proband_carriers": carriers,
        "tau": cfg.tau,
        "seed": int(seed),
    }
    return records, summary


def resample_outcome(
    record: CohortRecord, cfg: SimConfig, params: ParameterSet, rng: np.random.Generator
) -> CohortRecord:
    """Redraw the future outcome for an existing proband (oracle helper)."""
    follow_up, event = simulate_outcome(
        record.latent_genotypes[0],
        record.baseline_age,
        record.risk_factors,
        cfg,
        params,
        rng,
    )
    return replace(record, follow_up_years=follow_up, event=event)
