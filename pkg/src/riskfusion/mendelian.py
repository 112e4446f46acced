"""Carrier-genotype inference over pedigrees and genotype-conditional
breast-cancer risk projection under competing mortality.

The posterior combines founder genotype priors (allele-frequency based,
selected by the proband's ethnicity flag) with phenotype likelihoods for
every pedigree member: observed onset ages contribute the penetrance mass
at onset, unaffected members contribute the survivor mass to their observed
age, genetic panel results contribute point masses, and prophylactic
surgery truncates the observation window for the removed organ.  Phenotypes
are conditionally independent given genotypes.

Projection (future risk) is breast-only; ovarian history informs the
posterior but ovarian risk is never projected.
"""

from __future__ import annotations

from dataclasses import dataclass
from weakref import WeakKeyDictionary

import numpy as np

from riskfusion import _kernels as K
from riskfusion.errors import ModelEligibilityError, ParameterError
from riskfusion.parameters import N_AGES, ParameterSet, effective_race
from riskfusion.pedigree import Pedigree, Relative

# Test results are full two-gene panel outcomes: each pins one genotype code.
TEST_TO_GENOTYPE = {"negative": 0, "BRCA1+": 1, "BRCA2+": 2, "both+": 3}

_RELATION_GROUP = {
    "proband": K.G_PROBAND,
    "mother": K.G_MOTHER,
    "father": K.G_FATHER,
    "sister": K.G_SIBLING,
    "brother": K.G_SIBLING,
    "daughter": K.G_CHILD,
    "son": K.G_CHILD,
    "maternal_grandmother": K.G_MAT_GRANDMOTHER,
    "maternal_grandfather": K.G_MAT_GRANDFATHER,
    "maternal_aunt": K.G_MAT_AUNT_UNCLE,
    "maternal_uncle": K.G_MAT_AUNT_UNCLE,
    "paternal_grandmother": K.G_PAT_GRANDMOTHER,
    "paternal_grandfather": K.G_PAT_GRANDFATHER,
    "paternal_aunt": K.G_PAT_AUNT_UNCLE,
    "paternal_uncle": K.G_PAT_AUNT_UNCLE,
}

_PARENT_SIDE = frozenset(
    {
        "mother",
        "father",
        "sister",
        "brother",
        "maternal_grandmother",
        "maternal_grandfather",
        "maternal_aunt",
        "maternal_uncle",
        "paternal_grandmother",
        "paternal_grandfather",
        "paternal_aunt",
        "paternal_uncle",
    }
)
_MATERNAL_UPPER = frozenset(
    {"maternal_grandmother", "maternal_grandfather", "maternal_aunt", "maternal_uncle"}
)
_PATERNAL_UPPER = frozenset(
    {"paternal_grandmother", "paternal_grandfather", "paternal_aunt", "paternal_uncle"}
)


def hazard_from_penetrance(
    pen: np.ndarray, mortality: np.ndarray, label: str = "table"
) -> np.ndarray:
    """Convert a yearly penetrance mass function to cause-specific hazards.

    lambda(t) = pen(t) / prod_{u<t} (1 - lambda(u) - mort(u)).  The survivor
    satisfies S(t) = S(t-1)(1 - mort(t)) - pen(t), which unrolls against the
    mortality-only survivor A(t) = prod(1 - mort) to
    S(t) = A(t) * (1 - sum_{u<=t} pen(u)/A(u)), avoiding the sequential loop.
    """
    pen = np.asarray(pen, dtype=float)
    mortality = np.asarray(mortality, dtype=float)
    if pen.shape != mortality.shape:
        raise ParameterError(f"{label}: penetrance and mortality lengths differ")
    A = np.cumprod(1.0 - mortality)
    if np.any(A <= 0.0):
        age = int(np.nonzero(A <= 0.0)[0][0]) + 1
        raise ParameterError(f"{label}: mortality reaches 1 at age {age}")
    S = A * (1.0 - np.cumsum(pen / A))
    S_before = np.concatenate(([1.0], S[:-1]))
    if np.any(S_before <= 0.0):
        age = int(np.nonzero(S_before <= 0.0)[0][0]) + 1
        raise ParameterError(f"{label}: survivor non-positive entering age {age}")
    haz = pen / S_before
    if np.any(haz < 0.0) or np.any(haz > 1.0):
        age = int(np.nonzero((haz < 0.0) | (haz > 1.0))[0][0]) + 1
        raise ParameterError(f"{label}: hazard outside [0, 1] at age {age}")
    return haz


def penetrance_from_hazard(haz: np.ndarray, mortality: np.ndarray) -> np.ndarray:
    """Inverse of hazard_from_penetrance: pen(t) = haz(t) prod_{u<t}(1-haz-mort)."""
    haz = np.asarray(haz, dtype=float)
    mortality = np.asarray(mortality, dtype=float)
    surv = np.cumprod(1.0 - haz - mortality)
    before = np.concatenate(([1.0], surv[:-1]))
    return haz * before


@dataclass(frozen=True)
class GenotypePosterior:
    probs: np.ndarray

    def __post_init__(self) -> None:
        total = float(self.probs.sum())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"posterior sums to {total!r}")
        self.probs.flags.writeable = False

    def __getitem__(self, genotype: int) -> float:
        return float(self.probs[genotype])


class ModelTables:
    """Derived per-parameter-set lookup tables (penetrance stacks, hazards)."""

    def __init__(self, params: ParameterSet) -> None:
        self.params = params
        self._pen: dict[tuple[str, str, str], np.ndarray] = {}
        self._cum: dict[tuple[str, str, str], np.ndarray] = {}
        self._haz: dict[tuple[str, str], np.ndarray] = {}

    def pen_stack(self, cancer: str, sex: str, race: str) -> np.ndarray:
        key = (cancer, sex, effective_race(race))
        if key not in self._pen:
            stack = np.stack(
                [self.params.penetrance_for(cancer, sex, g, race) for g in range(4)]
            )
            stack.flags.writeable = False
            self._pen[key] = stack
        return self._pen[key]

    def cum_stack(self, cancer: str, sex: str, race: str) -> np.ndarray:
        key = (cancer, sex, effective_race(race))
        if key not in self._cum:
            cum = np.cumsum(self.pen_stack(cancer, sex, race), axis=1)
            cum.flags.writeable = False
            self._cum[key] = cum
        return self._cum[key]

    def breast_hazards(self, sex: str, race: str) -> np.ndarray:
        """Genotype-stacked breast hazards (4, 94) for projection."""
        key = (sex, effective_race(race))
        if key not in self._haz:
            stack = np.stack(
                [
                    hazard_from_penetrance(
                        self.params.penetrance_for("breast", sex, g, race),
                        self.params.mortality,
                        label=f"breast:{sex}:{g}:{race}",
                    )
                    for g in range(4)
                ]
            )
            stack.flags.writeable = False
            self._haz[key] = stack
        return self._haz[key]


_TABLE_CACHE: "WeakKeyDictionary[ParameterSet, ModelTables]" = WeakKeyDictionary()


def tables_for(params: ParameterSet) -> ModelTables:
    tables = _TABLE_CACHE.get(params)
    if tables is None:
        tables = ModelTables(params)
        _TABLE_CACHE[params] = tables
    return tables


def member_likelihood(member: Relative, tables: ModelTables) -> np.ndarray:
    """P(observed phenotypes | genotype) as a 4-vector."""
    like = np.ones(4)

    window = member.age
    if member.prophylactic_mastectomy_age is not None:
        window = min(window, member.prophylactic_mastectomy_age)
    if member.breast_cancer is not None:
        like = like * tables.pen_stack("breast", member.sex, member.race)[:, member.breast_cancer - 1]
    else:
        like = like * (1.0 - tables.cum_stack("breast", member.sex, member.race)[:, window - 1])

    if member.sex == "female":
        window = member.age
        if member.prophylactic_oophorectomy_age is not None:
            window = min(window, member.prophylactic_oophorectomy_age)
        if member.ovarian_cancer is not None:
            like = like * tables.pen_stack("ovarian", "female", member.race)[:, member.ovarian_cancer - 1]
        else:
            like = like * (1.0 - tables.cum_stack("ovarian", "female", member.race)[:, window - 1])

    if member.genetic_test is not None:
        mask = np.zeros(4)
        mask[TEST_TO_GENOTYPE[member.genetic_test]] = 1.0
        like = like * mask
    return like


def assemble_peeling_inputs(
    p: Pedigree, tables: ModelTables
) -> tuple[np.ndarray, np.ndarray, np.ndarray, bool, bool, bool]:
    """Build the (L, groups) arrays plus latent-couple materialization flags.

    Latent parents are materialized exactly when any parental-side member is
    observed; latent grandparent couples exactly when their side is observed.
    The brute-force oracle in the test suite follows the same rule, so both
    describe the same joint model.
    """
    n = len(p.members)
    L = np.empty((n, 4))
    groups = np.empty(n, dtype=np.int64)
    for i, m in enumerate(p.members):
        L[i] = member_likelihood(m, tables)
        groups[i] = _RELATION_GROUP[m.relation]
    relations = {m.relation for m in p.members}
    mat_parents = bool(relations & _PARENT_SIDE)
    mat_mgp = bool(relations & _MATERNAL_UPPER)
    mat_pgp = bool(relations & _PATERNAL_UPPER)
    prior = tables.params.genotype_prior(p.proband.ashkenazi)
    return prior, L, groups, mat_parents, mat_mgp, mat_pgp


def carrier_posterior(p: Pedigree, params: ParameterSet) -> GenotypePosterior:
    """Genotype posterior for the proband given the full family history."""
    tables = tables_for(params)
    prior, L, groups, mat_parents, mat_mgp, mat_pgp = assemble_peeling_inputs(p, tables)
    probs = K.peel_posterior(prior, prior, L, groups, mat_parents, mat_mgp, mat_pgp)
    probs = np.asarray(probs, dtype=float)
    return GenotypePosterior(probs=probs / probs.sum())


def _check_horizon(a: int, tau: int) -> None:
    if a < 1:
        raise ValueError("baseline age must be at least 1")
    if tau < 1:
        raise ValueError("projection horizon must be at least 1 year")
    if a + tau > N_AGES:
        raise ValueError(f"horizon {a}+{tau} exceeds table support (age {N_AGES})")


def genotype_future_risk(
    genotype: int,
    a: int,
    tau: int,
    params: ParameterSet,
    race: str = "white",
    sex: str = "female",
) -> float:
    """P(breast onset in (a, a+tau] | genotype, event-free and alive at a)."""
    _check_horizon(a, tau)
    haz = tables_for(params).breast_hazards(sex, race)[genotype]
    return K.cumulative_risk(haz, params.mortality, a, tau)


def require_baseline_cancer_free(p: Pedigree, a: int, model: str) -> None:
    onset = p.proband.breast_cancer
    if onset is not None and onset <= a:
        raise ModelEligibilityError(model, f"proband has breast cancer at baseline age {a}")


def brcapro_risk(p: Pedigree, a: int, tau: int, params: ParameterSet) -> float:
    """Posterior-weighted mixture of genotype-conditional future risks."""
    require_baseline_cancer_free(p, a, "brcapro")
    _check_horizon(a, tau)
    posterior = carrier_posterior(p, params)
    tables = tables_for(params)
    haz = tables.breast_hazards("female", p.proband.race)
    total = 0.0
    for g in range(4):
        total += posterior[g] * K.cumulative_risk(haz[g], params.mortality, a, tau)
    return total
