"""Model dispatch: one entry point for scoring any model on any proband."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from riskfusion.cohort import CohortRecord
from riskfusion.combine import combined_risk_m
from riskfusion.ensemble import FittedEnsemble, predict_ensemble
from riskfusion.errors import ModelEligibilityError
from riskfusion.mendelian import (
    brcapro_risk,
    carrier_posterior,
    require_baseline_cancer_free,
)
from riskfusion.parameters import ParameterSet
from riskfusion.pedigree import Pedigree, RiskFactors
from riskfusion.relhaz import MAX_PROJECTION_AGE, MIN_AGE, bcrat_absolute_risk

BASE_MODELS = ("brcapro", "bcrat", "combined_m")

CARRIER_TESTS = ("BRCA1+", "BRCA2+", "both+")


def is_known_carrier(pedigree: Pedigree) -> bool:
    return pedigree.proband.genetic_test in CARRIER_TESTS


def check_eligibility(
    model: str,
    pedigree: Pedigree,
    a: int,
    tau: int,
    needs_relhaz: bool,
) -> None:
    require_baseline_cancer_free(pedigree, a, model)
    if needs_relhaz:
        if is_known_carrier(pedigree):
            raise ModelEligibilityError(
                model, "not recommended for probands with a positive BRCA1/2 test"
            )
        if a < MIN_AGE:
            raise ModelEligibilityError(
                model, f"hazard model covers ages {MIN_AGE} and up; got {a}"
            )
        if a + tau > MAX_PROJECTION_AGE:
            raise ModelEligibilityError(
                model,
                f"projection must end by age {MAX_PROJECTION_AGE}; got {a + tau}",
            )


def score_model(
    model: str,
    pedigree: Pedigree,
    X: RiskFactors,
    tau: int,
    params: ParameterSet,
    a: Optional[int] = None,
    ensembles: Optional[dict[str, FittedEnsemble]] = None,
    use_family_history: bool = True,
) -> float:
    """Risk of breast cancer within tau years for one proband under one model."""
    proband = pedigree.proband
    if a is None:
        a = proband.age
    race = proband.race if proband.race != "unknown" else "white"

    if model == "brcapro":
        check_eligibility(model, pedigree, a, tau, needs_relhaz=False)
        return brcapro_risk(pedigree, a, tau, params)
    if model == "bcrat":
        check_eligibility(model, pedigree, a, tau, needs_relhaz=True)
        return bcrat_absolute_risk(a, tau, X, params, race)
    if model == "combined_m":
        check_eligibility(model, pedigree, a, tau, needs_relhaz=False)
        return combined_risk_m(
            pedigree, X, a, tau, params, use_family_history=use_family_history
        )
    if ensembles and model in ensembles:
        check_eligibility(model, pedigree, a, tau, needs_relhaz=True)
        fitted = ensembles[model]
        p1 = brcapro_risk(pedigree, a, tau, params)
        p2 = bcrat_absolute_risk(a, tau, X, params, race)
        if fitted.kind == "fixed_horizon":
            if tau != fitted.tau_grid[0]:
                raise ModelEligibilityError(
                    model,
                    f"trained for a {fitted.tau_grid[0]}-year horizon; got {tau}",
                )
            return float(predict_ensemble(fitted, np.array([p1]), np.array([p2]))[0])
        if not fitted.tau_grid[0] <= tau <= fitted.tau_grid[-1]:
            raise ModelEligibilityError(
                model,
                f"trained for horizons {fitted.tau_grid[0]}..{fitted.tau_grid[-1]}; got {tau}",
            )
        return float(
            predict_ensemble(fitted, np.array([p1]), np.array([p2]), tau=float(tau))[0]
        )
    raise ValueError(f"unknown model {model!r}")


def cohort_base_predictions(
    records: Sequence[CohortRecord],
    tau: int,
    params: ParameterSet,
    models: Sequence[str] = BASE_MODELS,
    use_family_history: bool = True,
) -> dict[str, np.ndarray]:
    """Score every base model on every cohort record at one horizon."""
    out = {m: np.empty(len(records)) for m in models}
    for i, rec in enumerate(records):
        for m in models:
            out[m][i] = score_model(
                m,
                rec.pedigree,
                rec.risk_factors,
                tau,
                params,
                a=rec.baseline_age,
                use_family_history=use_family_history,
            )
    return out


def attach_ensemble_predictions(
    base: dict[str, np.ndarray],
    ensembles: dict[str, FittedEnsemble],
    tau: int,
) -> dict[str, np.ndarray]:
    """Extend a base prediction table with ensemble model columns."""
    out = dict(base)
    for name, fitted in ensembles.items():
        if fitted.kind == "fixed_horizon":
            if tau != fitted.tau_grid[0]:
                raise ModelEligibilityError(
                    name, f"trained for a {fitted.tau_grid[0]}-year horizon; got {tau}"
                )
            out[name] = predict_ensemble(fitted, base["brcapro"], base["bcrat"])
        else:
            out[name] = predict_ensemble(
                fitted, base["brcapro"], base["bcrat"], tau=float(tau)
            )
    return out


def carrier_probabilities(pedigree: Pedigree, params: ParameterSet) -> dict[str, float]:
    """Posterior carrier summary for display surfaces."""
    post = carrier_posterior(pedigree, params)
    return {
        "none": post[0],
        "brca1_only": post[1],
        "brca2_only": post[2],
        "both": post[3],
        "any": post[1] + post[2] + post[3],
    }
