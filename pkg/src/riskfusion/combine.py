"""Penetrance-modification combination of the pedigree and questionnaire models.

The questionnaire relative hazard, rescaled by (1 - AR) so its population
average is 1, exponentiates the non-carrier per-year breast survival.  Only
the non-carrier hazard is modified; carrier projections pass through
unchanged, so the combined estimate is the carrier posterior mixture with a
covariate-adjusted non-carrier component.
"""

from __future__ import annotations

from dataclasses import replace

from riskfusion import _kernels as K
from riskfusion.errors import ParameterError
from riskfusion.mendelian import (
    _check_horizon,
    carrier_posterior,
    require_baseline_cancer_free,
    tables_for,
)
from riskfusion.parameters import ParameterSet
from riskfusion.pedigree import Pedigree, RiskFactors
from riskfusion.relhaz import normalized_pair


def modified_noncarrier_risk(
    a: int,
    tau: int,
    X: RiskFactors,
    params: ParameterSet,
    race: str = "white",
    use_family_history: bool = True,
) -> float:
    """Non-carrier future risk with per-year survival powered by r0(t, X).

    The per-year modified hazard is 1 - (1 - lambda0(t))^(r0(t,X)) and the
    survivor factor multiplies ((1 - lambda0(u))^(r0(u,X)) - lambda_D(u)).
    See docs/parameters.md for the alternative survivor convention this
    deliberately does not use.
    """
    _check_horizon(a, tau)
    if not use_family_history:
        X = replace(X, affected_first_degree=0)
    haz0 = tables_for(params).breast_hazards("female", race)[0]
    r0_under, r0_over = normalized_pair(X, params, race)
    try:
        return K.modified_risk(haz0, params.mortality, a, tau, r0_under, r0_over)
    except ValueError as exc:
        raise ParameterError(str(exc)) from None


def combined_risk_m(
    p: Pedigree,
    X: RiskFactors,
    a: int,
    tau: int,
    params: ParameterSet,
    use_family_history: bool = True,
) -> float:
    """Posterior-weighted mixture: modified non-carrier term, carrier terms as is."""
    require_baseline_cancer_free(p, a, "combined_m")
    _check_horizon(a, tau)
    posterior = carrier_posterior(p, params)
    race = p.proband.race
    haz = tables_for(params).breast_hazards("female", race)
    total = posterior[0] * modified_noncarrier_risk(
        a, tau, X, params, race, use_family_history
    )
    for g in (1, 2, 3):
        total += posterior[g] * K.cumulative_risk(haz[g], params.mortality, a, tau)
    return total
