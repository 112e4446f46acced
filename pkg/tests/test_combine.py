"""Penetrance-modification fusion of the two base models."""

from dataclasses import replace

import numpy as np
import pytest

from oracles import mc_event_probability, modified_hazard, random_pedigree
from riskfusion.combine import combined_risk_m, modified_noncarrier_risk
from riskfusion.errors import ModelEligibilityError, ParameterError
from riskfusion.mendelian import (
    brcapro_risk,
    carrier_posterior,
    genotype_future_risk,
    tables_for,
)
from riskfusion.parameters import PARAM_RACES
from riskfusion.pedigree import Pedigree, Relative
from riskfusion.relhaz import normalized_pair

from conftest import baseline_factors, single_proband


def unit_hazard_params(params):
    """A parameter set whose normalized relative hazard is identically 1."""
    return replace(
        params,
        relhaz_coefficients={r: np.zeros(19) for r in PARAM_RACES},
        normalization={(r, b): 1.0 for r in PARAM_RACES for b in ("under50", "over50")},
    )


def test_reduction_identity_unit_hazard(params):
    """With r0 == 1 the fused model is the pedigree model, proband by proband."""
    flat = unit_hazard_params(params)
    X = baseline_factors(num_biopsies=2, age_first_live_birth=33, atypical_hyperplasia=1)
    rng = np.random.default_rng(404)
    for _ in range(25):
        p = random_pedigree(rng, max_nodes=8)
        if p.proband.breast_cancer is not None:
            continue
        a = p.proband.age
        tau = min(10, 94 - a)
        assert combined_risk_m(p, X, a, tau, flat) == pytest.approx(
            brcapro_risk(p, a, tau, flat), abs=1e-12
        )


def test_unit_hazard_pair_is_exactly_one(params):
    flat = unit_hazard_params(params)
    X = baseline_factors(num_biopsies=1, atypical_hyperplasia=1)
    assert normalized_pair(X, flat, "white") == (1.0, 1.0)


def test_modified_noncarrier_monte_carlo(params):
    tables = tables_for(params)
    haz0 = tables.breast_hazards("female", "white")[0]
    X = baseline_factors(age_at_menarche=11, num_biopsies=1)
    for a, tau, seed in [(40, 10, 21), (55, 15, 22)]:
        exact = modified_noncarrier_risk(a, tau, X, params, "white")
        r_under, r_over = normalized_pair(X, params, "white")
        est, se = mc_event_probability(
            modified_hazard(haz0, r_under, r_over),
            params.mortality,
            a,
            tau,
            2_000_000,
            seed=seed,
        )
        assert abs(est - exact) < 3.5 * se


def test_combined_is_posterior_mixture(params):
    p = Pedigree(
        members=(
            Relative(id=1, relation="proband", sex="female", current_age_or_death_age=44, alive=True),
            Relative(id=2, relation="mother", sex="female", current_age_or_death_age=68, alive=True, breast_cancer=41),
        )
    )
    X = baseline_factors(num_biopsies=1, affected_first_degree=1)
    a, tau = 44, 10
    post = carrier_posterior(p, params)
    want = post[0] * modified_noncarrier_risk(a, tau, X, params, "unknown")
    for g in (1, 2, 3):
        want += post[g] * genotype_future_risk(g, a, tau, params, race="unknown")
    assert combined_risk_m(p, X, a, tau, params) == pytest.approx(want, abs=1e-15)


def test_family_history_toggle_zeroes_x4(params):
    X = baseline_factors(affected_first_degree=2, num_biopsies=1)
    a, tau = 45, 10
    without = modified_noncarrier_risk(a, tau, X, params, "white", use_family_history=False)
    explicit = modified_noncarrier_risk(
        a, tau, replace(X, affected_first_degree=0), params, "white"
    )
    assert without == explicit
    assert without < modified_noncarrier_risk(a, tau, X, params, "white")


def test_family_history_toggle_through_combined(params):
    p = single_proband(age=45)
    X = baseline_factors(affected_first_degree=1)
    with_fh = combined_risk_m(p, X, 45, 10, params, use_family_history=True)
    without_fh = combined_risk_m(p, X, 45, 10, params, use_family_history=False)
    assert without_fh < with_fh


def test_combined_rejects_baseline_case(params):
    p = single_proband(age=50, breast_cancer=45)
    with pytest.raises(ModelEligibilityError):
        combined_risk_m(p, baseline_factors(), 50, 5, params)


def test_modified_risk_survivor_breach_is_parameter_error(params):
    # a huge normalized hazard drives the per-year survivor factor negative
    broken = replace(
        params,
        normalization={
            (r, b): 4000.0 for r in PARAM_RACES for b in ("under50", "over50")
        },
    )
    with pytest.raises(ParameterError, match="survivor"):
        modified_noncarrier_risk(60, 20, baseline_factors(), broken, "white")


def test_modified_horizon_checks(params):
    X = baseline_factors()
    with pytest.raises(ValueError):
        modified_noncarrier_risk(0, 5, X, params, "white")
    with pytest.raises(ValueError):
        modified_noncarrier_risk(90, 5, X, params, "white")


def test_higher_covariates_raise_combined_risk(params):
    # menarche < 12, two biopsies, and hyperplasia all carry positive
    # coefficients for white under 50, so the fused risk must go up
    p = single_proband(age=45)
    lo = combined_risk_m(p, baseline_factors(), 45, 10, params)
    hi = combined_risk_m(
        p,
        baseline_factors(age_at_menarche=11, num_biopsies=2, atypical_hyperplasia=1),
        45,
        10,
        params,
    )
    assert hi > lo
