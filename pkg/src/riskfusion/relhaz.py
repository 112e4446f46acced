"""Questionnaire-based relative-hazard model and its absolute-risk projection.

The relative hazard is an exponentiated sum of indicator terms over five
risk factors; it is piecewise constant in age with a single break at 50.
Absolute risk integrates the baseline cause-specific hazard, rescaled to the
no-risk-factor level by the attributable-risk factor (1 - AR), against the
individual relative hazard under competing mortality.  The baseline grid is
piecewise constant on 13 five-year intervals starting at age 20; ages in
[85, 90) reuse the terminal interval's rates.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from riskfusion.errors import ModelEligibilityError
from riskfusion.parameters import CovariateDistribution, ParameterSet, effective_race
from riskfusion.pedigree import RiskFactors

MIN_AGE = 20
MAX_PROJECTION_AGE = 90


def x1_category(age_at_menarche: Optional[int]) -> str:
    """Menarche age category; unknown behaves as the >= 14 reference."""
    if age_at_menarche is None or age_at_menarche >= 14:
        return "ge14"
    if age_at_menarche >= 12:
        return "12_13"
    return "lt12"


def x2_category(num_biopsies: Optional[int]) -> str:
    if num_biopsies is None or num_biopsies == 0:
        return "0"
    return "1" if num_biopsies == 1 else "2"


def x3_category(age_first_live_birth: int) -> str:
    if age_first_live_birth < 20:
        return "lt20"
    if age_first_live_birth <= 24:
        return "20_24"
    if age_first_live_birth <= 29:
        return "25_29"
    return "ge30"


def x5_category(atypical_hyperplasia: Optional[int]) -> str:
    if atypical_hyperplasia is None:
        return "unknown"
    return str(atypical_hyperplasia)


def indicator_vector(
    age_ge_50: bool, x1: str, x2: str, x3: str, x4: int, x5: str
) -> np.ndarray:
    """The 19 indicator terms of the log relative hazard, in coefficient order.

    Category vocabulary matches the covariate-distribution tables: x1 in
    {lt12, 12_13, ge14}, x2 in {0, 1, 2} with 2 meaning two or more, x3 in
    {lt20, 20_24, 25_29, ge30}, x5 in {0, 1, unknown}.  x4 is the raw count;
    the main effect hits exactly at 1 and exactly at 2 while the first-birth
    interactions use the 2-or-more bucket, mirroring the model's published
    indicator structure.
    """
    biopsy_pos = x2 in ("1", "2")
    v = np.zeros(19)
    v[0] = x1 == "12_13"
    v[1] = x1 == "lt12"
    v[2] = x2 == "1"
    v[3] = x2 == "2"
    v[4] = age_ge_50 and x2 == "1"
    v[5] = age_ge_50 and biopsy_pos
    v[6] = x3 == "20_24"
    v[7] = x3 == "25_29"
    v[8] = x3 == "ge30"
    v[9] = x4 == 1
    v[10] = x4 == 2
    v[11] = x3 == "20_24" and x4 == 1
    v[12] = x3 == "25_29" and x4 == 1
    v[13] = x3 == "ge30" and x4 == 1
    v[14] = x3 == "20_24" and x4 >= 2
    v[15] = x3 == "25_29" and x4 >= 2
    v[16] = x3 == "ge30" and x4 >= 2
    v[17] = biopsy_pos and x5 == "0"
    v[18] = biopsy_pos and x5 == "1"
    return v


def categories_of(X: RiskFactors) -> tuple[str, str, str, int, str]:
    return (
        x1_category(X.age_at_menarche),
        x2_category(X.num_biopsies),
        x3_category(X.age_first_live_birth),
        X.affected_first_degree,
        x5_category(X.atypical_hyperplasia),
    )


def relative_hazard(t: float, X: RiskFactors, coeffs: np.ndarray) -> float:
    x1, x2, x3, x4, x5 = categories_of(X)
    v = indicator_vector(t >= 50, x1, x2, x3, x4, x5)
    return float(math.exp(float(np.dot(coeffs, v))))


def attributable_fraction(
    dist: CovariateDistribution, coeffs: np.ndarray, band: str
) -> float:
    """AR = 1 - 1/E[r] over the factorized population distribution.

    x1, x2, x5 vary independently; (x3, x4) follow their joint table.  The
    expectation is an exact finite sum over the category grid.
    """
    age_ge_50 = band == "over50"
    expected = 0.0
    for (c3, c4), p34 in dist.x3x4.items():
        x4 = int(c4)
        for c1, p1 in dist.x1.items():
            for c2, p2 in dist.x2.items():
                for c5, p5 in dist.x5.items():
                    w = p34 * p1 * p2 * p5
                    if w == 0.0:
                        continue
                    v = indicator_vector(age_ge_50, c1, c2, c3, x4, c5)
                    expected += w * math.exp(float(np.dot(coeffs, v)))
    return 1.0 - 1.0 / expected


def normalized_relative_hazard(
    t: float, X: RiskFactors, params: ParameterSet, race: str
) -> float:
    """r0(t, X) = r(t, X) * (1 - AR(t)); population-average value is 1."""
    coeffs = params.coefficients_for(race)
    return relative_hazard(t, X, coeffs) * params.one_minus_ar(race, int(t))


def normalized_pair(X: RiskFactors, params: ParameterSet, race: str) -> tuple[float, float]:
    """(r0 before 50, r0 from 50 on); the only two values r0 takes."""
    return (
        normalized_relative_hazard(49, X, params, race),
        normalized_relative_hazard(50, X, params, race),
    )


def _check_window(a: float, tau: float) -> None:
    if a < MIN_AGE:
        raise ModelEligibilityError(
            "bcrat", f"baseline age {a} is below the model's minimum age {MIN_AGE}"
        )
    if tau <= 0:
        raise ValueError("projection horizon must be positive")
    if a + tau > MAX_PROJECTION_AGE:
        raise ValueError(
            f"projection to age {a + tau} exceeds the baseline grid (age {MAX_PROJECTION_AGE})"
        )


def _accumulate(
    a: float, tau: float, X: RiskFactors, params: ParameterSet, race: str
) -> tuple[float, float]:
    """Closed-form risk and all-cause survival over [a, a+tau].

    Within each grid cell every rate is constant, so each segment contributes
    S * h_B/(h_B+h_D) * (1 - exp(-(h_B+h_D) * dt)) exactly.
    """
    race = effective_race(race)
    starts, lam_b, lam_d = params.baseline_for(race)
    coeffs = params.coefficients_for(race)
    edges = np.append(starts, [starts[-1] + 5.0, float(MAX_PROJECTION_AGE)])

    risk = 0.0
    survival = 1.0
    t0 = float(a)
    end = float(a) + float(tau)
    while t0 < end - 1e-12:
        cell = int(np.searchsorted(edges, t0, side="right")) - 1
        idx = min(cell, len(starts) - 1)
        t1 = min(float(edges[cell + 1]) if cell + 1 < len(edges) else end, end)
        one_minus_ar = params.one_minus_ar(race, int(t0))
        h_b = lam_b[idx] * one_minus_ar * relative_hazard(t0, X, coeffs)
        h_d = lam_d[idx]
        dt = t1 - t0
        total = h_b + h_d
        if total > 0.0:
            decay = math.exp(-total * dt)
            risk += survival * (h_b / total) * (1.0 - decay)
            survival *= decay
        t0 = t1
    return risk, survival


def bcrat_absolute_risk(
    a: float, tau: float, X: RiskFactors, params: ParameterSet, race: str = "white"
) -> float:
    """P(breast event in (a, a+tau] | event-free at a, X) for ages in [20, 90]."""
    _check_window(a, tau)
    risk, _ = _accumulate(a, tau, X, params, race)
    return risk


def bcrat_all_cause_survival(
    a: float, tau: float, X: RiskFactors, params: ParameterSet, race: str = "white"
) -> float:
    _check_window(a, tau)
    _, survival = _accumulate(a, tau, X, params, race)
    return survival
