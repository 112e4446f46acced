#!/usr/bin/env python
"""Regenerate the shipped synthetic parameter set under src/riskfusion/data/params-default.

Everything here is synthetic but shaped like the published tables: smooth
monotone hazards, carrier penetrance far above non-carrier, NHIS-like
covariate frequencies.  The relative-hazard coefficients are not free: for
each race the first-birth main effect (beta 9) and the over-50 biopsy term
(beta 6) are solved numerically so that 1/E[r] over the population covariate
distribution equals the stored normalization factor to machine precision.
That makes the population-average normalized hazard exactly 1 in both age
bands, which the scoring code relies on.

Run from the repository root:

    python tools/make_params.py
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import sys
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from riskfusion.mendelian import hazard_from_penetrance, penetrance_from_hazard
from riskfusion.parameters import (
    BANDS,
    CovariateDistribution,
    N_AGES,
    PARAM_RACES,
)
from riskfusion.relhaz import attributable_fraction

OUT = ROOT / "src" / "riskfusion" / "data" / "params-default"

AGES = np.arange(1, N_AGES + 1, dtype=float)

# Non-carrier breast-hazard multipliers by race; carriers share one curve.
RACE_BREAST_SCALE = {
    "white": 1.0,
    "black": 0.92,
    "hispanic": 0.80,
    "asian": 0.62,
    "native_american": 0.74,
}

# Stored normalization factors (1 - AR) by (race, band).  The coefficient
# solver below makes 1/E[r] reproduce these exactly.
NORMALIZATION = {
    ("white", "under50"): 1.81,
    ("white", "over50"): 1.96,
    ("black", "under50"): 1.41,
    ("black", "over50"): 1.44,
    ("hispanic", "under50"): 1.37,
    ("hispanic", "over50"): 1.41,
    ("asian", "under50"): 2.10,
    ("asian", "over50"): 2.43,
    ("native_american", "under50"): 1.55,
    ("native_american", "over50"): 1.94,
}

# First-birth coefficients must be negative for 1/E[r] > 1 to be reachable;
# the per-race scale keeps the beta-9 bracket feasible for every target.
X3_SCALE = {
    "white": 1.0,
    "black": 0.8,
    "hispanic": 0.75,
    "asian": 1.45,
    "native_american": 1.1,
}


def sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-z))


def mortality_curve() -> np.ndarray:
    return 0.0003 + 0.00022 * np.exp(0.086 * np.maximum(AGES - 20.0, 0.0))


def breast_hazard(genotype: int, race: str) -> np.ndarray:
    lam0 = 0.0042 * sigmoid((AGES - 48.0) / 6.0) * RACE_BREAST_SCALE[race]
    lam1 = 0.027 * sigmoid((AGES - 40.0) / 7.0)
    lam2 = 0.021 * sigmoid((AGES - 45.0) / 8.0)
    if genotype == 0:
        return lam0
    if genotype == 1:
        return lam1
    if genotype == 2:
        return lam2
    return 1.0 - (1.0 - lam1) * (1.0 - lam2)


def ovarian_hazard(genotype: int) -> np.ndarray:
    lam0 = 0.0006 * sigmoid((AGES - 56.0) / 8.0)
    lam1 = 0.0085 * sigmoid((AGES - 51.0) / 7.0)
    lam2 = 0.0032 * sigmoid((AGES - 56.0) / 8.0)
    if genotype == 0:
        return lam0
    if genotype == 1:
        return lam1
    if genotype == 2:
        return lam2
    return 1.0 - (1.0 - lam1) * (1.0 - lam2)


def male_breast_hazard(genotype: int) -> np.ndarray:
    lam0 = 0.0000045 * sigmoid((AGES - 60.0) / 10.0)
    lam1 = 0.00009 * sigmoid((AGES - 58.0) / 10.0)
    lam2 = 0.0040 * sigmoid((AGES - 57.0) / 10.0)
    if genotype == 0:
        return lam0
    if genotype == 1:
        return lam1
    if genotype == 2:
        return lam2
    return 1.0 - (1.0 - lam1) * (1.0 - lam2)


def hazard_for(cancer: str, sex: str, genotype: int, race: str) -> np.ndarray:
    if cancer == "breast":
        if sex == "female":
            return breast_hazard(genotype, race)
        return male_breast_hazard(genotype)
    if sex == "female":
        return ovarian_hazard(genotype)
    return np.zeros(N_AGES)


def penetrance_csv(mort: np.ndarray) -> str:
    cols: dict[str, np.ndarray] = {}
    for race in PARAM_RACES:
        for cancer in ("breast", "ovarian"):
            for sex in ("female", "male"):
                for g in (0, 1, 2, 3):
                    haz = hazard_for(cancer, sex, g, race)
                    pen = penetrance_from_hazard(haz, mort)
                    back = hazard_from_penetrance(pen, mort)
                    assert np.allclose(back, haz, atol=1e-13), (cancer, sex, g, race)
                    cols[f"{cancer}:{sex}:{g}:{race}"] = pen
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    names = sorted(cols)
    w.writerow(["age", *names])
    for i in range(N_AGES):
        w.writerow([i + 1, *(repr(float(cols[n][i])) for n in names)])
    return buf.getvalue()


def mortality_csv(mort: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["age", "rate"])
    for i in range(N_AGES):
        w.writerow([i + 1, repr(float(mort[i]))])
    return buf.getvalue()


def allele_frequencies_csv() -> str:
    rows = [
        ("brca1", "ashkenazi", 0.0066),
        ("brca2", "ashkenazi", 0.0062),
        ("brca1", "other", 0.0006),
        ("brca2", "other", 0.00065),
    ]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["locus", "ethnicity", "frequency"])
    for locus, eth, f in rows:
        w.writerow([locus, eth, repr(f)])
    return buf.getvalue()


def covariate_tables() -> dict[str, CovariateDistribution]:
    def joint(x3: dict[str, float], x4: dict[str, float]) -> dict[tuple[str, str], float]:
        return {(c3, c4): p3 * p4 for c3, p3 in x3.items() for c4, p4 in x4.items()}

    under = CovariateDistribution(
        x1={"lt12": 0.22, "12_13": 0.45, "ge14": 0.33},
        x2={"0": 0.88, "1": 0.09, "2": 0.03},
        x5={"0": 0.22, "1": 0.04, "unknown": 0.74},
        x3x4=joint(
            {"lt20": 0.10, "20_24": 0.28, "25_29": 0.36, "ge30": 0.26},
            {"0": 0.87, "1": 0.11, "2": 0.02},
        ),
    )
    over = CovariateDistribution(
        x1={"lt12": 0.20, "12_13": 0.44, "ge14": 0.36},
        x2={"0": 0.80, "1": 0.14, "2": 0.06},
        x5={"0": 0.25, "1": 0.05, "unknown": 0.70},
        x3x4=joint(
            {"lt20": 0.09, "20_24": 0.29, "25_29": 0.28, "ge30": 0.34},
            {"0": 0.83, "1": 0.14, "2": 0.03},
        ),
    )
    return {"under50": under, "over50": over}


def covariate_csv(dists: dict[str, CovariateDistribution]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["band", "factor", "category", "probability"])
    for band in BANDS:
        d = dists[band]
        for factor, table in (("x1", d.x1), ("x2", d.x2), ("x5", d.x5)):
            for cat in sorted(table):
                w.writerow([band, factor, cat, repr(table[cat])])
        for (c3, c4) in sorted(d.x3x4):
            w.writerow([band, "x3x4", f"{c3}|{c4}", repr(d.x3x4[(c3, c4)])])
    return buf.getvalue()


def base_coefficients(race: str) -> np.ndarray:
    s = X3_SCALE[race]
    beta = np.zeros(19)
    beta[0] = 0.10  # menarche 12-13
    beta[1] = 0.21  # menarche < 12
    beta[2] = 0.45  # one biopsy
    beta[3] = 0.74  # two or more biopsies
    beta[4] = 0.18  # age >= 50, one biopsy
    beta[5] = 0.0  # age >= 50, any biopsy: solved below
    beta[6] = -0.90 * s  # first birth 20-24
    beta[7] = -0.75 * s  # first birth 25-29
    beta[8] = 0.0  # first birth >= 30: solved below
    beta[9] = 0.52  # one affected first-degree relative
    beta[10] = 0.85  # two or more
    beta[11] = 0.12
    beta[12] = 0.18
    beta[13] = 0.30
    beta[14] = 0.16
    beta[15] = 0.26
    beta[16] = 0.42
    beta[17] = -0.18  # biopsy without atypical hyperplasia
    beta[18] = 0.62  # biopsy with atypical hyperplasia
    return beta


def solve_coefficients(
    race: str, dists: dict[str, CovariateDistribution]
) -> np.ndarray:
    beta = base_coefficients(race)

    def gap(index: int, band: str, value: float) -> float:
        # Stored factor N multiplies r, and E[N * r] must be 1, so the
        # computed 1 - AR = 1/E[r] has to equal N itself.
        beta[index] = value
        target_ar = 1.0 - NORMALIZATION[(race, band)]
        return attributable_fraction(dists[band], beta, band) - target_ar

    beta[8] = brentq(
        lambda v: gap(8, "under50", v), -40.0, 8.0, xtol=1e-14, rtol=1e-15
    )
    beta[5] = brentq(
        lambda v: gap(5, "over50", v), -40.0, 8.0, xtol=1e-14, rtol=1e-15
    )
    for band in BANDS:
        achieved = 1.0 - attributable_fraction(dists[band], beta, band)
        assert abs(achieved - NORMALIZATION[(race, band)]) < 1e-12, (race, band)
    return beta


def coefficients_csv(betas: dict[str, np.ndarray]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["race", "beta_index", "value"])
    for race in PARAM_RACES:
        for i in range(19):
            w.writerow([race, i + 1, repr(float(betas[race][i]))])
    return buf.getvalue()


def baseline_csv(mort: np.ndarray) -> str:
    """Composite 5-year cells: mean continuous rate over each interval."""
    starts = list(range(20, 85, 5))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["race", "interval_start", "breast_hazard", "death_hazard"])
    death_rate = -np.log(1.0 - mort)
    for race in PARAM_RACES:
        breast_rate = -np.log(1.0 - breast_hazard(0, race))
        for s in starts:
            lo, hi = s - 1, s + 4  # ages s..s+4 at index age-1
            w.writerow(
                [
                    race,
                    s,
                    repr(float(breast_rate[lo:hi].mean())),
                    repr(float(death_rate[lo:hi].mean())),
                ]
            )
    return buf.getvalue()


def normalization_csv() -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["race", "band", "one_minus_ar"])
    for race in PARAM_RACES:
        for band in BANDS:
            w.writerow([race, band, repr(NORMALIZATION[(race, band)])])
    return buf.getvalue()


def sim_config() -> dict:
    """Default cohort-simulation settings.

    Proband ages follow a discretized normal (median near 47, quartiles near
    38 and 56).  Family-size and covariate frequencies are deliberately
    riskier than the population tables above, the way a referral-clinic
    registry skews, so models that ignore the covariates underpredict.
    """
    ages = np.arange(25, 81)
    weights = np.exp(-0.5 * ((ages - 47.0) / 13.0) ** 2)
    weights /= weights.sum()
    proband_age = {str(int(a)): float(w) for a, w in zip(ages, weights)}

    counts = {
        "sister": {"0": 0.35, "1": 0.38, "2": 0.20, "3": 0.07},
        "brother": {"0": 0.34, "1": 0.38, "2": 0.21, "3": 0.07},
        "daughter": {"0": 0.30, "1": 0.35, "2": 0.25, "3": 0.10},
        "son": {"0": 0.30, "1": 0.36, "2": 0.24, "3": 0.10},
        "maternal_aunt": {"0": 0.38, "1": 0.33, "2": 0.19, "3": 0.10},
        "maternal_uncle": {"0": 0.40, "1": 0.33, "2": 0.18, "3": 0.09},
        "paternal_aunt": {"0": 0.38, "1": 0.33, "2": 0.19, "3": 0.10},
        "paternal_uncle": {"0": 0.40, "1": 0.33, "2": 0.18, "3": 0.09},
    }
    covariates = {
        "age_at_menarche": {
            "10": 0.10,
            "11": 0.22,
            "12": 0.30,
            "13": 0.16,
            "14": 0.15,
            "15": 0.07,
        },
        "biopsies": {"0": 0.62, "1": 0.24, "2": 0.14},
        "hyperplasia": {"0": 0.30, "1": 0.10, "unknown": 0.60},
    }
    return {
        "proband_age": proband_age,
        "counts": counts,
        "covariates": covariates,
        "age_gap": {"mean": 27.0, "sd": 6.0, "min": 14.0, "max": 45.0},
        "death_age": {"mean": 80.0, "sd": 15.0},
        "tau": 5,
        "race": "white",
        "ethnicity": "ashkenazi",
        "seed": 101,
    }


def stratum_rules_json() -> str:
    doc = {
        "rules": {
            "any_ovarian": True,
            "breast_onset_at_or_below": 50,
            "min_breast_count": 2,
        }
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def main() -> None:
    mort = mortality_curve()
    dists = covariate_tables()
    betas = {race: solve_coefficients(race, dists) for race in PARAM_RACES}

    files = {
        "penetrance.csv": penetrance_csv(mort),
        "mortality.csv": mortality_csv(mort),
        "allele_frequencies.csv": allele_frequencies_csv(),
        "relhaz_coefficients.csv": coefficients_csv(betas),
        "baseline_hazard.csv": baseline_csv(mort),
        "covariate_distribution.csv": covariate_csv(dists),
        "normalization.csv": normalization_csv(),
        "stratum_rules.json": stratum_rules_json(),
    }

    OUT.mkdir(parents=True, exist_ok=True)
    checksums = {}
    for name, text in files.items():
        data = text.encode("utf-8")
        (OUT / name).write_bytes(data)
        checksums[name] = "sha256:" + hashlib.sha256(data).hexdigest()

    manifest = {
        "name": "params-default",
        "version": "1",
        "non_clinical": True,
        "description": (
            "Synthetic parameter tables for development and testing; "
            "not calibrated to any population and unfit for clinical use."
        ),
        "files": checksums,
    }
    (OUT / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )

    config_path = OUT.parent / "sim-config-default.json"
    config_path.write_text(
        json.dumps(sim_config(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )

    for race in PARAM_RACES:
        b = betas[race]
        print(f"{race}: beta6={b[5]:+.6f} beta9={b[8]:+.6f}")
    print(f"wrote {len(files) + 1} files to {OUT}")


if __name__ == "__main__":
    main()
