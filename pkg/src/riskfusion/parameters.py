"""Parameter-set loading: penetrance, mortality, allele frequencies,
relative-hazard coefficients, baseline hazards, covariate distributions,
and normalization factors.

A parameter set is a directory of CSV/JSON files plus a manifest recording
sha256 checksums.  The shipped default set under ``riskfusion/data/params-default``
is synthetic but shaped like the literature tables (monotone hazards, carrier
penetrance far above non-carrier) and is labeled non-clinical in its manifest.

Ages run 1..94 throughout; arrays are indexed ``age - 1``.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from riskfusion.errors import ParameterError
from riskfusion.pedigree import MAX_AGE, StratumRules

N_AGES = 94
CANCERS = ("breast", "ovarian")
GENOTYPES = (0, 1, 2, 3)
PARAM_RACES = ("white", "black", "hispanic", "asian", "native_american")
BANDS = ("under50", "over50")

X1_CATEGORIES = ("lt12", "12_13", "ge14")
X2_CATEGORIES = ("0", "1", "2")
X5_CATEGORIES = ("0", "1", "unknown")
X3_CATEGORIES = ("lt20", "20_24", "25_29", "ge30")
X4_CATEGORIES = ("0", "1", "2")

PARAM_FILES = (
    "penetrance.csv",
    "mortality.csv",
    "allele_frequencies.csv",
    "relhaz_coefficients.csv",
    "baseline_hazard.csv",
    "covariate_distribution.csv",
    "normalization.csv",
    "stratum_rules.json",
)


def effective_race(race: str) -> str:
    """Map the open race vocabulary onto table keys; unknown uses white tables."""
    return "white" if race == "unknown" else race


def _read_rows(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))


@dataclass(frozen=True)
class CovariateDistribution:
    """Population covariate frequencies, constant within each age band.

    x1/x2/x5 are marginal category probabilities; x3x4 is a joint table over
    (age at first live birth category, affected first-degree count).
    """

    x1: dict[str, float]
    x2: dict[str, float]
    x5: dict[str, float]
    x3x4: dict[tuple[str, str], float]

    def validate(self, band: str) -> None:
        for name, table in (("x1", self.x1), ("x2", self.x2), ("x5", self.x5)):
            total = sum(table.values())
            if abs(total - 1.0) > 1e-9:
                raise ParameterError(
                    f"covariate distribution {name} ({band}) sums to {total!r}, expected 1"
                )
        total = sum(self.x3x4.values())
        if abs(total - 1.0) > 1e-9:
            raise ParameterError(
                f"covariate distribution x3x4 ({band}) sums to {total!r}, expected 1"
            )


@dataclass(frozen=True, eq=False)
class ParameterSet:
    """All model parameters, immutable after load.

    eq=False keeps instances hashable by identity so downstream caches can
    key derived tables off a loaded set.
    """

    penetrance: dict[tuple[str, str, int, str], np.ndarray]
    mortality: np.ndarray
    allele_frequencies: dict[tuple[str, str], float]
    relhaz_coefficients: dict[str, np.ndarray]
    baseline_starts: dict[str, np.ndarray]
    baseline_breast: dict[str, np.ndarray]
    baseline_death: dict[str, np.ndarray]
    covariate_distribution: dict[str, CovariateDistribution]
    normalization: dict[tuple[str, str], float]
    stratum_rules: StratumRules
    checksums: dict[str, str]
    source: str
    label: dict

    def penetrance_for(self, cancer: str, sex: str, genotype: int, race: str) -> np.ndarray:
        key = (cancer, sex, genotype, effective_race(race))
        try:
            return self.penetrance[key]
        except KeyError:
            raise ParameterError(f"no penetrance table for {key}") from None

    def genotype_prior(self, ashkenazi: bool) -> np.ndarray:
        eth = "ashkenazi" if ashkenazi else "other"
        f1 = self.allele_frequencies[("brca1", eth)]
        f2 = self.allele_frequencies[("brca2", eth)]
        q1 = 1.0 - (1.0 - f1) ** 2
        q2 = 1.0 - (1.0 - f2) ** 2
        return np.array(
            [(1 - q1) * (1 - q2), q1 * (1 - q2), (1 - q1) * q2, q1 * q2], dtype=float
        )

    def one_minus_ar(self, race: str, age: int) -> float:
        band = "under50" if age < 50 else "over50"
        return self.normalization[(effective_race(race), band)]

    def coefficients_for(self, race: str) -> np.ndarray:
        return self.relhaz_coefficients[effective_race(race)]

    def baseline_for(self, race: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        r = effective_race(race)
        return self.baseline_starts[r], self.baseline_breast[r], self.baseline_death[r]


def _parse_penetrance(text: str) -> dict[tuple[str, str, int, str], np.ndarray]:
    rows = _read_rows(text)
    if len(rows) != N_AGES:
        raise ParameterError(f"penetrance.csv has {len(rows)} rows, expected {N_AGES}")
    columns = [c for c in rows[0].keys() if c != "age"]
    tables: dict[tuple[str, str, int, str], np.ndarray] = {}
    for col in columns:
        parts = col.split(":")
        if len(parts) != 4:
            raise ParameterError(f"penetrance column {col!r} is not cancer:sex:genotype:race")
        cancer, sex, genotype_s, race = parts
        key = (cancer, sex, int(genotype_s), race)
        values = np.empty(N_AGES, dtype=float)
        for i, row in enumerate(rows):
            if int(row["age"]) != i + 1:
                raise ParameterError(f"penetrance.csv row {i} has age {row['age']}, expected {i + 1}")
            values[i] = float(row[col])
        if np.any(values < 0) or np.any(values > 1):
            raise ParameterError(f"penetrance column {col!r} leaves [0, 1]")
        if values.sum() > 1.0 + 1e-12:
            raise ParameterError(f"penetrance column {col!r} has cumulative mass > 1")
        values.flags.writeable = False
        tables[key] = values
    return tables


def _parse_mortality(text: str) -> np.ndarray:
    rows = _read_rows(text)
    if len(rows) != N_AGES:
        raise ParameterError(f"mortality.csv has {len(rows)} rows, expected {N_AGES}")
    values = np.empty(N_AGES, dtype=float)
    for i, row in enumerate(rows):
        if int(row["age"]) != i + 1:
            raise ParameterError(f"mortality.csv row {i} has age {row['age']}, expected {i + 1}")
        values[i] = float(row["rate"])
    if np.any(values < 0) or np.any(values > 1):
        raise ParameterError("mortality rates leave [0, 1]")
    values.flags.writeable = False
    return values


def _parse_allele_frequencies(text: str) -> dict[tuple[str, str], float]:
    out: dict[tuple[str, str], float] = {}
    for row in _read_rows(text):
        f = float(row["frequency"])
        if not (0.0 <= f < 1.0):
            raise ParameterError(f"allele frequency {f!r} out of range")
        out[(row["locus"], row["ethnicity"])] = f
    for locus in ("brca1", "brca2"):
        for eth in ("ashkenazi", "other"):
            if (locus, eth) not in out:
                raise ParameterError(f"allele_frequencies.csv missing ({locus}, {eth})")
    return out


def _parse_coefficients(text: str) -> dict[str, np.ndarray]:
    out: dict[str, np.ndarray] = {}
    for row in _read_rows(text):
        race = row["race"]
        idx = int(row["beta_index"])
        if not (1 <= idx <= 19):
            raise ParameterError(f"beta_index {idx} out of range 1..19")
        arr = out.setdefault(race, np.full(19, np.nan))
        arr[idx - 1] = float(row["value"])
    for race in PARAM_RACES:
        if race not in out or np.any(np.isnan(out[race])):
            raise ParameterError(f"relhaz_coefficients.csv incomplete for race {race!r}")
        if not np.all(np.isfinite(out[race])):
            raise ParameterError(f"relhaz coefficients not finite for race {race!r}")
        out[race].flags.writeable = False
    return out


def _parse_baseline(text: str) -> tuple[dict, dict, dict]:
    starts: dict[str, list] = {}
    breast: dict[str, list] = {}
    death: dict[str, list] = {}
    for row in _read_rows(text):
        race = row["race"]
        starts.setdefault(race, []).append(float(row["interval_start"]))
        breast.setdefault(race, []).append(float(row["breast_hazard"]))
        death.setdefault(race, []).append(float(row["death_hazard"]))
    starts_a: dict[str, np.ndarray] = {}
    breast_a: dict[str, np.ndarray] = {}
    death_a: dict[str, np.ndarray] = {}
    for race in PARAM_RACES:
        if race not in starts:
            raise ParameterError(f"baseline_hazard.csv missing race {race!r}")
        s = np.asarray(starts[race], dtype=float)
        if len(s) != 13:
            raise ParameterError(f"baseline for {race!r} has {len(s)} intervals, expected 13")
        if np.any(np.diff(s) <= 0):
            raise ParameterError(f"baseline intervals for {race!r} not increasing")
        b = np.asarray(breast[race], dtype=float)
        d = np.asarray(death[race], dtype=float)
        if np.any(b < 0) or np.any(d < 0):
            raise ParameterError(f"baseline hazards for {race!r} negative")
        for arr in (s, b, d):
            arr.flags.writeable = False
        starts_a[race] = s
        breast_a[race] = b
        death_a[race] = d
    return starts_a, breast_a, death_a


def _parse_covariates(text: str) -> dict[str, CovariateDistribution]:
    acc: dict[str, dict[str, dict]] = {
        band: {"x1": {}, "x2": {}, "x5": {}, "x3x4": {}} for band in BANDS
    }
    for row in _read_rows(text):
        band = row["band"]
        factor = row["factor"]
        if band not in BANDS or factor not in ("x1", "x2", "x5", "x3x4"):
            raise ParameterError(f"unknown covariate row ({factor!r}, {row['category']!r}, {band!r})")
        p = float(row["probability"])
        if p < 0:
            raise ParameterError("covariate probability negative")
        if factor == "x3x4":
            x3, x4 = row["category"].split("|")
            acc[band][factor][(x3, x4)] = p
        else:
            acc[band][factor][row["category"]] = p
    out: dict[str, CovariateDistribution] = {}
    for band in BANDS:
        dist = CovariateDistribution(
            x1=acc[band]["x1"], x2=acc[band]["x2"], x5=acc[band]["x5"], x3x4=acc[band]["x3x4"]
        )
        dist.validate(band)
        out[band] = dist
    return out


def _parse_normalization(text: str) -> dict[tuple[str, str], float]:
    out: dict[tuple[str, str], float] = {}
    for row in _read_rows(text):
        value = float(row["one_minus_ar"])
        if value <= 0:
            raise ParameterError("normalization factor must be positive")
        out[(row["race"], row["band"])] = value
    for race in PARAM_RACES:
        for band in BANDS:
            if (race, band) not in out:
                raise ParameterError(f"normalization.csv missing ({race}, {band})")
    return out


def _integrity_check(pen: dict, mortality: np.ndarray) -> None:
    # Eq-style conversion feasibility: the competing hazards must leave room
    # for survival at every age, otherwise downstream recursions divide by
    # a non-positive survivor.  Checked here once so model code can assume it.
    from riskfusion.mendelian import hazard_from_penetrance

    for key, table in pen.items():
        hazards = hazard_from_penetrance(table, mortality, label=str(key))
        bad = np.nonzero(hazards + mortality > 1.0 + 1e-12)[0]
        if bad.size:
            raise ParameterError(
                f"hazard + mortality exceeds 1 for {key} at age {int(bad[0]) + 1}"
            )


def _sha256(data: bytes) -> str:
    return "sha256:" + hashlib.sha256(data).hexdigest()


def load_parameters(path: Optional[str | Path] = None) -> ParameterSet:
    """Load a parameter directory; None loads the shipped default set."""
    if path is None:
        root = resources.files("riskfusion").joinpath("data/params-default")
        read = lambda name: root.joinpath(name).read_bytes()  # noqa: E731
        source = "builtin:params-default"
    else:
        base = Path(path)
        if not base.is_dir():
            raise ParameterError(f"parameter directory {base} does not exist")
        read = lambda name: (base / name).read_bytes()  # noqa: E731
        source = str(base)

    blobs: dict[str, bytes] = {}
    for name in PARAM_FILES:
        try:
            blobs[name] = read(name)
        except (FileNotFoundError, OSError) as exc:
            raise ParameterError(f"missing parameter file {name}: {exc}") from None

    manifest: dict = {}
    try:
        manifest = json.loads(read("manifest.json").decode("utf-8"))
    except (FileNotFoundError, OSError):
        manifest = {}

    checksums = {name: _sha256(data) for name, data in blobs.items()}
    recorded = manifest.get("files", {})
    for name, digest in recorded.items():
        if name in checksums and checksums[name] != digest:
            raise ParameterError(f"checksum mismatch for {name}: manifest says {digest}")

    text = {name: data.decode("utf-8") for name, data in blobs.items()}
    pen = _parse_penetrance(text["penetrance.csv"])
    mortality = _parse_mortality(text["mortality.csv"])
    _integrity_check(pen, mortality)
    starts, breast, death = _parse_baseline(text["baseline_hazard.csv"])

    params = ParameterSet(
        penetrance=pen,
        mortality=mortality,
        allele_frequencies=_parse_allele_frequencies(text["allele_frequencies.csv"]),
        relhaz_coefficients=_parse_coefficients(text["relhaz_coefficients.csv"]),
        baseline_starts=starts,
        baseline_breast=breast,
        baseline_death=death,
        covariate_distribution=_parse_covariates(text["covariate_distribution.csv"]),
        normalization=_parse_normalization(text["normalization.csv"]),
        stratum_rules=StratumRules.from_json_dict(json.loads(text["stratum_rules.json"])),
        checksums=checksums,
        source=source,
        label={k: manifest.get(k) for k in ("name", "version", "non_clinical", "description")},
    )
    return params
