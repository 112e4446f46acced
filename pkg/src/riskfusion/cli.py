"""Command-line surface: score, simulate, fit, evaluate, serve."""

from __future__ import annotations

import csv
import json
import sys
from functools import wraps
from pathlib import Path
from typing import Optional

import click
import numpy as np

from riskfusion import __version__
from riskfusion.cohort import CohortRecord
from riskfusion.ensemble import (
    KIND_LABELS,
    build_training_frame,
    default_tau_grid,
    fit_ensemble_fixed,
    fit_ensemble_time,
    importance_weights,
    km_censoring,
    load_ensemble,
)
from riskfusion.errors import (
    FitError,
    ModelEligibilityError,
    ParameterError,
    RiskfusionError,
    ValidationError,
)
from riskfusion.io import (
    float_str,
    iter_ndjson,
    load_cohort,
    read_json,
    write_json,
    write_ndjson,
)
from riskfusion.manifest import RunManifest
from riskfusion.metrics import (
    bootstrap_compare,
    calibration_deciles,
    make_eval_records,
    uno_c,
)
from riskfusion.parameters import PARAM_RACES, load_parameters
from riskfusion.pedigree import parse_pedigree, parse_risk_factors
from riskfusion.predict import cohort_base_predictions, score_model
from riskfusion.relhaz import attributable_fraction
from riskfusion.simulate import SimConfig, iter_cohort


def _fail(code: int, payload: dict) -> None:
    click.echo(json.dumps(payload, sort_keys=True), err=True)
    sys.exit(code)


def cli_errors(fn):
    @wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ValidationError as exc:
            _fail(2, {"error": "validation", "diagnostics": exc.diagnostics})
        except ModelEligibilityError as exc:
            _fail(3, {"error": "ineligible", "model": exc.model, "reason": exc.reason})
        except (ParameterError, FitError) as exc:
            _fail(4, {"error": type(exc).__name__, "message": str(exc)})
        except RiskfusionError as exc:
            _fail(5, {"error": type(exc).__name__, "message": str(exc)})

    return wrapper


def _parse_taus(raw: str) -> list[int]:
    try:
        taus = [int(part) for part in raw.split(",") if part.strip()]
    except ValueError:
        raise ParameterError(f"bad --tau value {raw!r}") from None
    if not taus or any(t < 1 for t in taus):
        raise ParameterError("--tau must list positive integers")
    return taus


@click.group()
@click.version_option(version=__version__, prog_name="riskfusion")
def main() -> None:
    """Breast-cancer risk scoring that fuses pedigree and questionnaire models."""


@main.command()
@click.option("--pedigree", "pedigrees", multiple=True, type=click.Path(exists=True, path_type=Path))
@click.option("--risk-factors", type=click.Path(exists=True, path_type=Path))
@click.option("--cohort", type=click.Path(exists=True, path_type=Path))
@click.option("--model", required=True, help="brcapro | bcrat | combined_m | ensemble:<path>")
@click.option("--tau", default="5", show_default=True, help="horizon years, comma separated")
@click.option("--a", "baseline_age", type=int, default=None, help="baseline age (default: proband age)")
@click.option("--params", "params_dir", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True)
@click.option("--no-family-history", is_flag=True, help="drop the affected-relative covariate from the fused model")
@cli_errors
def score(pedigrees, risk_factors, cohort, model, tau, baseline_age, params_dir, out_path, no_family_history):
    """Score probands under one model, one NDJSON row per proband and horizon."""
    params = load_parameters(params_dir)
    taus = _parse_taus(tau)

    ensembles = {}
    model_name = model
    if model.startswith("ensemble:"):
        fitted = load_ensemble(Path(model.split(":", 1)[1]))
        model_name = KIND_LABELS[fitted.kind]
        ensembles[model_name] = fitted
    elif model not in ("brcapro", "bcrat", "combined_m"):
        raise ParameterError(f"unknown model {model!r}")

    subjects: list[tuple[object, object, object]] = []
    if cohort is not None:
        for rec in load_cohort(cohort):
            subjects.append((rec.id, rec, None))
    if pedigrees:
        rf_doc = read_json(risk_factors) if risk_factors else None
        for i, ped_path in enumerate(pedigrees):
            ped = parse_pedigree(read_json(ped_path))
            if isinstance(rf_doc, list):
                X = parse_risk_factors(rf_doc[i], ped)
            elif rf_doc is not None:
                X = parse_risk_factors(rf_doc, ped)
            else:
                X = parse_risk_factors({}, ped)
            subjects.append((i, None, (ped, X)))
    if not subjects:
        raise ParameterError("provide --cohort or at least one --pedigree")

    def rows():
        for ident, rec, pair in subjects:
            if rec is not None:
                ped, X, a = rec.pedigree, rec.risk_factors, rec.baseline_age
            else:
                ped, X = pair
                a = baseline_age if baseline_age is not None else ped.proband.age
            for t in taus:
                risk = score_model(
                    model_name,
                    ped,
                    X,
                    t,
                    params,
                    a=a,
                    ensembles=ensembles,
                    use_family_history=not no_family_history,
                )
                yield {"proband": ident, "model": model_name, "tau": t, "risk": float_str(risk)}

    manifest = RunManifest.for_run(
        "score",
        params,
        args={"model": model_name, "tau": taus, "use_family_history": not no_family_history},
    )
    n = write_ndjson(out_path, rows(), header=manifest.header())
    manifest.write_sidecar(out_path)
    click.echo(f"wrote {n} rows to {out_path}")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--n", "n_probands", type=int, required=True)
@click.option("--seed", type=int, default=None)
@click.option("--params", "params_dir", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True)
@cli_errors
def simulate(config_path, n_probands, seed, params_dir, out_path):
    """Generate a synthetic cohort; writes NDJSON plus a summary sidecar."""
    params = load_parameters(params_dir)
    config_doc = read_json(config_path)
    cfg = SimConfig.from_json_dict(config_doc)
    if seed is None:
        seed = cfg.seed
    if seed is None:
        raise ParameterError("a seed is required (config or --seed)")
    if n_probands < 1:
        raise ParameterError("--n must be at least 1")

    manifest = RunManifest.for_run(
        "simulate", params, args={"n": n_probands}, config=config_doc, seed=int(seed)
    )
    counts = {"excluded": 0, "cases": 0, "deaths": 0, "retained": 0, "carriers": 0}

    def rows():
        for rec in iter_cohort(n_probands, cfg, params, int(seed)):
            if rec is None:
                counts["excluded"] += 1
                continue
            counts["retained"] += 1
            if rec.event == "breast":
                counts["cases"] += 1
            elif rec.event == "death":
                counts["deaths"] += 1
            if rec.latent_genotypes[0] > 0:
                counts["carriers"] += 1
            yield rec.to_json_dict()

    write_ndjson(out_path, rows(), header=manifest.header())
    summary = {
        "n_drawn": n_probands,
        "n_retained": counts["retained"],
        "excluded_baseline_cases": counts["excluded"],
        "cases_within_horizon": counts["cases"],
        "deaths_within_horizon": counts["deaths"],
        "case_rate": counts["cases"] / counts["retained"] if counts["retained"] else None,
        "proband_carriers": counts["carriers"],
        "tau": cfg.tau,
        "seed": int(seed),
    }
    write_json(Path(str(out_path) + ".summary.json"), summary)
    manifest.write_sidecar(out_path)
    click.echo(
        f"retained {counts['retained']} probands "
        f"({counts['excluded']} excluded with baseline cancer, {counts['cases']} cases)"
    )


@main.command()
@click.option("--cohort", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--kind", type=click.Choice(["lr1", "lr2"]), required=True)
@click.option("--tau", default="5", show_default=True, help="fit horizon (lr1) or grid override (lr2)")
@click.option("--params", "params_dir", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True)
@click.option("--importance-target", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--transform", type=click.Choice(["sqrt", "none"]), default="sqrt", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True, help="seed for importance-weight centers")
@cli_errors
def fit(cohort, kind, tau, params_dir, out_path, importance_target, transform, seed):
    """Fit a stacked combination model on a cohort with follow-up."""
    params = load_parameters(params_dir)
    records = load_cohort(cohort)
    taus = _parse_taus(tau)
    if kind == "lr1":
        if len(taus) != 1:
            raise ParameterError("lr1 fits a single horizon; give one --tau")
        grid = [taus[0]]
    else:
        grid = list(taus) if len(taus) > 1 else list(default_tau_grid(records))

    G = km_censoring(records, lambda r: r.stratum)
    base_by_tau = {
        t: cohort_base_predictions(records, t, params, models=("brcapro", "bcrat"))
        for t in grid
    }
    p1 = np.column_stack([base_by_tau[t]["brcapro"] for t in grid])
    p2 = np.column_stack([base_by_tau[t]["bcrat"] for t in grid])

    extra = None
    if importance_target is not None:
        target = load_cohort(importance_target)
        t_ref = min(5, grid[-1])
        if t_ref not in base_by_tau:
            base_by_tau[t_ref] = cohort_base_predictions(
                records, t_ref, params, models=("brcapro", "bcrat")
            )
        target_base = cohort_base_predictions(
            target, t_ref, params, models=("brcapro", "bcrat")
        )
        extra = importance_weights(
            _weight_features(records, base_by_tau[t_ref]),
            _weight_features(target, target_base),
            seed=seed,
        )

    frame = build_training_frame(records, grid, G, p1, p2, transform=transform, extra_weights=extra)
    fitted = fit_ensemble_fixed(frame) if kind == "lr1" else fit_ensemble_time(frame)
    fitted.save(out_path)
    manifest = RunManifest.for_run(
        "fit", params, args={"kind": kind, "tau_grid": list(grid), "transform": transform}
    )
    manifest.write_sidecar(out_path)
    coefs = ", ".join(float_str(c) for c in fitted.coefficients)
    click.echo(f"fitted {kind} on {len(frame.y)} rows; coefficients: {coefs}")


def _weight_features(records: list[CohortRecord], base: dict[str, np.ndarray]) -> np.ndarray:
    cols = [base["brcapro"], base["bcrat"]]
    X = np.empty((len(records), 5))
    for i, rec in enumerate(records):
        rf = rec.risk_factors
        X[i] = (
            rf.age_at_menarche if rf.age_at_menarche is not None else 14,
            rf.num_biopsies if rf.num_biopsies is not None else 0,
            rf.age_first_live_birth,
            rf.affected_first_degree,
            rf.atypical_hyperplasia if rf.atypical_hyperplasia is not None else 2,
        )
    return np.column_stack(cols + [X])


@main.command()
@click.option("--cohort", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--predictions", "prediction_files", multiple=True, required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--tau", default="5", show_default=True)
@click.option("--bootstrap", "n_bootstrap", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--strata", "strata_key", default=None, help="stratify G by the cohort's stratum field")
@click.option("--reference", default=None, help="model whose brier/log score anchors relative improvements")
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True)
@click.option("--plot-data", "plot_dir", type=click.Path(path_type=Path), default=None)
@click.option("--params", "params_dir", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--uno-tau", type=float, default=10.0, show_default=True)
@cli_errors
def evaluate(cohort, prediction_files, tau, n_bootstrap, seed, strata_key, reference,
             out_path, plot_dir, params_dir, uno_tau):
    """Compare prediction files on one cohort; writes a metric report."""
    records = load_cohort(cohort)
    taus = _parse_taus(tau)
    if len(taus) != 1:
        raise ParameterError("evaluation runs at a single horizon")
    horizon = float(taus[0])
    if strata_key is None:
        records = [_drop_stratum(r) for r in records]

    by_id = {r.id: i for i, r in enumerate(records)}
    predictions: dict[str, np.ndarray] = {}
    for path in prediction_files:
        for row in iter_ndjson(path):
            if int(row["tau"]) != int(horizon):
                continue
            model = row["model"]
            if model not in predictions:
                predictions[model] = np.full(len(records), np.nan)
            idx = by_id.get(row["proband"])
            if idx is None:
                raise ParameterError(
                    f"{path}: proband {row['proband']} is not in the cohort"
                )
            predictions[model][idx] = float(row["risk"])
    if not predictions:
        raise ParameterError("no prediction rows match the requested horizon")
    for model, arr in predictions.items():
        if np.any(np.isnan(arr)):
            raise ParameterError(f"model {model!r} is missing predictions for some probands")

    report = bootstrap_compare(
        records,
        predictions,
        horizon,
        B=n_bootstrap,
        seed=seed,
        reference=reference,
    )
    doc = report.to_json_dict()

    G = km_censoring(records, lambda r: r.stratum)
    unos = {}
    for model, arr in predictions.items():
        try:
            unos[model] = uno_c(records, arr, G, tau=uno_tau)
        except ValueError:
            unos[model] = None
    doc["uno_c"] = {"tau": uno_tau, "values": unos}

    write_json(out_path, doc)
    if plot_dir is not None:
        eval_records = make_eval_records(records, predictions, horizon, G)
        plot_dir = Path(plot_dir)
        plot_dir.mkdir(parents=True, exist_ok=True)
        _write_calibration_csv(plot_dir / "calibration_deciles.csv", eval_records, predictions)
        params = load_parameters(params_dir)
        _write_hazard_curves_csv(plot_dir / "hazard_curves.csv", params)
    params_for_manifest = load_parameters(params_dir)
    RunManifest.for_run(
        "evaluate",
        params_for_manifest,
        args={"tau": horizon, "B": n_bootstrap, "models": sorted(predictions)},
        seed=seed,
    ).write_sidecar(out_path)
    click.echo(f"evaluated {len(predictions)} models on {len(records)} probands")


def _drop_stratum(rec: CohortRecord) -> CohortRecord:
    from dataclasses import replace

    return replace(rec, stratum=None) if rec.stratum is not None else rec


def _write_calibration_csv(path: Path, eval_records, predictions) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["model", "bin", "n", "mean_prediction", "observed", "expected", "oe", "ci_low", "ci_high"]
        )
        for model in predictions:
            for row in calibration_deciles(eval_records, model):
                writer.writerow(
                    [
                        model,
                        row["bin"],
                        row["n"],
                        float_str(row["mean_prediction"]),
                        float_str(row["observed"]),
                        float_str(row["expected"]),
                        float_str(row["oe"]),
                        float_str(row["ci_low"]),
                        float_str(row["ci_high"]),
                    ]
                )


def _write_hazard_curves_csv(path: Path, params) -> None:
    """Yearly non-carrier hazard next to the rescaled questionnaire baseline."""
    from riskfusion.mendelian import tables_for

    tables = tables_for(params)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["race", "age", "pedigree_noncarrier_hazard", "rescaled_empirical_baseline"])
        for race in PARAM_RACES:
            noncarrier = tables.breast_hazards("female", race)[0]
            starts, rates, _ = params.baseline_for(race)
            for age in range(20, 90):
                cell = int(np.searchsorted(starts, age, side="right")) - 1
                cell = min(cell, len(starts) - 1)
                yearly = 1.0 - float(np.exp(-rates[cell]))
                rescaled = yearly * params.one_minus_ar(race, age)
                writer.writerow(
                    [race, age, float_str(float(noncarrier[age - 1])), float_str(rescaled)]
                )


@main.command()
@click.option("--params", "params_dir", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--ensemble", "ensemble_files", multiple=True, type=click.Path(exists=True, path_type=Path))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8750, show_default=True)
@cli_errors
def serve(params_dir, ensemble_files, host, port):
    """Run the local JSON scoring service."""
    import uvicorn

    from riskfusion.service import build_app

    params = load_parameters(params_dir)
    ensembles = {}
    for path in ensemble_files:
        fitted = load_ensemble(path)
        ensembles[KIND_LABELS[fitted.kind]] = fitted
    app = build_app(params, ensembles)
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command("attributable-fraction")
@click.option("--params", "params_dir", type=click.Path(exists=True, path_type=Path), default=None)
@cli_errors
def attributable_fraction_cmd(params_dir):
    """Print computed 1 - AR per race and band; should match normalization.csv."""
    params = load_parameters(params_dir)
    for race in PARAM_RACES:
        for band in ("under50", "over50"):
            ar = attributable_fraction(params.covariate_distribution[band],
                                       params.coefficients_for(race), band)
            click.echo(f"{race} {band}: 1-AR = {float_str(1.0 - ar)}")


if __name__ == "__main__":
    main()
