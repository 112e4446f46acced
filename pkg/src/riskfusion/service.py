"""Local JSON scoring service.

Stateless: every request carries the full pedigree and risk factors, the
parameter set is immutable, and nothing is persisted.  Risks travel as
decimal strings with 17 significant digits so clients can compare and
display them without floating-point drift.  Invalid payloads get 400 with
field-level diagnostics; requests whose every model is inapplicable to the
counselee get 422 with per-model reasons.
"""

from __future__ import annotations

import copy
from typing import Any, Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from riskfusion import __version__, _kernels
from riskfusion.ensemble import KIND_LABELS, FittedEnsemble
from riskfusion.errors import ModelEligibilityError, ValidationError
from riskfusion.io import float_str
from riskfusion.parameters import MAX_AGE, ParameterSet
from riskfusion.pedigree import parse_pedigree, parse_risk_factors
from riskfusion.predict import BASE_MODELS, carrier_probabilities, score_model

SCHEMA_VERSION = 1


def _diag(field: str, message: str, member_id: Optional[int] = None) -> dict:
    return {"field": field, "message": message, "member_id": member_id}


def _bad_request(diagnostics: list[dict]) -> JSONResponse:
    return JSONResponse(
        status_code=400,
        content={"error": "validation", "diagnostics": diagnostics},
    )


class _ParsedScoreRequest:
    def __init__(self, body: Any, available: tuple[str, ...]):
        diags: list[dict] = []
        if not isinstance(body, dict):
            raise ValidationError([_diag("$", "request body must be a JSON object")])
        self.pedigree = parse_pedigree(body.get("pedigree"))
        self.risk_factors = parse_risk_factors(
            body.get("risk_factors", {}), self.pedigree
        )
        taus = body.get("tau", [5])
        if isinstance(taus, int):
            taus = [taus]
        if (
            not isinstance(taus, list)
            or not taus
            or any(isinstance(t, bool) or not isinstance(t, int) or t < 1 for t in taus)
        ):
            diags.append(_diag("tau", "tau must be a non-empty list of positive integers"))
            taus = [5]
        self.taus = taus
        a = body.get("a")
        if a is not None and (isinstance(a, bool) or not isinstance(a, int) or not 1 <= a <= MAX_AGE):
            diags.append(_diag("a", f"baseline age must be an integer in 1..{MAX_AGE}"))
            a = None
        self.a = a
        models = body.get("models")
        if models is None:
            models = list(available)
        if (
            not isinstance(models, list)
            or not models
            or any(not isinstance(m, str) for m in models)
        ):
            diags.append(_diag("models", "models must be a non-empty list of names"))
            models = list(available)
        unknown = [m for m in models if m not in available]
        if unknown:
            diags.append(
                _diag(
                    "models",
                    f"unknown model(s) {', '.join(sorted(unknown))}; available: {', '.join(available)}",
                )
            )
        self.models = [m for m in models if m in available]
        self.use_family_history = bool(body.get("use_family_history", True))
        if diags:
            raise ValidationError(diags)


def build_app(
    params: ParameterSet,
    ensembles: Optional[dict[str, FittedEnsemble]] = None,
) -> FastAPI:
    ensembles = ensembles or {}
    available = tuple(BASE_MODELS) + tuple(sorted(ensembles))
    app = FastAPI(title="riskfusion", version=__version__, docs_url=None, redoc_url=None)

    def score_payload(req: _ParsedScoreRequest) -> tuple[dict, int]:
        """Per-model results; HTTP status 422 when no model is applicable."""
        results: dict[str, Any] = {}
        n_eligible = 0
        for model in req.models:
            try:
                risks = {}
                for t in req.taus:
                    value = score_model(
                        model,
                        req.pedigree,
                        req.risk_factors,
                        t,
                        params,
                        a=req.a,
                        ensembles=ensembles,
                        use_family_history=req.use_family_history,
                    )
                    risks[str(t)] = float_str(value)
                results[model] = {"eligible": True, "risks": risks}
                n_eligible += 1
            except ModelEligibilityError as exc:
                results[model] = {"eligible": False, "reason": exc.reason, "status": 422}
        status = 200 if n_eligible else 422
        payload = {
            "schema_version": SCHEMA_VERSION,
            "tau": req.taus,
            "models": results,
            "carrier_probabilities": {
                k: float_str(v)
                for k, v in carrier_probabilities(req.pedigree, params).items()
            },
        }
        if status == 422:
            payload["error"] = "ineligible"
        return payload, status

    @app.get("/health")
    def health() -> dict:
        return {
            "status": "ok",
            "version": __version__,
            "backend": _kernels.BACKEND,
            "parameters": params.label,
        }

    @app.get("/models")
    def models() -> dict:
        rows = [
            {
                "name": "brcapro",
                "kind": "pedigree",
                "description": "carrier-probability-weighted genotype risks from family history",
            },
            {
                "name": "bcrat",
                "kind": "relative_hazard",
                "description": "questionnaire relative hazards over an empirical baseline",
            },
            {
                "name": "combined_m",
                "kind": "fused",
                "description": "pedigree model with the non-carrier hazard rescaled by questionnaire covariates",
            },
        ]
        for name in sorted(ensembles):
            fitted = ensembles[name]
            rows.append(
                {
                    "name": name,
                    "kind": fitted.kind,
                    "description": "stacked logistic combination of the two base model outputs",
                    "tau_range": [fitted.tau_grid[0], fitted.tau_grid[-1]],
                    "transform": fitted.transform,
                }
            )
        return {"schema_version": SCHEMA_VERSION, "models": rows}

    @app.post("/score")
    async def score(request: Request) -> JSONResponse:
        try:
            body = await request.json()
        except Exception:
            return _bad_request([_diag("$", "request body is not valid JSON")])
        try:
            req = _ParsedScoreRequest(body, available)
        except ValidationError as exc:
            return _bad_request(exc.diagnostics)
        payload, status = score_payload(req)
        return JSONResponse(status_code=status, content=payload)

    @app.post("/whatif")
    async def whatif(request: Request) -> JSONResponse:
        try:
            body = await request.json()
        except Exception:
            return _bad_request([_diag("$", "request body is not valid JSON")])
        if not isinstance(body, dict) or not isinstance(body.get("base"), dict):
            return _bad_request([_diag("base", "whatif needs a base score request")])
        deltas = body.get("deltas", [])
        if not isinstance(deltas, list):
            return _bad_request([_diag("deltas", "deltas must be a list")])
        try:
            base_req = _ParsedScoreRequest(body["base"], available)
        except ValidationError as exc:
            return _bad_request(exc.diagnostics)
        base_payload, base_status = score_payload(base_req)
        if base_status != 200:
            return JSONResponse(status_code=422, content={"error": "ineligible", "baseline": base_payload})

        rows = []
        for delta in deltas:
            doc, err = _apply_delta(body["base"], delta)
            if err is not None:
                rows.append({"delta": delta, "error": err})
                continue
            try:
                req = _ParsedScoreRequest(doc, available)
            except ValidationError as exc:
                rows.append({"delta": delta, "error": {"diagnostics": exc.diagnostics}})
                continue
            payload, _status = score_payload(req)
            rows.append(
                {
                    "delta": delta,
                    "result": payload,
                    "difference": _differences(base_payload, payload),
                }
            )
        return JSONResponse(
            status_code=200,
            content={
                "schema_version": SCHEMA_VERSION,
                "baseline": base_payload,
                "rows": rows,
            },
        )

    return app


def _apply_delta(base_doc: dict, delta: Any) -> tuple[Optional[dict], Optional[dict]]:
    """One hypothetical edit applied to a copy of the base request."""
    if not isinstance(delta, dict) or "op" not in delta:
        return None, {"message": "each delta needs an 'op' field"}
    doc = copy.deepcopy(base_doc)
    op = delta["op"]
    pedigree = doc.setdefault("pedigree", {})
    members = pedigree.setdefault("members", [])
    if op == "set_risk_factor":
        field, value = delta.get("field"), delta.get("value")
        if not isinstance(field, str):
            return None, {"message": "set_risk_factor needs a 'field' name"}
        rf = doc.setdefault("risk_factors", {})
        if value is None:
            rf.pop(field, None)
        else:
            rf[field] = value
        return doc, None
    if op == "add_relative":
        member = delta.get("member")
        if not isinstance(member, dict):
            return None, {"message": "add_relative needs a 'member' object"}
        member = dict(member)
        if "id" not in member:
            existing = [m.get("id", -1) for m in members if isinstance(m, dict)]
            member["id"] = max([i for i in existing if isinstance(i, int)], default=-1) + 1
        members.append(member)
        return doc, None
    if op == "remove_relative":
        target = delta.get("id")
        kept = [m for m in members if not (isinstance(m, dict) and m.get("id") == target)]
        if len(kept) == len(members):
            return None, {"message": f"no member with id {target!r}"}
        pedigree["members"] = kept
        return doc, None
    if op == "set_member":
        target = delta.get("id")
        field, value = delta.get("field"), delta.get("value")
        if not isinstance(field, str):
            return None, {"message": "set_member needs a 'field' name"}
        for m in members:
            if isinstance(m, dict) and m.get("id") == target:
                if value is None:
                    m.pop(field, None)
                else:
                    m[field] = value
                return doc, None
        return None, {"message": f"no member with id {target!r}"}
    if op == "set_tau":
        doc["tau"] = delta.get("tau")
        return doc, None
    return None, {"message": f"unknown delta op {op!r}"}


def _differences(base_payload: dict, payload: dict) -> dict:
    """Per model and horizon: risk minus baseline risk, as decimal strings."""
    diffs: dict[str, dict[str, str]] = {}
    for model, entry in payload["models"].items():
        base_entry = base_payload["models"].get(model)
        if (
            not entry.get("eligible")
            or base_entry is None
            or not base_entry.get("eligible")
        ):
            continue
        per_tau = {}
        for t, risk in entry["risks"].items():
            base_risk = base_entry["risks"].get(t)
            if base_risk is not None:
                per_tau[t] = float_str(float(risk) - float(base_risk))
        if per_tau:
            diffs[model] = per_tau
    return diffs
