"""Exception types shared across the package."""

from __future__ import annotations


class RiskfusionError(Exception):
    """Base class for all package errors."""


class ValidationError(RiskfusionError):
    """Invalid input document.

    Carries a list of field-level diagnostics so callers (CLI, service, UI)
    can point at the offending member and field.  Each diagnostic is a dict
    with keys ``field``, ``message`` and optionally ``member_id``.
    """

    def __init__(self, diagnostics: list[dict]) -> None:
        self.diagnostics = list(diagnostics)
        lines = []
        for d in self.diagnostics:
            loc = d["field"]
            if d.get("member_id") is not None:
                loc = f"member {d['member_id']}: {loc}"
            lines.append(f"{loc}: {d['message']}")
        super().__init__("; ".join(lines))


class ParameterError(RiskfusionError):
    """Malformed or incomplete parameter files."""


class ModelEligibilityError(RiskfusionError):
    """Requested model is not applicable to the given counselee.

    Raised when a covariate-based score is requested for a counselee whose
    carrier status is already established by a positive genetic test; the
    service maps this onto HTTP 422.
    """

    def __init__(self, model: str, reason: str) -> None:
        self.model = model
        self.reason = reason
        super().__init__(f"model '{model}' not applicable: {reason}")


class FitError(RiskfusionError):
    """Estimation failure (separation, divergence, empty training frame)."""
