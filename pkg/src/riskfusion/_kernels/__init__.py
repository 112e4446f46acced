"""Kernel backend selection.

Uses the compiled extension when it imported cleanly, otherwise the numpy
reference implementation.  Set RISKFUSION_PURE=1 to force the fallback
(useful for benchmarking and for debugging numeric differences).
"""

from __future__ import annotations

import os

from riskfusion._kernels import pure

if os.environ.get("RISKFUSION_PURE") == "1":
    _impl = pure
else:
    try:
        from riskfusion._kernels import engine as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = pure

BACKEND = "pure" if _impl is pure else "compiled"

TRANSMISSION = pure.TRANSMISSION

G_PROBAND = pure.G_PROBAND
G_MOTHER = pure.G_MOTHER
G_FATHER = pure.G_FATHER
G_SIBLING = pure.G_SIBLING
G_CHILD = pure.G_CHILD
G_MAT_GRANDMOTHER = pure.G_MAT_GRANDMOTHER
G_MAT_GRANDFATHER = pure.G_MAT_GRANDFATHER
G_MAT_AUNT_UNCLE = pure.G_MAT_AUNT_UNCLE
G_PAT_GRANDMOTHER = pure.G_PAT_GRANDMOTHER
G_PAT_GRANDFATHER = pure.G_PAT_GRANDFATHER
G_PAT_AUNT_UNCLE = pure.G_PAT_AUNT_UNCLE

peel_posterior = _impl.peel_posterior
cumulative_risk = _impl.cumulative_risk
cumulative_risk_batch = _impl.cumulative_risk_batch
modified_risk = _impl.modified_risk
modified_risk_batch = _impl.modified_risk_batch

__all__ = [
    "BACKEND",
    "TRANSMISSION",
    "peel_posterior",
    "cumulative_risk",
    "cumulative_risk_batch",
    "modified_risk",
    "modified_risk_batch",
    "pure",
]
