"""Serialization helpers shared by the CLI and the service.

Risks cross process boundaries as decimal strings with 17 significant
digits, which round-trip IEEE doubles exactly; every on-disk artifact is
written with sorted keys so identical inputs give identical bytes.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Iterable, Iterator, Optional

from riskfusion.cohort import CohortRecord, parse_cohort_record
from riskfusion.errors import ValidationError


def float_str(x: float) -> str:
    return format(float(x), ".17g")


def canonical_json(doc: Any) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def content_hash(doc: Any) -> str:
    return hashlib.sha256(canonical_json(doc).encode()).hexdigest()


def write_json(path: Path, doc: Any) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def read_json(path: Path) -> Any:
    return json.loads(Path(path).read_text())


def write_ndjson(path: Path, rows: Iterable[dict], header: Optional[dict] = None) -> int:
    """Write rows one per line; returns the row count (header excluded)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with path.open("w") as fh:
        if header is not None:
            fh.write(canonical_json({"kind": "header", **header}) + "\n")
        for row in rows:
            fh.write(canonical_json(row) + "\n")
            n += 1
    return n


def iter_ndjson(path: Path) -> Iterator[dict]:
    """Yield data rows, skipping a leading header row if present."""
    with Path(path).open() as fh:
        for i, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            if i == 0 and isinstance(doc, dict) and doc.get("kind") == "header":
                continue
            yield doc


def read_header(path: Path) -> Optional[dict]:
    with Path(path).open() as fh:
        first = fh.readline().strip()
    if not first:
        return None
    doc = json.loads(first)
    if isinstance(doc, dict) and doc.get("kind") == "header":
        return doc
    return None


def load_cohort(path: Path) -> list[CohortRecord]:
    records: list[CohortRecord] = []
    for i, doc in enumerate(iter_ndjson(path)):
        try:
            records.append(parse_cohort_record(doc))
        except ValidationError as exc:
            raise ValidationError(
                [
                    {
                        "member_id": d.get("member_id"),
                        "field": f"row {i}: {d['field']}",
                        "message": d["message"],
                    }
                    for d in exc.diagnostics
                ]
            ) from None
    return records
