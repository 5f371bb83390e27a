"""Run reports: a structured JSON document and a flat CSV export.

Everything that varies between identical runs (timestamp, elapsed time)
lives in ``header``; ``body`` and the CSV are byte-identical for identical
configurations.
"""

from __future__ import annotations

import csv
import io
import json
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

REPORT_SCHEMA = "bhconst.report/1"


@dataclass
class VerificationReport:
    command: str
    parameters: dict
    records: list[dict] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)
    assumptions: list[str] = field(default_factory=list)
    elapsed_seconds: float = 0.0
    generated_at: Optional[str] = None

    @property
    def passed(self) -> bool:
        return not self.failures

    def body(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "command": self.command,
            "status": "pass" if self.passed else "fail",
            "parameters": self.parameters,
            "records": self.records,
            "failures": self.failures,
            "assumptions": sorted(set(self.assumptions)),
        }

    def to_structured(self) -> str:
        header = {
            "generated_at": self.generated_at or datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "elapsed_seconds": round(self.elapsed_seconds, 6),
        }
        return json.dumps({"header": header, "body": self.body()}, indent=2, sort_keys=True) + "\n"

    def to_tabular(self) -> str:
        columns: list[str] = []
        for record in self.records:
            columns += [key for key in record if key not in columns]
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", restval="")
        writer.writeheader()
        for record in self.records:
            writer.writerow({k: ("" if v is None else v) for k, v in record.items()})
        return buf.getvalue()

    def render(self, fmt: str) -> str:
        if fmt == "structured":
            return self.to_structured()
        if fmt == "tabular":
            return self.to_tabular()
        raise ValueError(f"unknown report format {fmt!r}")

    def write(self, path: Optional[str], fmt: str = "structured") -> None:
        text = self.render(fmt)
        if path in (None, "-"):
            sys.stdout.write(text)
        else:
            Path(path).write_text(text)
