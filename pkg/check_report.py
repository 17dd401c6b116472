# check_report.py
# CheckReport value object and the JSON helpers every report writer shares.
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Tuple

import numpy as np

REPORT_SCHEMA = 1


def to_jsonable(value: Any) -> Any:
    """Complex numbers become [re, im]; non-finite floats become None."""
    if isinstance(value, (complex, np.complexfloating)):
        c = complex(value)
        return [to_jsonable(c.real), to_jsonable(c.imag)]
    if isinstance(value, (float, np.floating)):
        f = float(value)
        return f if math.isfinite(f) else None
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if hasattr(value, "value") and isinstance(getattr(value, "value"), str):  # enums
        return value.value
    return value


@dataclass(frozen=True)
class CheckReport:
    name: str
    parameters: Tuple[Tuple[str, Any], ...]
    residual: float
    tolerance: float
    passed: bool
    block: str = "full"
    details: Dict[str, Any] = field(default_factory=dict, compare=False)
    error: str = ""

    @classmethod
    def make(
        cls,
        name: str,
        parameters: Sequence[Tuple[str, Any]],
        residual: float,
        tolerance: float,
        block: str = "full",
        **details: Any,
    ) -> "CheckReport":
        residual = float(residual)
        passed = math.isfinite(residual) and residual <= tolerance
        return cls(name, tuple(parameters), residual, float(tolerance), passed, block, dict(details))

    @classmethod
    def from_error(cls, name: str, error: BaseException, parameters: Sequence[Tuple[str, Any]] = ()) -> "CheckReport":
        return cls(
            name, tuple(parameters), float("nan"), 0.0, False, "n/a",
            {}, f"{type(error).__name__}: {error}",
        )

    def sort_key(self) -> Tuple[str, str]:
        return self.name, json.dumps(to_jsonable(list(self.parameters)), sort_keys=True)

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "name": self.name,
            "parameters": [[k, to_jsonable(v)] for k, v in self.parameters],
            "residual": to_jsonable(self.residual),
            "tolerance": self.tolerance,
            "passed": self.passed,
            "block": self.block,
        }
        if self.details:
            out["details"] = to_jsonable(self.details)
        if self.error:
            out["error"] = self.error
        return out


def sorted_reports(reports: Iterable[CheckReport]) -> List[CheckReport]:
    return sorted(reports, key=CheckReport.sort_key)


def write_json(payload: Dict[str, Any], path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(to_jsonable(payload), indent=2, sort_keys=False) + "\n", encoding="utf-8")
    return path


REPORT_COLUMNS = ("name", "passed", "residual", "tolerance", "block", "parameters", "error")


def reports_to_csv(reports: Sequence[CheckReport], path: str | Path) -> Path:
    """One row per report; parameters stay a JSON string so the header is fixed."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in reports:
            d = r.to_dict()
            residual = "" if d["residual"] is None else repr(d["residual"])
            w.writerow([r.name, str(r.passed).lower(), residual, repr(r.tolerance), r.block,
                        json.dumps(d["parameters"], sort_keys=True), r.error])
    return path
