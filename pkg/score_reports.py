# score_reports.py
# Summaries across check reports: pass counts, worst residual per check, determinism across repeated runs.
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from check_report import write_json


def load_report(path: str | Path) -> Dict[str, Any]:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def summarize_report(report: Dict[str, Any]) -> Dict[str, Any]:
    by_check: Dict[str, Dict[str, Any]] = {}
    for r in report.get("reports", []):
        entry = by_check.setdefault(r["name"], {"passed": 0, "failed": 0, "worst_residual": None})
        entry["passed" if r.get("passed") else "failed"] += 1
        res = r.get("residual")
        if isinstance(res, (int, float)) and (entry["worst_residual"] is None or res > entry["worst_residual"]):
            entry["worst_residual"] = res
    passed = sum(e["passed"] for e in by_check.values())
    failed = sum(e["failed"] for e in by_check.values())
    return {
        "suite": report.get("suite"),
        "passed": passed,
        "failed": failed,
        "checks": dict(sorted(by_check.items())),
        "recovery": report.get("recovery", {}),
    }


def determinism_index(payloads: Sequence[bytes]) -> float:
    """Fraction of report pairs that are byte-identical; 1.0 for fewer than two reports."""
    if len(payloads) < 2:
        return 1.0
    pairs, same = 0, 0
    for i in range(len(payloads)):
        for j in range(i + 1, len(payloads)):
            same += payloads[i] == payloads[j]
            pairs += 1
    return same / pairs


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = argparse.ArgumentParser(prog="score_reports")
    ap.add_argument("--reports", nargs="+", required=True)
    ap.add_argument("--out", default="summary.json")
    args = ap.parse_args(argv)

    raw: List[bytes] = []
    per_report = []
    for path in args.reports:
        try:
            data = Path(path).read_bytes()
            per_report.append({"path": path, **summarize_report(json.loads(data))})
        except (OSError, json.JSONDecodeError) as e:
            print(f"{path}: {e}", file=sys.stderr)
            return 2
        raw.append(data)

    index = determinism_index(raw)
    out = {
        "per_report": per_report,
        "summary": {
            "reports": len(per_report),
            "all_passed": all(r["failed"] == 0 for r in per_report),
            "determinism_index": index,
            "deterministic": index == 1.0,
        },
    }
    write_json(out, args.out)
    print(f"Wrote {args.out}")
    # repeated runs of one configuration must agree byte for byte
    return 0 if out["summary"]["all_passed"] and out["summary"]["deterministic"] else 1


if __name__ == "__main__":
    sys.exit(main())
