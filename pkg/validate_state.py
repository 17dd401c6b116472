#!/usr/bin/env python3
# validate_state.py
# Structural checks for BetheState JSON documents (schema 1).
from __future__ import annotations

import json
import sys
from typing import Any, Dict, List

VARIANTS = ("L", "Lhat")


def _is_pair(x: Any) -> bool:
    return (
        isinstance(x, (list, tuple))
        and len(x) == 2
        and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in x)
    )


def validate_state_document(doc: Any) -> List[str]:
    problems: List[str] = []
    if not isinstance(doc, dict):
        return ["document is not a JSON object"]
    for k in ("schema", "rank", "sites", "levels"):
        if k not in doc:
            problems.append(f"missing key: {k}")
    if problems:
        return problems
    if doc["schema"] != 1:
        problems.append(f"unsupported schema {doc['schema']!r} (expected 1)")
    rank, sites = doc["rank"], doc["sites"]
    if not isinstance(rank, int) or rank < 2:
        problems.append(f"rank must be an integer >= 2, got {rank!r}")
        rank = None
    if not isinstance(sites, int) or sites < 0:
        problems.append(f"sites must be a non-negative integer, got {sites!r}")
    if "theta" in doc and not _is_pair(doc["theta"]):
        problems.append("theta must be a [re, im] pair")
    if doc.get("variant", "L") not in VARIANTS:
        problems.append(f"variant must be one of {VARIANTS}, got {doc.get('variant')!r}")
    levels = doc["levels"]
    if not isinstance(levels, list):
        return problems + ["levels must be a list"]
    seen = set()
    for i, level in enumerate(levels):
        where = f"levels[{i}]"
        if not isinstance(level, dict) or "k" not in level or "roots" not in level:
            problems.append(f"{where}: needs keys k and roots")
            continue
        k = level["k"]
        if not isinstance(k, int) or (rank is not None and not 1 <= k <= rank - 1):
            problems.append(f"{where}: level k={k!r} outside 1..{rank - 1 if rank else '?'}")
        if k in seen:
            problems.append(f"{where}: duplicate level k={k}")
        seen.add(k)
        roots = level["roots"]
        if not isinstance(roots, list) or not all(_is_pair(r) for r in roots):
            problems.append(f"{where}: roots must be a list of [re, im] pairs")
            continue
        if "quantum_numbers" in level:
            qn = level["quantum_numbers"]
            if not isinstance(qn, list) or len(qn) != len(roots):
                problems.append(f"{where}: quantum_numbers must match the number of roots")
            elif not all(_is_half_integer(j) for j in qn):
                problems.append(f"{where}: quantum_numbers must be integers or half-integers")
    return problems


def _is_half_integer(j: Any) -> bool:
    try:
        twice = 2 * float(j)
    except (TypeError, ValueError):
        return False
    return abs(twice - round(twice)) <= 1e-12


def main(path: str) -> int:
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc: Dict[str, Any] = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        print(f"{path}: {e}", file=sys.stderr)
        return 1
    problems = validate_state_document(doc)
    for p in problems:
        print(f"{path}: {p}", file=sys.stderr)
    return 1 if problems else 0


if __name__ == "__main__":
    if len(sys.argv) < 2:
        print("Usage: validate_state.py state.json")
        sys.exit(2)
    sys.exit(main(sys.argv[1]))
