import json

from score_reports import determinism_index, main, summarize_report


def _report(residuals):
    return {
        "schema": 1,
        "suite": "ybe",
        "reports": [
            {"name": "ybe", "residual": r, "tolerance": 1e-12, "passed": r is not None and r <= 1e-12}
            for r in residuals
        ],
        "recovery": {"total_recoveries": 0},
    }


def test_summarize_report():
    s = summarize_report(_report([1e-15, 3e-13, None]))
    assert s["passed"] == 2 and s["failed"] == 1
    assert s["checks"]["ybe"]["worst_residual"] == 3e-13


def test_determinism_index():
    assert determinism_index([b"a"]) == 1.0
    assert determinism_index([b"a", b"a", b"b"]) == 1 / 3


def test_main(tmp_path):
    paths = []
    for i in range(2):
        p = tmp_path / f"r{i}.json"
        p.write_text(json.dumps(_report([1e-15])))
        paths.append(str(p))
    out = tmp_path / "summary.json"
    assert main(["--reports", *paths, "--out", str(out)]) == 0
    summary = json.loads(out.read_text())["summary"]
    assert summary["determinism_index"] == 1.0 and summary["all_passed"]
    assert main(["--reports", str(tmp_path / "missing.json"), "--out", str(out)]) == 2


def test_main_fails_when_repeated_reports_differ(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    a.write_text(json.dumps(_report([1e-15])))
    b.write_text(json.dumps(_report([2e-15])))
    out = tmp_path / "summary.json"
    assert main(["--reports", str(a), str(b), "--out", str(out)]) == 1
    summary = json.loads(out.read_text())["summary"]
    assert summary["all_passed"] and summary["determinism_index"] == 0.0
    assert summary["deterministic"] is False
