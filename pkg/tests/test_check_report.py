import json
import math

import numpy as np

from check_report import CheckReport, reports_to_csv, sorted_reports, to_jsonable, write_json
from lax import LaxVariant


def test_to_jsonable():
    assert to_jsonable(1 + 2j) == [1.0, 2.0]
    assert to_jsonable(float("nan")) is None
    assert to_jsonable(np.float64(0.5)) == 0.5
    assert to_jsonable(np.array([1j])) == [[0.0, 1.0]]
    assert to_jsonable({"v": LaxVariant.DEFECT_LHAT}) == {"v": "Lhat"}


def test_make_and_from_error():
    ok = CheckReport.make("ybe", [("rank", 2)], 1e-15, 1e-12)
    assert ok.passed
    assert not CheckReport.make("ybe", [], float("nan"), 1.0).passed
    bad = CheckReport.from_error("rll", ValueError("boom"))
    assert not bad.passed and math.isnan(bad.residual)
    assert bad.to_dict()["residual"] is None
    assert bad.error == "ValueError: boom"


def test_sorting_and_writers(tmp_path):
    reports = [
        CheckReport.make("rll", [("lambda1", 0.5j)], 0.0, 1.0),
        CheckReport.make("crossing", [("lambda", 2.0)], 0.0, 1.0, note=1),
        CheckReport.make("crossing", [("lambda", 1.0)], 0.0, 1.0),
    ]
    ordered = sorted_reports(reports)
    assert [r.name for r in ordered] == ["crossing", "crossing", "rll"]
    assert ordered[0].parameters == (("lambda", 1.0),)
    path = write_json({"reports": [r.to_dict() for r in ordered]}, tmp_path / "r.json")
    assert json.loads(path.read_text())["reports"][2]["parameters"] == [["lambda1", [0.0, 0.5]]]
    lines = reports_to_csv(ordered, tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "name,passed,residual,tolerance,block,parameters,error"
    assert lines[1].startswith("crossing,true,0.0,1.0,full,")
