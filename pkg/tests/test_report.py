import json

import jsonschema
import pytest

from qmpack.benchmarks import workload
from qmpack.compose import estimate
from qmpack.hardware import load_preset
from qmpack.layout import physical_distance_layout
from qmpack.report import dumps, estimate_section, new_report, plan_section, validate, write_report

FALCON = load_preset("falcon27")


def test_report_round_trip(tmp_path):
    plan = physical_distance_layout(workload(10, 0), FALCON, 1)
    rep = new_report("compile", {"command": "compile"}, FALCON)
    rep["plan"] = plan_section(plan, FALCON)
    rep["estimate"] = estimate_section(estimate(plan, FALCON))
    path = write_report(rep, tmp_path)
    assert json.loads(path.read_text()) == json.loads(dumps(rep))
    assert dumps(rep) == dumps(json.loads(dumps(rep)))


def test_schema_rejects_unknown_sections_and_nan():
    rep = new_report("compile", {}, FALCON)
    validate(rep)
    with pytest.raises(jsonschema.ValidationError):
        validate(dict(rep, extra=1))
    with pytest.raises(jsonschema.ValidationError):
        validate(dict(rep, command="deploy"))
    with pytest.raises(ValueError):
        dumps(dict(rep, warnings=[float("nan")]))


def test_device_fingerprint_tracks_calibration():
    a = new_report("compile", {}, FALCON)["device"]["sha256"]
    b = new_report("compile", {}, FALCON.with_uniform_errors(0.01))["device"]["sha256"]
    assert a != b
