#!/usr/bin/env python3
"""
Test report serialization: payload validation, output formats and
byte-identical output for identical configurations.
"""
import csv
import json
import math
import os
import sys
import tempfile
from contextlib import redirect_stdout
from io import StringIO

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from adapters import (
    REPORT_SCHEMA,
    _validate_payload,
    payload_to_text,
    report_to_payload,
    write_json,
    write_jsonl,
    write_report,
    write_rows_csv,
)
from harness import ExperimentConfig, GateResult, McReport, mc_experiment


def _report(**overrides):
    cfg = ExperimentConfig(group="so-odd", n=2, replicates=10, seed=3)
    fields = {
        "experiment": "mc",
        "config": cfg,
        "sample_mean": 0.5,
        "z_scores": {"mean": 1.25},
        "gates": [GateResult.below("z_mean", 1.25, 4.0)],
        "runtime": 12.5,
        "jobs": 8,
    }
    fields.update(overrides)
    return McReport(**fields)


def test_payload_shape():
    """Schema tag present; runtime and jobs never serialized."""
    print("\n" + "=" * 70)
    print("Test: report payload")
    print("=" * 70)

    payload = report_to_payload(_report())
    assert payload["schema"] == REPORT_SCHEMA
    assert payload["config"]["group"] == "so-odd"
    assert payload["passed"] is True
    assert "runtime" not in payload and "jobs" not in payload
    assert "jobs" not in payload["config"]
    print("✓ payload shape")


def test_non_finite_values_become_null():
    """inf/NaN are not valid JSON; they serialize as null."""
    payload = report_to_payload(_report(z_scores={"mean": math.inf, "variance": math.nan},
                                        gates=[GateResult.below("z_mean", math.inf, 4.0)]))
    assert payload["z_scores"] == {"mean": None, "variance": None}
    assert payload["gates"][0]["value"] is None
    assert payload["passed"] is False
    json.loads(payload_to_text(payload, "json"))
    print("✓ non-finite values become null")


def test_numpy_and_complex_values():
    """numpy scalars and complex numbers in details are converted."""
    payload = report_to_payload(_report(details={"count": np.int64(3), "cf": complex(0.5, -0.25),
                                                 "grid": np.array([1.0, 2.0])}))
    assert payload["details"] == {"count": 3, "cf": {"re": 0.5, "im": -0.25}, "grid": [1.0, 2.0]}
    print("✓ numpy and complex values")


def test_validator_rejects_bad_payloads():
    """Each broken field is named in the error."""
    good = report_to_payload(_report())

    broken = dict(good)
    del broken["gates"]
    with pytest.raises(ValueError, match="missing field 'gates'"):
        _validate_payload(broken)

    with pytest.raises(ValueError, match="schema"):
        _validate_payload({**good, "schema": "other/v0"})

    with pytest.raises(ValueError, match="passed must be bool"):
        _validate_payload({**good, "passed": "yes"})

    with pytest.raises(ValueError, match="config.n"):
        _validate_payload({**good, "config": {**good["config"], "n": 0}})

    with pytest.raises(ValueError, match="disagrees"):
        _validate_payload({**good, "passed": False})

    bad_gate = {"name": "z", "value": 1.0, "threshold": 4.0}
    with pytest.raises(ValueError, match=r"gates\[0\]"):
        _validate_payload({**good, "gates": [bad_gate]})

    with pytest.raises(ValueError, match="z_scores"):
        _validate_payload({**good, "z_scores": {"mean": "high"}})
    print("✓ validator errors")


def test_text_formats():
    """json is indented with sorted keys, jsonl is one line, csv is flattened key/value rows."""
    payload = report_to_payload(_report())
    text = payload_to_text(payload, "json")
    assert json.loads(text) == payload and text.startswith("{\n")

    line = payload_to_text(payload, "jsonl")
    assert line.count("\n") == 1 and json.loads(line) == payload

    rows = list(csv.reader(StringIO(payload_to_text(payload, "csv"))))
    assert rows[0] == ["key", "value"]
    flat = dict(rows[1:])
    assert flat["config.group"] == "so-odd"
    assert flat["gates[0].name"] == "z_mean"
    assert flat["exact_mean"] == ""

    with pytest.raises(ValueError):
        payload_to_text(payload, "yaml")
    print("✓ text formats")


def test_identical_configs_write_identical_bytes():
    """Two runs of the same configuration produce byte-identical files."""
    with tempfile.TemporaryDirectory() as tmp:
        paths = []
        for i in range(2):
            cfg = ExperimentConfig(group="so-even", n=2, replicates=30, seed=4, chunk_size=10, jobs=1 + i)
            path = os.path.join(tmp, f"run{i}.json")
            write_report(mc_experiment(cfg), path, "json")
            paths.append(path)
        with open(paths[0], "rb") as a, open(paths[1], "rb") as b:
            assert a.read() == b.read()
    print("✓ byte-identical output")


def test_row_writers():
    """jsonl and csv row writers, to a file and to stdout."""
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "samples.jsonl")
        count = write_jsonl([{"replicate": 0, "w2sq": 1.5}, {"replicate": 1, "w2sq": math.nan}], path)
        assert count == 2
        with open(path) as f:
            lines = [json.loads(line) for line in f]
        assert lines[1]["w2sq"] is None

        path = os.path.join(tmp, "rows.csv")
        write_rows_csv([{"t": 0.5, "re": 1.0, "extra": "x"}], ["t", "re"], path)
        with open(path) as f:
            assert f.read() == "t,re\n0.5,1.0\n"

    captured = StringIO()
    with redirect_stdout(captured):
        write_json({"b": 1, "a": complex(1, 2)})
    out = captured.getvalue()
    assert json.loads(out) == {"a": {"re": 1.0, "im": 2.0}, "b": 1}
    print("✓ row writers")


def main():
    tests = [
        test_payload_shape,
        test_non_finite_values_become_null,
        test_numpy_and_complex_values,
        test_validator_rejects_bad_payloads,
        test_text_formats,
        test_identical_configs_write_identical_bytes,
        test_row_writers,
    ]
    for test in tests:
        test()
    print("\n✓ ALL ADAPTER TESTS PASSED")


if __name__ == "__main__":
    main()
