import csv
import io
import json
import math
import sys
from typing import Any, Dict, Iterable, List, Optional

from diagnostics import _to_jsonable

REPORT_SCHEMA = "haar-wasserstein/report-v1"
REQUIRED_FIELDS = ("schema", "experiment", "config", "gates", "passed")


def _finite_or_none(value: Any) -> Any:
    """JSON has no NaN/Infinity; non-finite floats become null."""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _finite_or_none(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_finite_or_none(v) for v in value]
    return value


def report_to_payload(report) -> Dict[str, Any]:
    """
    Map an McReport (or any object with to_json) to the serialized payload.

    Returns:
        JSON-safe dict with a schema tag; runtime and jobs are never included
    """
    body = _to_jsonable(report.to_json())
    body.pop("runtime", None)
    body.pop("jobs", None)
    payload = {"schema": REPORT_SCHEMA, **_finite_or_none(body)}
    _validate_payload(payload)
    return payload


def _validate_payload(payload: Dict):
    """
    Validate a report payload before it is written.

    Raises:
        ValueError: naming the offending field
    """
    for name in REQUIRED_FIELDS:
        if name not in payload:
            raise ValueError(f"report payload is missing field '{name}'")
    if payload["schema"] != REPORT_SCHEMA:
        raise ValueError(f"schema must be '{REPORT_SCHEMA}', got {payload['schema']!r}")
    if not isinstance(payload["passed"], bool):
        raise ValueError(f"passed must be bool, got {type(payload['passed'])}")

    config = payload["config"]
    if not isinstance(config, dict):
        raise ValueError(f"config must be dict, got {type(config)}")
    for name in ("group", "n", "replicates", "seed"):
        if name not in config:
            raise ValueError(f"config is missing field '{name}'")
    if not isinstance(config["n"], int) or config["n"] < 1:
        raise ValueError(f"config.n must be a positive integer, got {config['n']!r}")

    gates = payload["gates"]
    if not isinstance(gates, list):
        raise ValueError(f"gates must be list, got {type(gates)}")
    for i, gate in enumerate(gates):
        for name in ("name", "value", "threshold", "passed"):
            if name not in gate:
                raise ValueError(f"gates[{i}] is missing field '{name}'")
        if not isinstance(gate["passed"], bool):
            raise ValueError(f"gates[{i}].passed must be bool")
    if payload["passed"] != all(g["passed"] for g in gates):
        raise ValueError("passed disagrees with the gate list")

    for section in ("z_scores", "ks_statistics", "standard_errors"):
        for key, value in (payload.get(section) or {}).items():
            if value is not None and not isinstance(value, (int, float)):
                raise ValueError(f"{section}[{key}] must be numeric, got {type(value)}")


def _flatten(prefix: str, value: Any, out: List[List[str]]) -> None:
    if isinstance(value, dict):
        for k, v in value.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, out)
    elif isinstance(value, list):
        for i, v in enumerate(value):
            _flatten(f"{prefix}[{i}]", v, out)
    else:
        out.append([prefix, "" if value is None else str(value)])


def payload_to_text(payload: Dict[str, Any], fmt: str) -> str:
    """Render a validated payload as json (indented, sorted keys), jsonl (one line) or csv (key,value)."""
    if fmt == "json":
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if fmt == "jsonl":
        return json.dumps(payload, sort_keys=True) + "\n"
    if fmt == "csv":
        rows: List[List[str]] = []
        _flatten("", payload, rows)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["key", "value"])
        writer.writerows(rows)
        return buf.getvalue()
    raise ValueError(f"unknown format '{fmt}'")


def _emit(text: str, out: Optional[str]) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(out, "w", encoding="utf-8", newline="") as f:
        f.write(text)


def write_report(report, out: Optional[str] = None, fmt: str = "json") -> Dict[str, Any]:
    payload = report_to_payload(report)
    _emit(payload_to_text(payload, fmt), out)
    return payload


def write_jsonl(records: Iterable[Dict[str, Any]], out: Optional[str] = None) -> int:
    """One JSON object per line; returns the number of records written."""
    lines = [json.dumps(_finite_or_none(_to_jsonable(r)), sort_keys=True) for r in records]
    _emit("".join(line + "\n" for line in lines), out)
    return len(lines)


def write_rows_csv(rows: List[Dict[str, Any]], columns: List[str], out: Optional[str] = None) -> None:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: row.get(k) for k in columns})
    _emit(buf.getvalue(), out)


def json_text(obj: Any) -> str:
    """Indented, key-sorted JSON with numpy values converted and non-finite floats as null."""
    return json.dumps(_finite_or_none(_to_jsonable(obj)), indent=2, sort_keys=True) + "\n"


def write_json(obj: Any, out: Optional[str] = None) -> None:
    _emit(json_text(obj), out)
