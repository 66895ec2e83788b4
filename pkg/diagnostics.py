import json
import os
from datetime import datetime
from fractions import Fraction
from typing import Any, Optional

import numpy as np
from decouple import config

DIAGNOSTICS_ENABLED = config("DIAGNOSTICS_ENABLED", default=False, cast=bool)
DIAGNOSTICS_TRACE_DIR = config("DIAGNOSTICS_TRACE_DIR", default="cache/trace")


def _to_jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(x) for x in obj]
    if isinstance(obj, np.ndarray):
        return _to_jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if hasattr(obj, "to_json"):
        return _to_jsonable(obj.to_json())
    return obj


def _ensure_dir(path: str):
    os.makedirs(path, exist_ok=True)


class DiagnosticTrace:
    """Per-stage JSON dumps of one experiment run under <base_dir>/<experiment>/<run_id>/."""

    def __init__(self, experiment: str, run_id: Optional[str] = None, base_dir: str = None):
        base_dir = base_dir or DIAGNOSTICS_TRACE_DIR
        self.experiment = experiment
        self.run_id = run_id or datetime.utcnow().strftime("%Y%m%dT%H%M%S")
        self.dir = os.path.join(base_dir, experiment or "unknown", self.run_id)
        _ensure_dir(self.dir)

    def save(self, stage: str, obj: Any) -> str:
        path = os.path.join(self.dir, f"{stage}.json")
        # stages like chunks/chunk_0003 live in subdirectories
        _ensure_dir(os.path.dirname(path))
        with open(path, "w", encoding="utf-8") as f:
            json.dump(_to_jsonable(obj), f, indent=2, ensure_ascii=False)
        return path


def maybe_trace(experiment: str, run_id: Optional[str] = None) -> Optional[DiagnosticTrace]:
    """A DiagnosticTrace when DIAGNOSTICS_ENABLED is set, else None."""
    if not DIAGNOSTICS_ENABLED:
        return None
    return DiagnosticTrace(experiment, run_id)
