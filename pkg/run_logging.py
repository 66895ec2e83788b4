"""
Run Logging Utility

Console banners for experiment runs and gate tables, plus JSON artifacts of
each run payload. Disabled by default to keep report output clean. Enable via
the RUN_LOGGING_ENABLED env var.
"""
import json
import os
import sys
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

from decouple import config

from diagnostics import _to_jsonable

# Check if logging is enabled (opt-in, default: false)
RUN_LOGGING_ENABLED = config("RUN_LOGGING_ENABLED", default=False, cast=bool)

# Directory for run artifacts
RUN_ARTIFACTS_DIR = Path(config("RUN_ARTIFACTS_DIR", default=".run-artifacts"))


def _enabled() -> bool:
    return RUN_LOGGING_ENABLED


def print_run_header(tag: str, *, settings: Optional[Dict[str, Any]] = None) -> None:
    """
    Print a run banner to stdout (only if RUN_LOGGING_ENABLED=true).

    Args:
        tag: Experiment tag, e.g. "MC" or "LIMIT"
        settings: Key/value pairs shown under the banner
    """
    if not _enabled():
        return

    print("\n" + "=" * 70 + f"\n=== [{tag}] RUN ===\n" + "=" * 70, flush=True)
    for key, value in (settings or {}).items():
        print(f"[{tag}] {key}: {value}", flush=True)
    print("=" * 70 + "\n", flush=True)


def print_gate_table(tag: str, gates: Iterable) -> None:
    """
    Print one line per gate (only if RUN_LOGGING_ENABLED=true).

    Args:
        tag: Experiment tag
        gates: GateResult-like objects with name, value, threshold, passed
    """
    if not _enabled():
        return

    print("\n" + "=" * 70 + f"\n=== [{tag}] GATES ===\n" + "=" * 70, flush=True)
    for gate in gates:
        status = "PASS" if gate.passed else "FAIL"
        print(f"[{tag}] {status} {gate.name}: {gate.value:.6g} (threshold {gate.threshold:.6g})", flush=True)
    print("=" * 70 + "\n", flush=True)


def warn(message: str) -> None:
    """Always printed: failed gates and degenerate statistics must reach the user."""
    print(f"[WARN] {message}", file=sys.stderr, flush=True)


def save_run_artifact(tag: str, payload: Dict[str, Any]) -> Optional[Path]:
    """
    Save a run payload as JSON (only if RUN_LOGGING_ENABLED=true).

    Returns:
        Path of the written file, or None if disabled or the write failed
    """
    if not _enabled():
        return None

    try:
        os.makedirs(RUN_ARTIFACTS_DIR, exist_ok=True)
        timestamp = datetime.utcnow().strftime("%Y%m%d_%H%M%S_%f")
        path = RUN_ARTIFACTS_DIR / f"{timestamp}_{tag.lower()}.json"
        with open(path, "w") as f:
            json.dump(_to_jsonable(payload), f, indent=2)
        return path
    except Exception as e:
        # Don't fail the run if logging fails
        print(f"[WARN] Failed to save run artifact: {e}", file=sys.stderr, flush=True)
        return None
