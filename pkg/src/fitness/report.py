"""Byte-stable JSON report documents and their flat CSV sidecars."""

from __future__ import annotations

import csv
import io
import json
import math
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .metrics import FAIRNESS_NAMES, PERFORMANCE_NAMES

TOOL = "fitness"


def _clean(value: Any) -> Any:
    """Plain JSON types only; non-finite floats become null."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_clean(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        f = float(value)
        return f if math.isfinite(f) else None
    return value


def _seeds(body: dict) -> list[int]:
    seeds = []
    if "config" in body and "seed" in body["config"]:
        seeds.append(body["config"]["seed"])
    seeds += [r["seed"] for r in body.get("repeats", [])]
    if "seed" in body and "config" not in body:
        seeds.append(body["seed"])
    return seeds


def document(report: Any) -> dict:
    """Wrap a report (anything with ``to_dict`` or a dict carrying ``kind``) in the envelope."""
    body = report.to_dict() if hasattr(report, "to_dict") else dict(report)
    if "kind" not in body:
        raise ValueError("report body has no 'kind'")
    body = _clean(body)
    return {"tool": TOOL, "version": __version__, "seeds": _seeds(body), **body}


def dumps(report: Any) -> str:
    return json.dumps(document(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def load_schema() -> dict:
    return json.loads(resources.files("fitness").joinpath("report_schema.json").read_text(encoding="utf-8"))


SIDECAR_COLUMNS = (
    "repeat", "seed", "status", "method", "feature",
    *PERFORMANCE_NAMES, *FAIRNESS_NAMES, "composite_fairness",
)


def _fmt(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def sidecar_rows(doc: dict) -> list[list[str]]:
    """One row per (repeat, method, protected feature) of a run report."""
    rows = []
    for r in doc.get("repeats", []):
        if r["status"] != "ok":
            rows.append([_fmt(r["index"]), _fmt(r["seed"]), r["status"]] + [""] * (len(SIDECAR_COLUMNS) - 3))
            continue
        for method, m in r["metrics"].items():
            for feature, triple in m["fairness"].items():
                rows.append(
                    [_fmt(r["index"]), _fmt(r["seed"]), r["status"], method, feature]
                    + [_fmt(m[k]) for k in PERFORMANCE_NAMES]
                    + [_fmt(triple[k]) for k in FAIRNESS_NAMES]
                    + [_fmt(m["composite_fairness"])]
                )
    return rows


def sidecar_text(doc: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SIDECAR_COLUMNS)
    w.writerows(sidecar_rows(doc))
    return buf.getvalue()


def write_report(report: Any, path: str | Path, sidecar: bool = True) -> Path | None:
    """Write the JSON document to ``path``; for run reports also ``<stem>.csv`` beside it.

    Returns the sidecar path when one was written. Raises OSError when the
    target cannot be written.
    """
    path = Path(path)
    doc = document(report)
    text = json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"
    path.write_text(text, encoding="utf-8")
    if sidecar and doc["kind"] == "run_report":
        side = path.with_suffix(".csv")
        side.write_text(sidecar_text(doc), encoding="utf-8")
        return side
    return None
