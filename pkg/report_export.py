#!/usr/bin/env python3
"""
Module: JSON and CSV report export for RelStar
Version: 1.0.0
Development Iteration: v1

Project: RelStar
Created: 2026-10-17

Enhancement: Initial implementation

Features:
- Convert results (pydantic models, dataclasses, numpy values) to plain JSON data
- JSON reports with full-precision floats; inf/nan written as strings
- RFC-4180 CSV tables with 17-significant-digit floats
- Scan tables, iterate logs and radial profiles as CSV rows

UV ENVIRONMENT: Run with `uv run python report_export.py`

INSTALLATION:
uv add numpy pydantic
"""

import csv
import dataclasses
import json
import logging
import math
from pathlib import Path
from typing import Any, Iterable, Optional

import numpy as np
from pydantic import BaseModel

logger = logging.getLogger(__name__)


def _float(value: float) -> float | str:
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


def to_jsonable(value: Any) -> Any:
    """Recursively convert to JSON-safe builtins; floats keep round-trip precision."""
    if isinstance(value, BaseModel):
        return to_jsonable(value.model_dump())
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: to_jsonable(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return _float(float(value))
    if isinstance(value, complex):
        return {"real": _float(value.real), "imag": _float(value.imag)}
    if isinstance(value, Path):
        return str(value)
    return value


def export_json(
    payload: Any,
    output_path: str,
    provenance: Optional[dict[str, Any]] = None,
) -> Optional[str]:
    """
    Write a JSON report.

    Returns:
        Path to saved file, or None on error
    """
    try:
        data = to_jsonable(payload)
        if provenance is not None:
            data = {"provenance": to_jsonable(provenance), "result": data}
        path = Path(output_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        text = json.dumps(data, indent=2, sort_keys=True, allow_nan=False, ensure_ascii=False)
        path.write_text(text + "\n", encoding="utf-8")
        logger.info(f"JSON report saved: {path}")
        return str(path)
    except Exception as e:
        logger.error(f"Failed to export JSON to {output_path}: {e}")
        return None


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        converted = _float(float(value))
        return converted if isinstance(converted, str) else format(converted, ".17g")
    return str(value)


def export_csv(
    rows: Iterable[dict[str, Any]],
    output_path: str,
    columns: Optional[list[str]] = None,
) -> Optional[str]:
    """
    Write dict rows as RFC-4180 CSV; columns default to first-seen key order.

    Returns:
        Path to saved file, or None on error
    """
    try:
        rows = list(rows)
        if columns is None:
            columns = []
            for row in rows:
                columns.extend(key for key in row if key not in columns)
        path = Path(output_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_cell(row.get(column)) for column in columns])
        logger.info(f"CSV saved: {path}")
        return str(path)
    except Exception as e:
        logger.error(f"Failed to export CSV to {output_path}: {e}")
        return None


def scan_table_rows(table, config_hash: Optional[str] = None) -> list[dict[str, Any]]:
    """Flatten a ScanTable into CSV rows (control, observables, flags)."""
    rows = []
    for row in table.rows:
        flat = {table.control_name: row.control}
        flat.update(row.observables)
        flat["flagged"] = row.flagged
        flat["note"] = row.note
        if config_hash:
            flat["config_hash"] = config_hash
        rows.append(flat)
    return rows


def iterate_log_rows(log, config_hash: Optional[str] = None) -> list[dict[str, Any]]:
    """Iterate records as (iteration, objective, gradient_norm, step, restart) rows."""
    rows = []
    for record in log:
        flat = dataclasses.asdict(record)
        if config_hash:
            flat["config_hash"] = config_hash
        rows.append(flat)
    return rows


def export_radial_profile(
    radii: np.ndarray,
    profile: np.ndarray,
    output_path: str,
    config_hash: Optional[str] = None,
) -> Optional[str]:
    """(r, f) CSV of a radial density, with a config_hash column when one is given."""
    columns = ["r", "f"]
    rows = [{"r": float(r), "f": float(f)} for r, f in zip(radii, profile)]
    if config_hash:
        columns.append("config_hash")
        for row in rows:
            row["config_hash"] = config_hash
    return export_csv(rows, output_path, columns=columns)
