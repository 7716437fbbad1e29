"""Deterministic file output: CSV tables, two-column profiles and JSON reports.

Identical inputs produce byte-identical files: floats carry a fixed count of
significant digits, rows keep their given order, and JSON keys are sorted.
"""
import json
import logging
import math
from pathlib import Path
from typing import Any, Iterable, List, Optional, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel

from app.core.config import settings
from app.schemas.core import Field
from app.utils.helpers import format_float

logger = logging.getLogger(__name__)

RowLike = Union[dict, BaseModel]


def _float_format() -> str:
    return f"%.{settings.FLOAT_DIGITS}g"


def _as_dict(row: RowLike) -> dict:
    if isinstance(row, BaseModel):
        return row.model_dump(by_alias=True)
    return dict(row)


def to_frame(rows: Iterable[RowLike], columns: Optional[List[str]] = None) -> pd.DataFrame:
    frame = pd.DataFrame([_as_dict(row) for row in rows])
    if columns is not None:
        frame = frame.reindex(columns=columns)
    return frame


def write_table(rows: Union[Iterable[RowLike], pd.DataFrame], path: Path, columns: Optional[List[str]] = None) -> Path:
    """Write rows as CSV; an empty row list still writes the header when columns are known"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = rows if isinstance(rows, pd.DataFrame) else to_frame(rows, columns)
    if frame.empty and columns is not None and frame.columns.empty:
        frame = pd.DataFrame(columns=columns)
    frame.to_csv(path, index=False, float_format=_float_format(), lineterminator="\n")
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path


def write_profile(path: Path, field: Field) -> Path:
    """(coordinate, value) pairs of one field, one node per line"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = np.column_stack([np.asarray(field.grid.nodes), np.asarray(field.values)])
    fmt = _float_format()
    np.savetxt(path, data, fmt=[fmt, fmt], header=f"{field.kind} at t={format_float(field.time)}")
    return path


def _sanitize(value: Any) -> Any:
    """Recursively make a dumped model JSON-stable: non-finite and long floats become fixed strings"""
    if isinstance(value, dict):
        return {str(k): _sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_sanitize(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_sanitize(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            return format_float(value)
        return float(format_float(value))
    return value


def write_json(payload: Union[dict, BaseModel], path: Path, exclude: Optional[set] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(payload, BaseModel):
        payload = payload.model_dump(by_alias=True, exclude=exclude)
    text = json.dumps(_sanitize(payload), indent=2, sort_keys=True)
    path.write_text(text + "\n", encoding="utf-8")
    logger.info(f"Wrote report {path}")
    return path
