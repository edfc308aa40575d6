"""CSV/JSON writers for grids, sweep tables and provenance sidecars."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np


def fmt(value) -> str:
    """Fixed 17-significant-digit representation; ``nan`` for missing values."""
    value = float(value)
    if math.isnan(value):
        return "nan"
    return f"{value:.16e}"


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".sidecar.json")


def write_grid(path, field, value_fmt: str = "csv") -> Path:
    """Write a PhaseSpaceField row-major in re, then im."""
    path = Path(path)
    re, im = field.grid.re, field.grid.im
    if value_fmt == "json":
        payload = {"kind": field.kind, "re": [float(x) for x in re], "im": [float(y) for y in im],
                   "values": [[float(v) for v in row] for row in field.values]}
        path.write_text(json.dumps(payload) + "\n")
        return path
    lines = ["re,im,value"]
    for i, x in enumerate(re):
        sx = fmt(x)
        for j, y in enumerate(im):
            lines.append(f"{sx},{fmt(y)},{fmt(field.values[i, j])}")
    path.write_text("\n".join(lines) + "\n")
    return path


def write_table(path, columns, rows, value_fmt: str = "csv") -> Path:
    path = Path(path)
    if value_fmt == "json":
        payload = {"columns": list(columns),
                   "rows": [[None if math.isnan(float(v)) else float(v) for v in row] for row in rows]}
        path.write_text(json.dumps(payload) + "\n")
        return path
    lines = [",".join(columns)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(path, payload: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")
    return path
