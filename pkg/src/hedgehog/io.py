"""Byte-stable CSV and JSON output.

Floats are written with 17 significant digits so that values round-trip
exactly, and dictionaries are emitted with sorted keys.  Nothing
time-dependent goes into a file, so identical inputs give identical bytes.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from . import __version__

__all__ = ["fmt_float", "dumps", "config_hash", "provenance", "profile_csv", "profile_json",
           "write_text", "rows_csv"]


def fmt_float(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        return "null"
    if x == 0.0:
        return "0.0" if math.copysign(1.0, x) > 0 else "-0.0"
    return format(x, ".17g")


def _to_plain(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        obj = {f.name: getattr(obj, f.name) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): _to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_to_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if obj is None or isinstance(obj, str):
        return obj
    if callable(obj):
        return getattr(obj, "__name__", "callable")
    return str(obj)


def _emit(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_emit(obj[k], indent, level + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_emit(v, indent, level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _emit(v, indent, level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return fmt_float(obj)
    if obj is None:
        return "null"
    return json.dumps(obj)


def dumps(obj, indent: int = 2) -> str:
    """Deterministic JSON text with 17-digit floats and a trailing newline."""
    return _emit(_to_plain(obj), indent, 0) + "\n"


def config_hash(config: dict) -> str:
    canon = json.dumps(_to_plain(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def provenance(config: dict, tolerances: dict) -> dict:
    return {
        "package": "hedgehog",
        "version": __version__,
        "config_hash": config_hash(config),
        "tolerances": tolerances,
    }


def _header(prov: dict) -> list[str]:
    lines = []
    for key in sorted(prov):
        val = prov[key]
        text = dumps(val, indent=0).replace("\n", "") if isinstance(val, (dict, list)) else str(val)
        lines.append(f"# {key}: {text}")
    return lines


def rows_csv(columns: list[str], rows, prov: dict | None = None) -> str:
    lines = _header(prov) if prov else []
    lines.append(",".join(columns))
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, (float, np.floating)):
                cells.append(fmt_float(v))
            elif v is None:
                cells.append("")
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def profile_csv(profile, prov: dict | None = None) -> str:
    """Columns ``r, h, dh`` preceded by ``#`` provenance lines."""
    return rows_csv(["r", "h", "dh"], zip(profile.grid, profile.h, profile.dh), prov)


def profile_json(profile, prov: dict | None = None, include_arrays: bool = True) -> str:
    doc = {
        "a2": profile.a2,
        "t": profile.t,
        "domain": profile.domain,
        "solver_meta": profile.solver_meta,
    }
    if include_arrays:
        doc.update(grid=profile.grid, h=profile.h, dh=profile.dh)
    if prov:
        doc["provenance"] = prov
    return dumps(doc)


def write_text(path: str | Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path
