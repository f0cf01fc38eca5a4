"""CSV/JSON writers and the run manifest."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

__all__ = ["RunManifest", "config_digest", "format_value", "read_csv", "write_csv", "write_json"]


def format_value(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % float(value)
    return str(value)


def write_csv(path: str | Path, rows: Sequence[Mapping[str, Any]], digest: str,
              columns: Sequence[str] | None = None) -> Path:
    """Header row, one line per row, doubles with 17 significant digits.

    The first line is a ``# digest: ...`` comment linking the file to its manifest.
    """
    path = Path(path)
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    with path.open("w", newline="") as fh:
        fh.write(f"# digest: {digest}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([format_value(row[c]) for c in columns])
    return path


def columns_to_rows(columns: Mapping[str, Iterable]) -> list[dict]:
    keys = list(columns)
    arrays = [np.asarray(columns[k]) for k in keys]
    return [dict(zip(keys, vals)) for vals in zip(*arrays)]


def read_csv(path: str | Path) -> tuple[str, list[dict]]:
    """Return ``(digest, rows)``; numeric cells are parsed as floats."""
    with Path(path).open() as fh:
        first = fh.readline().strip()
        digest = first.split(":", 1)[1].strip() if first.startswith("# digest:") else ""
        rows = []
        for row in csv.DictReader(fh):
            parsed = {}
            for k, v in row.items():
                try:
                    parsed[k] = float(v)
                except ValueError:
                    parsed[k] = v
            rows.append(parsed)
    return digest, rows


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, Mapping):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(path: str | Path, payload: Mapping[str, Any]) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")
    return path


def config_digest(subcommand: str, params: Mapping[str, Any], options: Mapping[str, Any]) -> str:
    blob = json.dumps(_jsonable({"subcommand": subcommand, "params": params, "options": options}),
                      sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class RunManifest:
    subcommand: str
    params: dict
    options: dict
    version: str
    outputs: list = field(default_factory=list)
    digest: str = ""

    def __post_init__(self) -> None:
        if not self.digest:
            self.digest = config_digest(self.subcommand, self.params, self.options)

    def write(self, out_dir: str | Path) -> Path:
        payload = {
            "subcommand": self.subcommand,
            "params": self.params,
            "options": self.options,
            "digest": self.digest,
            "outputs": [str(p) for p in self.outputs],
            "version": self.version,
            "timestamp": datetime.now(timezone.utc).isoformat(),
        }
        return write_json(Path(out_dir) / f"manifest_{self.subcommand}.json", payload)
