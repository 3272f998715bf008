"""Tabular output: UTF-8 CSV or JSON with 12 significant digits and LF line endings."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Any, Sequence

import numpy as np

from ..errors import UsageError

FLOAT_FORMAT = "{:.12g}"


@dataclass
class Table:
    columns: list
    rows: list = field(default_factory=list)

    def __post_init__(self) -> None:
        self.columns = [str(c) for c in self.columns]
        for r in self.rows:
            self._check(r)

    def _check(self, row: Sequence) -> None:
        if len(row) != len(self.columns):
            raise UsageError(f"row has {len(row)} cells, table has {len(self.columns)} columns")

    def append(self, row: Sequence) -> None:
        self._check(row)
        self.rows.append(list(row))

    @classmethod
    def from_columns(cls, **cols) -> Table:
        names = list(cols)
        arrays = [np.asarray(v).reshape(-1) for v in cols.values()]
        if len({a.size for a in arrays}) > 1:
            raise UsageError("columns differ in length")
        return cls(names, [list(r) for r in zip(*arrays)])


def _cell(v: Any) -> Any:
    if isinstance(v, (bool, np.bool_)):
        return int(bool(v))
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
        return FLOAT_FORMAT.format(v)
    return str(v)


def render(table: Table, fmt: str = "csv") -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(table.columns)
        for r in table.rows:
            w.writerow([_cell(v) for v in r])
        return buf.getvalue()
    if fmt == "json":
        rows = []
        for r in table.rows:
            out = []
            for v in r:
                c = _cell(v)
                out.append(float(c) if isinstance(v, (float, np.floating)) and math.isfinite(float(v)) else c)
            rows.append(out)
        return json.dumps({"columns": table.columns, "rows": rows}, indent=1) + "\n"
    raise UsageError(f"unknown format {fmt!r}; use csv or json")


def emit(table: Table, path, fmt: str | None = None) -> FsPath:
    """Write *table* to *path*; the format defaults to the file suffix."""
    path = FsPath(path)
    fmt = fmt or path.suffix.lstrip(".") or "csv"
    text = render(table, fmt)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def read_csv(path) -> Table:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise UsageError(f"{path} is empty")
    t = Table(rows[0])
    for r in rows[1:]:
        t.append([float(c) for c in r])
    return t
