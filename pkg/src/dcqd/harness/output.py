"""Result tables and their CSV / JSON serialisation.

Floats are written with ``repr`` so output is exact and byte-stable. Nothing
time- or host-dependent goes into a table, so identical inputs give identical
files.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .. import __version__


def _plain(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    return v


def _cell(v) -> str:
    v = _plain(v)
    return repr(v) if isinstance(v, float) else str(v)


@dataclass
class ResultTable:
    columns: list[str]
    rows: list[list] = field(default_factory=list)
    metadata: list[tuple[str, str]] = field(default_factory=list)

    def add(self, *values):
        if len(values) != len(self.columns):
            raise ValueError(f"row has {len(values)} values, table has {len(self.columns)} columns")
        self.rows.append([_plain(v) for v in values])

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key, val in self.metadata:
            buf.write(f"# {key} = {val}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_cell(v) for v in r])
        return buf.getvalue()

    def to_json(self) -> str:
        data = {
            "metadata": {k: v for k, v in self.metadata},
            "columns": {c: [r[i] for r in self.rows] for i, c in enumerate(self.columns)},
        }
        return json.dumps(data, indent=1, allow_nan=False) + "\n"

    def render(self, fmt: str) -> str:
        return self.to_json() if fmt == "json" else self.to_csv()


def standard_metadata(cfg, command: str) -> list[tuple[str, str]]:
    """Version, command, seed, codes and the full config echo."""
    meta = [("dcqd", __version__), ("command", command), ("seed", str(cfg.seed)),
            ("codes", ", ".join(cfg.codes))]
    meta += [(f"config.{k}", v) for k, v in cfg.echo() if k not in ("workers", "out", "format")]
    return meta


def read_csv(text: str) -> tuple[dict[str, str], list[str], list[list[str]]]:
    """Inverse of :meth:`ResultTable.to_csv` (cells stay as strings)."""
    meta, body = {}, []
    for line in text.splitlines():
        if line.startswith("# "):
            k, _, v = line[2:].partition(" = ")
            meta[k] = v
        else:
            body.append(line)
    rows = list(csv.reader(body))
    return meta, rows[0], rows[1:]
