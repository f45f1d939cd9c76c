"""Shared output document: one model, rendered as table, CSV, or JSON."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

__all__ = ["Section", "OutputDocument", "render", "FORMATS"]

FORMATS = ("table", "csv", "json")


@dataclass
class Section:
    columns: list[str]
    rows: list[dict]
    label: str | None = None


@dataclass
class OutputDocument:
    """Renderer-independent result of one CLI command.

    Metadata records everything needed to reproduce and interpret the run:
    tool version, seed, grid, band level, and the conventions in effect.
    Infinite values serialize as the string "inf" in every format; absent
    values are null/empty.
    """

    command: str
    metadata: dict
    sections: list[Section] = field(default_factory=list)


def _plain(value):
    """JSON-safe scalar: inf -> 'inf', NaN -> None, numpy scalars -> python."""
    if value is None or isinstance(value, (bool, str, int)):
        return value
    value = float(value)
    if math.isnan(value):
        return None
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


def _sanitize(obj):
    if isinstance(obj, dict):
        return {key: _sanitize(val) for key, val in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(val) for val in obj]
    return _plain(obj)


def to_json(doc: OutputDocument) -> str:
    payload = {
        "command": doc.command,
        "metadata": _sanitize(doc.metadata),
        "sections": [
            {
                "label": sec.label,
                "columns": sec.columns,
                "rows": [_sanitize(row) for row in sec.rows],
            }
            for sec in doc.sections
        ],
    }
    return json.dumps(payload, indent=2, allow_nan=False) + "\n"


def _cell_text(value, human: bool) -> str:
    value = _plain(value)
    if value is None:
        return "-" if human else ""
    if isinstance(value, bool):
        return ("yes" if value else "no") if human else ("true" if value else "false")
    if isinstance(value, float):
        return f"{value:.6g}" if human else repr(value)
    return str(value)


def to_csv(doc: OutputDocument) -> str:
    buf = io.StringIO()
    many = len(doc.sections) > 1
    for sec in doc.sections:
        if many:
            buf.write(f"# section: {sec.label or ''}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(sec.columns)
        for row in sec.rows:
            writer.writerow([_cell_text(row.get(c), human=False) for c in sec.columns])
    return buf.getvalue()


def to_table(doc: OutputDocument) -> str:
    lines: list[str] = []
    meta_bits = []
    for key, val in doc.metadata.items():
        if isinstance(val, dict):
            continue
        if isinstance(val, (list, tuple)):
            if not val:
                continue
            text = ",".join(_cell_text(v, human=True) for v in val)
        else:
            text = _cell_text(val, human=True)
        meta_bits.append(f"{key}={text}")
    lines.append(f"# {doc.command}: " + "  ".join(meta_bits))
    for sec in doc.sections:
        if sec.label:
            lines.append(f"## {sec.label}")
        texts = [
            [_cell_text(row.get(c), human=True) for c in sec.columns]
            for row in sec.rows
        ]
        widths = [
            max(len(c), *(len(t[i]) for t in texts)) if texts else len(c)
            for i, c in enumerate(sec.columns)
        ]
        lines.append("  ".join(c.rjust(w) for c, w in zip(sec.columns, widths)))
        for t in texts:
            lines.append("  ".join(cell.rjust(w) for cell, w in zip(t, widths)))
    return "\n".join(lines) + "\n"


def render(doc: OutputDocument, fmt: str) -> str:
    if fmt == "json":
        return to_json(doc)
    if fmt == "csv":
        return to_csv(doc)
    if fmt == "table":
        return to_table(doc)
    raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")
