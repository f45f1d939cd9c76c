"""Right-censored survival samples: CSV ingestion, validation, grouping."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

__all__ = [
    "Observation",
    "Dataset",
    "DataError",
    "SchemaError",
    "RowError",
    "EmptyEventsError",
    "parse_csv",
    "split_by_group",
]


class DataError(ValueError):
    """Base class for ingestion and validation failures."""


class SchemaError(DataError):
    """A required column is missing from the header."""


class RowError(DataError):
    """A data row failed to parse or violated a field invariant."""

    def __init__(self, row: int, message: str):
        super().__init__(f"row {row}: {message}")
        self.row = row


class EmptyEventsError(DataError):
    """A sample contains no observed events, so nothing is estimable."""


class Observation(NamedTuple):
    time: float
    status: int
    group: str | None = None


@dataclass(frozen=True)
class Dataset:
    """An ordered right-censored sample.

    ``times[i]`` is the observed follow-up time (event or censoring,
    whichever came first) and ``status[i]`` is 1 for an observed event,
    0 for right censoring.  ``groups`` is None for ungrouped data.

    Estimation requires at least one event; ingestion and curve fitting
    enforce that, while the container itself also admits all-censored
    samples (they arise transiently in simulation and resampling).
    """

    times: np.ndarray
    status: np.ndarray
    groups: tuple[str, ...] | None = None
    time_unit: str | None = field(default=None, compare=False)

    def __post_init__(self):
        times = np.ascontiguousarray(self.times, dtype=float)
        status = np.ascontiguousarray(self.status, dtype=np.int64)
        times.flags.writeable = False
        status.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "status", status)
        if times.size == 0:
            raise DataError("dataset is empty")
        if times.shape != status.shape:
            raise DataError("times and status have different lengths")
        if not np.all(np.isfinite(times)) or np.any(times < 0):
            raise DataError("times must be finite and nonnegative")
        if not np.all((status == 0) | (status == 1)):
            raise DataError("status values must be 0 or 1")
        if self.groups is not None and len(self.groups) != times.size:
            raise DataError("groups and times have different lengths")

    def __len__(self) -> int:
        return int(self.times.size)

    @property
    def n_events(self) -> int:
        return int(self.status.sum())

    @property
    def observations(self) -> list[Observation]:
        groups = self.groups if self.groups is not None else [None] * len(self)
        return [
            Observation(float(t), int(s), g)
            for t, s, g in zip(self.times, self.status, groups)
        ]


def _open_source(source):
    """Return a text stream for a path, bytes, or file-like source."""
    if isinstance(source, (str, Path)):
        return open(source, "r", encoding="utf-8", newline="")
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8"))
    if isinstance(source, io.TextIOBase):
        return source
    # binary file-like
    return io.TextIOWrapper(source, encoding="utf-8", newline="")


def parse_csv(
    source,
    time_col: str = "time",
    status_col: str = "status",
    group_col: str | None = None,
    time_unit: str | None = None,
) -> Dataset:
    """Read a delimited text file into a :class:`Dataset`.

    Columns are located by name in the header row, not by position.  Row
    numbering in error messages starts at 1 for the first data row.

    Raises
    ------
    SchemaError
        A named column is absent from the header.
    RowError
        A cell fails to parse or violates a field invariant.
    EmptyEventsError
        No row has status 1.
    """
    stream = _open_source(source)
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("input has no header row") from None
    header = [h.strip() for h in header]
    index: dict[str, int] = {}
    for name in (time_col, status_col) + ((group_col,) if group_col else ()):
        if name not in header:
            raise SchemaError(f"column {name!r} not found in header {header}")
        index[name] = header.index(name)

    times: list[float] = []
    status: list[int] = []
    groups: list[str] = []
    for row_no, row in enumerate(reader, start=1):
        if not row or all(cell.strip() == "" for cell in row):
            continue
        if len(row) < len(header):
            raise RowError(row_no, f"expected {len(header)} cells, got {len(row)}")
        t_text = row[index[time_col]].strip()
        s_text = row[index[status_col]].strip()
        try:
            t = float(t_text)
        except ValueError:
            raise RowError(row_no, f"unparsable time {t_text!r}") from None
        try:
            s = int(s_text)
        except ValueError:
            raise RowError(row_no, f"unparsable status {s_text!r}") from None
        if not np.isfinite(t) or t < 0:
            raise RowError(row_no, f"time must be finite and nonnegative, got {t_text}")
        if s not in (0, 1):
            raise RowError(row_no, f"status must be 0 or 1, got {s_text}")
        if group_col is not None:
            g = row[index[group_col]].strip()
            if g == "":
                raise RowError(row_no, f"empty group cell in column {group_col!r}")
            groups.append(g)
        times.append(t)
        status.append(s)

    if not times:
        raise DataError("input has no data rows")
    if not any(status):
        raise EmptyEventsError("input contains no observed events")
    return Dataset(
        times=np.asarray(times, dtype=float),
        status=np.asarray(status, dtype=np.int64),
        groups=tuple(groups) if group_col is not None else None,
        time_unit=time_unit,
    )


def split_by_group(ds: Dataset) -> dict[str, Dataset]:
    """Partition a grouped dataset into one sub-dataset per group label.

    Group order follows first appearance.  Every sub-dataset must satisfy
    the Dataset invariants; a group with zero events raises
    :class:`EmptyEventsError` naming the group.
    """
    if ds.groups is None:
        raise DataError("dataset has no group labels")
    labels: list[str] = []
    for g in ds.groups:
        if g not in labels:
            labels.append(g)
    out: dict[str, Dataset] = {}
    groups = np.asarray(ds.groups)
    for label in labels:
        mask = groups == label
        sub_status = ds.status[mask]
        if not np.any(sub_status == 1):
            raise EmptyEventsError(f"group {label!r} contains no observed events")
        out[label] = Dataset(
            times=ds.times[mask],
            status=sub_status,
            groups=None,
            time_unit=ds.time_unit,
        )
    return out
