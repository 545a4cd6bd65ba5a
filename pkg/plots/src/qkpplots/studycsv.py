"""Parsers for the study and time-series CSV files."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

STUDY_COLUMNS = (
    "eps", "tau", "h1_err_n", "h1_err_u1", "h1_err_u2",
    "triple_sq", "window_exit", "wall_seconds",
)


class SchemaError(Exception):
    """The CSV does not follow the documented schema."""


@dataclass(frozen=True)
class StudyData:
    rows: tuple  # dict per eps
    fitted_order: float | None
    fitted_constant: float | None
    comments: tuple


def read_study_csv(path) -> StudyData:
    lines = Path(path).read_text().strip().split("\n")
    if not lines:
        raise SchemaError(f"{path}: empty file")
    header = lines[0].split(",")
    if tuple(header) != STUDY_COLUMNS:
        raise SchemaError(
            f"{path}: header {header} does not match {list(STUDY_COLUMNS)}"
        )
    rows = []
    fitted_order = fitted_constant = None
    comments = []
    for line in lines[1:]:
        if line.startswith("#"):
            comments.append(line)
            body = line[1:].strip()
            if body.startswith("fitted_order="):
                fitted_order = float(body.split("=", 1)[1])
            elif body.startswith("fitted_constant="):
                fitted_constant = float(body.split("=", 1)[1])
            continue
        parts = line.split(",")
        if len(parts) != len(STUDY_COLUMNS):
            raise SchemaError(f"{path}: row has {len(parts)} columns: {line!r}")
        try:
            row = {name: float(value) for name, value in zip(STUDY_COLUMNS, parts)}
        except ValueError as err:
            raise SchemaError(f"{path}: non-numeric entry in {line!r}") from err
        rows.append(row)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return StudyData(rows=tuple(rows), fitted_order=fitted_order,
                     fitted_constant=fitted_constant, comments=tuple(comments))


def read_timeseries_csv(path) -> dict:
    """Generic time series: first column t, remaining columns by name."""
    lines = Path(path).read_text().strip().split("\n")
    if len(lines) < 2:
        raise SchemaError(f"{path}: need a header and at least one row")
    names = lines[0].split(",")
    if names[0] != "t":
        raise SchemaError(f"{path}: first column must be t, got {names[0]!r}")
    columns = {name: [] for name in names}
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != len(names):
            raise SchemaError(f"{path}: ragged row {line!r}")
        for name, value in zip(names, parts):
            try:
                columns[name].append(float(value))
            except ValueError as err:
                raise SchemaError(f"{path}: non-numeric entry {value!r}") from err
    return columns
