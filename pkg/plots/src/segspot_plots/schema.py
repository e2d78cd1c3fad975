"""Line-number-aware parsers for the segspot text formats.

Deliberately independent of the segspot package: these plots consume only the
documented file formats, nothing internal.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass


class SchemaError(Exception):
    """Input file violates its documented schema; carries the offending line number."""

    def __init__(self, path, line: int, message: str):
        self.path = path
        self.line = line
        self.message = message
        super().__init__(f"{path}: line {line}: {message}")


@dataclass(frozen=True)
class ReportRow:
    level: float
    method: str
    metric: str
    value: float


REPORT_HEADER = ["distortion_level", "method", "metric", "value"]


def _float(path, line, token, what):
    try:
        return float(token)
    except ValueError:
        raise SchemaError(path, line, f"{what} is not a number: {token!r}") from None


def read_report(path) -> list[ReportRow]:
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != REPORT_HEADER:
            raise SchemaError(path, 1, f"expected header {','.join(REPORT_HEADER)}")
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise SchemaError(path, line, f"expected 4 fields, got {len(row)}")
            level = _float(path, line, row[0], "distortion_level")
            value = _float(path, line, row[3], "value")
            if not 0.0 <= level <= 1.0:
                raise SchemaError(path, line, f"distortion_level out of [0, 1]: {level}")
            if not row[1]:
                raise SchemaError(path, line, "empty method name")
            if not row[2]:
                raise SchemaError(path, line, "empty metric name")
            rows.append(ReportRow(level, row[1], row[2], value))
    if not rows:
        raise SchemaError(path, 1, "report has no data rows")
    return rows


def read_square_matrix(path) -> tuple[list[str], list[list[float]]]:
    """Independence matrices: 'method' header then one named row per method."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "method" or len(header) < 2:
            raise SchemaError(path, 1, "expected header method,<name>,...")
        names = header[1:]
        rows = []
        row_names = []
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(names) + 1:
                raise SchemaError(path, line,
                                  f"expected {len(names) + 1} fields, got {len(row)}")
            row_names.append(row[0])
            rows.append([_float(path, line, tok, "matrix entry") for tok in row[1:]])
    if row_names != names:
        raise SchemaError(path, 1 + len(rows),
                          f"row names {row_names} do not match header {names}")
    return names, rows


SEGQUALITY_AXES = ("gt_best", "proposal_best")


def read_maxima(path) -> dict[str, list[float]]:
    """Segmentation-quality maxima: axis,value rows feeding the IoU boxplot."""
    groups: dict[str, list[float]] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["axis", "value"]:
            raise SchemaError(path, 1, "expected header axis,value")
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise SchemaError(path, line, f"expected 2 fields, got {len(row)}")
            axis = row[0]
            if axis not in SEGQUALITY_AXES:
                raise SchemaError(path, line, f"unknown axis {axis!r}")
            value = _float(path, line, row[1], "value")
            if not 0.0 <= value <= 1.0:
                raise SchemaError(path, line, f"IoU out of [0, 1]: {value}")
            groups.setdefault(axis, []).append(value)
    if not groups:
        raise SchemaError(path, 1, "no maxima rows")
    return groups
