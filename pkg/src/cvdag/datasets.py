"""Delimited dataset files and the bundled examination-marks fixture.

Files carry a mandatory header row of variable names; the delimiter (comma or
whitespace) is auto-detected from that header. Values are written with 17
significant digits so a write/read round-trip is lossless.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DataFormatError, ValidationError
from .numerics import Dataset


def _split(line: str, delimiter: str | None) -> list[str]:
    if delimiter == ",":
        return [f.strip() for f in line.split(",")]
    return line.split()


def parse_dataset(text: str, where: str = "<string>") -> Dataset:
    lines = text.splitlines()
    stripped = [(i + 1, ln.strip()) for i, ln in enumerate(lines) if ln.strip()]
    if not stripped:
        raise DataFormatError(f"{where}: empty file, expected a header row")
    head_no, head = stripped[0]
    delimiter = "," if "," in head else None
    names = _split(head, delimiter)
    if any(not n for n in names):
        raise DataFormatError(f"{where}:{head_no}: empty column name in header")
    rows = []
    for lineno, line in stripped[1:]:
        fields = _split(line, delimiter)
        if len(fields) != len(names):
            raise DataFormatError(
                f"{where}:{lineno}: expected {len(names)} fields, got {len(fields)}"
            )
        try:
            row = [float(f) for f in fields]
        except ValueError:
            raise DataFormatError(f"{where}:{lineno}: non-numeric value in {line!r}") from None
        if not all(np.isfinite(row)):
            raise DataFormatError(
                f"{where}:{lineno}: missing/non-finite value; rows are not imputed"
            )
        rows.append(row)
    if not rows:
        raise ValidationError(f"{where}: no data rows below the header")
    return Dataset(tuple(names), np.array(rows, dtype=float))


def read_dataset(path) -> Dataset:
    return parse_dataset(Path(path).read_text(), where=str(path))


def format_dataset(ds: Dataset) -> str:
    lines = [",".join(ds.names)]
    for row in ds.data:
        lines.append(",".join(f"{v:.17g}" for v in row))
    return "\n".join(lines) + "\n"


def write_dataset(ds: Dataset, path) -> None:
    Path(path).write_text(format_dataset(ds))


def load_marks() -> Dataset:
    """The classic 88-student, five-subject examination marks table."""
    text = resources.files("cvdag").joinpath("data/marks.csv").read_text()
    return parse_dataset(text, where="marks.csv")
