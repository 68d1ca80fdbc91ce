"""Delimited matrix ingestion, table emission, and flat config parsing.

Readers auto-detect delimiter (tab vs comma), an optional header row, and
an optional leading row-id column, all overridable. Writers format floats
with repr-exact precision so written matrices re-ingest bitwise, and all
files are written atomically (temp + rename).
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from .core import RawMatrix

__all__ = [
    "DataFileError",
    "read_delimited_matrix",
    "write_delimited_matrix",
    "write_table",
    "atomic_write_text",
    "parse_keyvalue_text",
    "read_keyvalue_file",
    "format_float",
]

# %.17g round-trips any float64 exactly
_FLOAT_FMT = "%.17g"

DELIMITER_NAMES = {"tab": "\t", "comma": ",", "\\t": "\t", "\t": "\t", ",": ","}


class DataFileError(ValueError):
    """Input file cannot be parsed or fails validation."""


def format_float(x: float) -> str:
    return _FLOAT_FMT % float(x)


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def _sniff_delimiter(first_line: str) -> str:
    return "\t" if "\t" in first_line else ","


def _resolve_delimiter(delimiter: str | None, first_line: str) -> str:
    if delimiter is None or delimiter == "auto":
        return _sniff_delimiter(first_line)
    try:
        return DELIMITER_NAMES[delimiter]
    except KeyError:
        if len(delimiter) == 1:
            return delimiter
        raise DataFileError(f"unknown delimiter {delimiter!r} (use 'tab' or 'comma')") from None


def _locate_bad_cell(path: Path, sep: str, skip_rows: int, skip_col: bool) -> str:
    """Slow re-scan on the error path to name the first unparseable cell."""
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if line_no <= skip_rows:
                continue
            cells = line.rstrip("\n").rstrip("\r").split(sep)
            if skip_col:
                cells = cells[1:]
            for col_no, cell in enumerate(cells, start=1):
                if not _is_number(cell.strip()):
                    return f"unparseable cell {cell.strip()!r} at line {line_no}, field {col_no}"
    return "file could not be parsed as a numeric matrix"


def read_delimited_matrix(
    path,
    delimiter: str | None = None,
    header: str = "auto",
    row_ids: str = "auto",
    transpose: bool = False,
) -> RawMatrix:
    """Read a delimited text matrix into a :class:`RawMatrix`.

    Parameters
    ----------
    path : str or Path
    delimiter : None, "auto", "tab", "comma", or a single character
    header : {"auto", "yes", "no"}
        "auto" treats the first row as a header when its fields (past a
        possible id cell) are not all numeric.
    row_ids : {"auto", "yes", "no"}
        "auto" treats the first column as ids when its body cells are not
        all numeric.
    transpose : bool
        Transpose after parsing (for variable-by-sample files); labels swap
        roles accordingly.
    """
    path = Path(path)
    if not path.exists():
        raise DataFileError(f"input file not found: {path}")
    if header not in ("auto", "yes", "no"):
        raise DataFileError(f"header must be auto/yes/no, got {header!r}")
    if row_ids not in ("auto", "yes", "no"):
        raise DataFileError(f"row_ids must be auto/yes/no, got {row_ids!r}")

    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
        second = fh.readline()
    if not first.strip():
        raise DataFileError(f"{path} is empty")
    sep = _resolve_delimiter(delimiter, first)

    first_cells = [c.strip() for c in first.rstrip("\n").rstrip("\r").split(sep)]
    body_cells = [c.strip() for c in second.rstrip("\n").rstrip("\r").split(sep)] if second.strip() else first_cells

    if row_ids == "auto":
        has_ids = not _is_number(body_cells[0])
    else:
        has_ids = row_ids == "yes"
    if header == "auto":
        data_fields = first_cells[1:] if has_ids else first_cells
        has_header = not all(_is_number(c) for c in data_fields if c != "")
    else:
        has_header = header == "yes"

    try:
        frame = pd.read_csv(
            path,
            sep=sep,
            header=0 if has_header else None,
            index_col=0 if has_ids else None,
            float_precision="round_trip",  # the default fast parser is lossy
        )
        if frame.shape[0] == 0 or frame.shape[1] == 0:
            raise DataFileError(f"{path}: parsed matrix is empty ({frame.shape[0]}x{frame.shape[1]})")
        values = frame.to_numpy(dtype=np.float64)
    except DataFileError:
        raise
    except (ValueError, TypeError, pd.errors.ParserError) as exc:
        detail = _locate_bad_cell(path, sep, 1 if has_header else 0, has_ids)
        raise DataFileError(f"{path}: {detail}") from exc
    names = tuple(str(c) for c in frame.columns) if has_header else None
    ids = tuple(str(i) for i in frame.index) if has_ids else None
    if transpose:
        values = values.T
        names, ids = ids, names
    try:
        return RawMatrix(values, column_names=names, row_ids=ids)
    except ValueError as exc:
        raise DataFileError(f"{path}: {exc}") from exc


def atomic_write_text(path, text: str) -> None:
    """Write text via a temp file and rename so readers never see a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _cell_str(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def write_table(path, header: Sequence[str], rows: Iterable[Sequence], delimiter: str = "\t") -> None:
    """Emit a delimited table with a header row; floats keep full precision."""
    lines = [delimiter.join(header)]
    for row in rows:
        lines.append(delimiter.join(_cell_str(v) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_delimited_matrix(path, matrix: RawMatrix, delimiter: str = "\t") -> None:
    """Write a matrix (with any labels) so it re-ingests bitwise-equal."""
    sep = delimiter
    lines = []
    names = matrix.column_names
    ids = matrix.row_ids
    if names is not None:
        head = list(names)
        if ids is not None:
            head = ["id"] + head
        lines.append(sep.join(head))
    for i in range(matrix.n_rows):
        cells = [format_float(v) for v in matrix.values[i]]
        if ids is not None:
            cells = [ids[i]] + cells
        lines.append(sep.join(cells))
    atomic_write_text(path, "\n".join(lines) + "\n")


def parse_keyvalue_text(text: str) -> dict[str, str]:
    """Parse flat ``key = value`` lines; '#' starts a comment."""
    out: dict[str, str] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataFileError(f"line {line_no}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise DataFileError(f"line {line_no}: empty key")
        if key in out:
            raise DataFileError(f"line {line_no}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def read_keyvalue_file(path) -> dict[str, str]:
    path = Path(path)
    if not path.exists():
        raise DataFileError(f"config file not found: {path}")
    return parse_keyvalue_text(path.read_text(encoding="utf-8"))
