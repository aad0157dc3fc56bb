"""
CSV ingestion for return series and sample files.

Layout: a header row, then one row per observation; the first column is
a date or index label, every other column an asset (or factor).
"""
import re
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from src.utils.exceptions import DataParseError
from src.utils.logging_config import get_logger

logger = get_logger(__name__)

_LINE_RE = re.compile(r"line (\d+)")


def _is_number(text: str) -> bool:
    try:
        float(text)
    except (TypeError, ValueError):
        return False
    return True


def load_table(path, index_column: bool = True) -> Tuple[List[str], np.ndarray]:
    """
    Read a rectangular numeric CSV.

    Args:
        path: CSV file with a header row
        index_column: drop the first (date / label) column

    Returns:
        Tuple[List[str], np.ndarray]: column names and the value matrix
    """
    path = Path(path)
    if not path.is_file():
        raise DataParseError(f"no such file: {path}")
    try:
        raw = pd.read_csv(path, header=None, dtype=str, keep_default_na=False, skip_blank_lines=True)
    except pd.errors.EmptyDataError:
        raise DataParseError(f"{path} is empty") from None
    except pd.errors.ParserError as exc:
        match = _LINE_RE.search(str(exc))
        raise DataParseError(f"ragged row in {path}", row=int(match.group(1)) if match else None) from None

    header = [str(h).strip() for h in raw.iloc[0]]
    first_data = 1 if index_column else 0
    if all(_is_number(h) for h in header[first_data:]):
        raise DataParseError(f"{path} has no header row", row=1)

    body = raw.iloc[1:]
    if body.empty:
        raise DataParseError(f"{path} has a header but no data rows", row=2)
    for row_offset, row in enumerate(body.itertuples(index=False), start=2):
        for col, cell in enumerate(row):
            if pd.isna(cell):
                raise DataParseError("ragged row", row=row_offset, column=header[col] or col + 1)

    columns = header[first_data:]
    cells = body.iloc[:, first_data:]
    values = np.empty(cells.shape)
    for j, name in enumerate(columns):
        parsed = pd.to_numeric(cells.iloc[:, j].str.strip(), errors="coerce")
        bad = np.flatnonzero(parsed.isna().to_numpy())
        if bad.size:
            raise DataParseError(
                f"non-numeric cell {cells.iloc[bad[0], j]!r}", row=int(bad[0]) + 2, column=name
            )
        values[:, j] = parsed.to_numpy(dtype=float)
    return columns, values


def load_returns_csv(path, percent_units: bool = True) -> np.ndarray:
    """
    Monthly return matrix (rows = months, columns = assets).

    Percent-quoted files (the usual factor-library convention) are divided
    by 100 unless ``percent_units`` is False.
    """
    _, values = load_table(path)
    if percent_units:
        values = values / 100.0
    logger.debug("loaded %d x %d returns from %s", *values.shape, path)
    return values


def load_values(source: str) -> np.ndarray:
    """
    A numeric vector from a file (comma, whitespace or newline separated)
    or from an inline ``a,b,c`` list.
    """
    path = Path(source)
    text = path.read_text(encoding="utf-8") if path.is_file() else source
    tokens = text.replace(",", " ").split()
    if not tokens:
        raise DataParseError(f"no values in {source!r}")
    values = np.empty(len(tokens))
    for i, token in enumerate(tokens):
        if not _is_number(token):
            raise DataParseError(f"non-numeric value {token!r}", column=i + 1)
        values[i] = float(token)
    return values


def split_labels(columns: List[str], values: np.ndarray, label_column: Optional[str]):
    """Separate an integer label column from the samples."""
    if label_column is None:
        return values, None
    if label_column not in columns:
        raise DataParseError(f"label column {label_column!r} not found", column=label_column)
    j = columns.index(label_column)
    return np.delete(values, j, axis=1), values[:, j]
