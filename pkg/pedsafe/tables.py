"""Comma-separated input tables and contour grid files."""
import csv
import logging
import math
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple, Type, Union

import numpy as np
from pydantic import BaseModel, Field, FiniteFloat, ValidationError, field_validator

from .constants import CONTOUR_COLUMNS, DELTA_COLUMNS, SDS_COLUMNS, WIN_ODDS_FIXED_COLUMNS
from .core.errors import EmptyTableError, SchemaError
from .core.reporting import format_number
from .development import SdsRecord
from .precision import ContourGrid, ContourQuantity, WinOddsTable

logger = logging.getLogger("Pedsafe.Tables")

PathLike = Union[str, Path]


class TableSchema(str, Enum):
    SDS = "sds"
    DELTAS = "deltas"
    WIN_ODDS = "win_odds"
    CONTOUR = "contour"


class DeltaRecord(BaseModel):
    delta: float

    @field_validator("delta")
    @classmethod
    def _finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("delta must be finite")
        return v


class WinOddsRecord(BaseModel):
    arm: str
    subject_id: str = Field(min_length=1)
    # a nan component would otherwise count as a tie against every subject
    components: Tuple[FiniteFloat, ...]

    @field_validator("arm")
    @classmethod
    def _known_arm(cls, v: str) -> str:
        if v not in ("A", "B"):
            raise ValueError(f"arm must be 'A' or 'B', got '{v}'")
        return v


class ContourCell(BaseModel):
    n: int = Field(ge=0)
    r: int = Field(ge=0)
    value: float


def _schema_error(exc: ValidationError, row: int) -> SchemaError:
    first = exc.errors()[0]
    column = str(first["loc"][0]) if first["loc"] else None
    return SchemaError(first["msg"], row=row, column=column)


def _read_rows(path: Path) -> Tuple[List[str], List[List[str]]]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        rows = [row for row in csv.reader(f) if any(cell.strip() for cell in row)]
    if not rows:
        raise EmptyTableError(f"{path} is empty")
    header = [cell.strip() for cell in rows[0]]
    if len(rows) == 1:
        raise EmptyTableError(f"{path} has a header but no data rows")
    return header, rows[1:]


def _require_columns(header: List[str], required: Sequence[str]) -> None:
    missing = [c for c in required if c not in header]
    if missing:
        raise SchemaError(f"missing required column(s): {', '.join(missing)}", row=0)


def _records(header: List[str], rows: List[List[str]], model: Type[BaseModel], columns: Sequence[str]) -> List[Any]:
    _require_columns(header, columns)
    index = {name: header.index(name) for name in columns}
    records = []
    for i, row in enumerate(rows, start=1):
        if len(row) != len(header):
            raise SchemaError(f"expected {len(header)} fields, found {len(row)}", row=i)
        try:
            records.append(model(**{name: row[pos].strip() for name, pos in index.items()}))
        except ValidationError as e:
            raise _schema_error(e, i) from None
    return records


def _win_odds_records(header: List[str], rows: List[List[str]]) -> List[WinOddsRecord]:
    if list(header[:2]) != list(WIN_ODDS_FIXED_COLUMNS) or len(header) < 3:
        raise SchemaError(
            f"header must start with {','.join(WIN_ODDS_FIXED_COLUMNS)} followed by outcome columns", row=0
        )
    n_components = len(header) - 2
    records = []
    for i, row in enumerate(rows, start=1):
        if len(row) != len(header):
            raise SchemaError(f"expected {n_components} outcome components, found {len(row) - 2}", row=i)
        cells = [cell.strip() for cell in row]
        try:
            records.append(WinOddsRecord(arm=cells[0], subject_id=cells[1], components=tuple(cells[2:])))
        except ValidationError as e:
            loc = e.errors()[0]["loc"]
            if len(loc) > 1 and loc[0] == "components":
                raise SchemaError(e.errors()[0]["msg"], row=i, column=header[2 + int(loc[1])]) from None
            raise _schema_error(e, i) from None
    return records


def load_table(path: PathLike, schema: Union[TableSchema, str]) -> List[Any]:
    """
    Parse a UTF-8 comma-separated file with a header row against a schema.

    Data rows are numbered from 1; header problems are reported as row 0.

    Raises:
        EmptyTableError: no header, or a header without data rows.
        SchemaError: first violating row and column.
    """
    schema = TableSchema(schema)
    header, rows = _read_rows(Path(path))
    if schema == TableSchema.SDS:
        records = _records(header, rows, SdsRecord, SDS_COLUMNS)
    elif schema == TableSchema.DELTAS:
        records = _records(header, rows, DeltaRecord, DELTA_COLUMNS)
    elif schema == TableSchema.CONTOUR:
        records = _records(header, rows, ContourCell, CONTOUR_COLUMNS)
    else:
        records = _win_odds_records(header, rows)
    logger.debug(f"Loaded {len(records)} {schema.value} records from {path}")
    return records


def win_odds_table(records: Sequence[WinOddsRecord], larger_is_better: Sequence[bool] = None) -> WinOddsTable:
    arm_a = [r.components for r in records if r.arm == "A"]
    arm_b = [r.components for r in records if r.arm == "B"]
    if not arm_a or not arm_b:
        raise SchemaError("both arms A and B need at least one subject")
    return WinOddsTable.from_rows(arm_a, arm_b, larger_is_better)


def write_grid(grid: ContourGrid, path: PathLike) -> Path:
    """Write one row per (n, r) cell."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CONTOUR_COLUMNS)
        for n, r, value in grid.cells():
            writer.writerow([n, r, format_number(value)])
    return path


def read_grid(path: PathLike, quantity: Union[ContourQuantity, str] = ContourQuantity.CONFIDENCE) -> ContourGrid:
    """Rebuild a ContourGrid from a file written by ``write_grid``."""
    cells = load_table(path, TableSchema.CONTOUR)
    n_values: List[int] = []
    r_values: List[int] = []
    for cell in cells:
        if cell.n not in n_values:
            n_values.append(cell.n)
        if cell.r not in r_values:
            r_values.append(cell.r)
    values = np.full((len(n_values), len(r_values)), math.nan)
    seen: Dict[Tuple[int, int], bool] = {}
    for i, cell in enumerate(cells, start=1):
        key = (cell.n, cell.r)
        if key in seen:
            raise SchemaError(f"duplicate cell n={cell.n}, r={cell.r}", row=i)
        seen[key] = True
        values[n_values.index(cell.n), r_values.index(cell.r)] = cell.value
    if len(seen) != values.size:
        raise SchemaError(f"grid is incomplete: {len(seen)} of {values.size} cells present")
    return ContourGrid(n_values=n_values, r_values=r_values, values=values, quantity=ContourQuantity(quantity))


def write_rows(path: PathLike, columns: Sequence[str], rows: Sequence[Dict[str, Any]]) -> Path:
    """Plain comma-separated table with shortest round-trip numbers."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_number(row.get(c)) for c in columns])
    return path
