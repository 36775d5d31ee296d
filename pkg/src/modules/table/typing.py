import dataclasses
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Sequence, Tuple

from src.modules import InputError

MASK_TOKEN = "[MASK]"


class TableError(InputError):
    pass


@dataclass(frozen=True)
class CellRef:
    """
    Address of a body cell. Row 0 is the header row, so body rows start at 1.
    """
    table_id: str
    row: int
    col: int


@dataclass(frozen=True)
class Table:
    """
    An entity table: a header row, an n x m grid of entity surfaces and
    per-column class annotations ordered most-specific first.

    Attributes:
        table_id (str): Identifier, unique within a corpus.
        headers (Tuple[str, ...]): The m column names.
        cells (Tuple[Tuple[str, ...], ...]): The n body rows.
        annotations (Mapping[int, Tuple[str, ...]]): Column index to class list.
    """
    table_id: str
    headers: Tuple[str, ...]
    cells: Tuple[Tuple[str, ...], ...]
    annotations: Mapping[int, Tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "headers", tuple(self.headers))
        object.__setattr__(self, "cells", tuple(tuple(row) for row in self.cells))
        object.__setattr__(self, "annotations", {
            int(j): tuple(classes) for j, classes in dict(self.annotations).items()})

        if not self.table_id:
            raise TableError("Table id must be a non-empty string.")
        m = len(self.headers)
        if m < 1:
            raise TableError(f"Table '{self.table_id}' has no columns.")
        if len(self.cells) < 1:
            raise TableError(f"Table '{self.table_id}' has no body rows.")
        for i, row in enumerate(self.cells, start=1):
            if len(row) != m:
                raise TableError(
                    f"Table '{self.table_id}' row {i} has {len(row)} cells, expected {m}.")
        for j, classes in self.annotations.items():
            if not 0 <= j < m:
                raise TableError(
                    f"Table '{self.table_id}' annotates column {j}, which is outside [0, {m}).")
            if not classes:
                raise TableError(
                    f"Table '{self.table_id}' column {j} has an empty annotation.")
            if len(set(classes)) != len(classes):
                raise TableError(
                    f"Table '{self.table_id}' column {j} repeats a class in its annotation.")

    @property
    def n_rows(self) -> int:
        return len(self.cells)

    @property
    def n_cols(self) -> int:
        return len(self.headers)

    @property
    def annotated_columns(self) -> List[int]:
        return sorted(self.annotations)

    def most_specific(self, j: int) -> str:
        try:
            return self.annotations[j][0]
        except KeyError:
            raise TableError(
                f"Column {j} of table '{self.table_id}' is not annotated.")

    def cell(self, ref: CellRef) -> str:
        _check_ref(self, ref)
        return self.cells[ref.row - 1][ref.col]


def _check_column(table: Table, j: int) -> None:
    if not isinstance(j, int) or isinstance(j, bool) or not 0 <= j < table.n_cols:
        raise TableError(
            f"Column index {j!r} is out of range for table '{table.table_id}' with {table.n_cols} columns.")


def _check_ref(table: Table, ref: CellRef) -> None:
    if ref.table_id != table.table_id:
        raise TableError(
            f"Cell reference points at table '{ref.table_id}', not '{table.table_id}'.")
    if not 1 <= ref.row <= table.n_rows:
        raise TableError(
            f"Row {ref.row} is out of range for table '{table.table_id}' with {table.n_rows} body rows.")
    _check_column(table, ref.col)


def column(table: Table, j: int) -> List[Tuple[CellRef, str]]:
    """
    Returns the body cells of column j in row order, header excluded.

    Raises:
        TableError: If j is out of range.
    """
    _check_column(table, j)
    return [(CellRef(table.table_id, i, j), row[j])
            for i, row in enumerate(table.cells, start=1)]


def header(table: Table, j: int) -> str:
    _check_column(table, j)
    return table.headers[j]


def _replace_cell(table: Table, ref: CellRef, value: str) -> Table:
    row = table.cells[ref.row - 1]
    new_row = row[:ref.col] + (value,) + row[ref.col + 1:]
    cells = table.cells[:ref.row - 1] + (new_row,) + table.cells[ref.row:]
    return dataclasses.replace(table, cells=cells)


def mask_entity(table: Table, ref: CellRef) -> Table:
    """
    Returns a copy of the table with the referenced cell replaced by the mask token.

    Raises:
        TableError: If the reference is out of bounds or the cell is already masked.
    """
    _check_ref(table, ref)
    if table.cells[ref.row - 1][ref.col] == MASK_TOKEN:
        raise TableError(
            f"Cell ({ref.row}, {ref.col}) of table '{table.table_id}' is already masked.")
    return _replace_cell(table, ref, MASK_TOKEN)


def swap_entity(table: Table, ref: CellRef, replacement: str) -> Table:
    """
    Returns a copy of the table with a single cell replaced. Every other cell
    and every header is left as is.

    Raises:
        TableError: If the reference is out of bounds or the replacement is empty.
    """
    _check_ref(table, ref)
    if not isinstance(replacement, str) or not replacement:
        raise TableError("Replacement entity must be a non-empty string.")
    return _replace_cell(table, ref, replacement)


def replace_header(table: Table, j: int, new_header: str) -> Table:
    _check_column(table, j)
    if not isinstance(new_header, str) or not new_header:
        raise TableError("Replacement header must be a non-empty string.")
    headers = table.headers[:j] + (new_header,) + table.headers[j + 1:]
    return dataclasses.replace(table, headers=headers)


def mask_headers(table: Table) -> Table:
    return dataclasses.replace(table, headers=(MASK_TOKEN,) * table.n_cols)


def to_record(table: Table) -> Dict[str, Any]:
    """
    Converts a table into its line-record form. Column indices become strings.
    """
    return {
        "table_id": table.table_id,
        "headers": list(table.headers),
        "rows": [list(row) for row in table.cells],
        "annotations": {str(j): list(table.annotations[j]) for j in table.annotated_columns},
    }


def from_record(record: Mapping[str, Any]) -> Table:
    annotations: Dict[int, Sequence[str]] = {}
    for key, classes in record.get("annotations", {}).items():
        try:
            annotations[int(key)] = classes
        except (TypeError, ValueError):
            raise TableError(f"Annotation key {key!r} is not a column index.")
    return Table(
        table_id=record["table_id"],
        headers=record["headers"],
        cells=record["rows"],
        annotations=annotations,
    )
