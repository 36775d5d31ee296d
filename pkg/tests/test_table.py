import pytest
from hypothesis import given, strategies as st

from src.modules.table import (
    MASK_TOKEN,
    CellRef,
    Table,
    TableError,
    column,
    from_record,
    header,
    mask_entity,
    mask_headers,
    replace_header,
    swap_entity,
    to_record,
)
from src.utils.digest import table_digest


def _diff(a: Table, b: Table):
    return [(i, j) for i, (ra, rb) in enumerate(zip(a.cells, b.cells))
            for j, (x, y) in enumerate(zip(ra, rb)) if x != y]


def test_column_returns_cells_in_row_order(small_table):
    cells = column(small_table, 0)
    assert [ref.row for ref, _ in cells] == [1, 2, 3]
    assert [value for _, value in cells] == ["rafael nadal", "roger federer", "novak djokovic"]
    assert all(ref.col == 0 and ref.table_id == "players" for ref, _ in cells)


def test_column_out_of_range(small_table):
    with pytest.raises(TableError):
        column(small_table, small_table.n_cols)
    with pytest.raises(TableError):
        column(small_table, -1)


def test_most_specific_is_first_annotation(small_table):
    assert small_table.most_specific(0) == "tennis.player"
    assert small_table.annotated_columns == [0, 1]


def test_mask_entity_changes_exactly_one_cell(small_table):
    digest = table_digest(small_table)
    masked = mask_entity(small_table, CellRef("players", 1, 0))
    assert masked.cells[0][0] == MASK_TOKEN
    assert _diff(small_table, masked) == [(0, 0)]
    assert masked.headers == small_table.headers
    assert masked.annotations == small_table.annotations
    assert table_digest(small_table) == digest


def test_mask_entity_rejects_masked_cell_and_bad_refs(small_table):
    masked = mask_entity(small_table, CellRef("players", 2, 1))
    with pytest.raises(TableError):
        mask_entity(masked, CellRef("players", 2, 1))
    with pytest.raises(TableError):
        mask_entity(small_table, CellRef("players", 0, 0))
    with pytest.raises(TableError):
        mask_entity(small_table, CellRef("other", 1, 0))


def test_swap_entity_is_an_involution(small_table):
    ref = CellRef("players", 3, 0)
    swapped = swap_entity(small_table, ref, "andy murray")
    assert _diff(small_table, swapped) == [(2, 0)]
    assert swap_entity(swapped, ref, "novak djokovic") == small_table


def test_swap_entity_rejects_empty_replacement(small_table):
    with pytest.raises(TableError):
        swap_entity(small_table, CellRef("players", 1, 0), "")


@given(row=st.integers(min_value=1, max_value=3), col=st.integers(min_value=0, max_value=1),
       value=st.text(min_size=1).filter(lambda s: s != MASK_TOKEN))
def test_perturbations_are_local(row, col, value):
    table = Table("t", ["a", "b"], [["x", "y"], ["z", "w"], ["u", "v"]], {0: ["c"]})
    ref = CellRef("t", row, col)
    for perturbed in (mask_entity(table, ref), swap_entity(table, ref, value)):
        assert all(cell == (row - 1, col) for cell in _diff(table, perturbed))
        assert perturbed.headers == table.headers
        assert perturbed.n_rows == table.n_rows and perturbed.n_cols == table.n_cols


def test_replace_header_keeps_body(small_table):
    renamed = replace_header(small_table, 0, "athlete")
    assert header(renamed, 0) == "athlete"
    assert header(renamed, 1) == "country"
    assert renamed.cells == small_table.cells


def test_mask_headers(small_table):
    masked = mask_headers(small_table)
    assert masked.headers == (MASK_TOKEN, MASK_TOKEN)
    assert masked.cells == small_table.cells


def test_table_validation():
    with pytest.raises(TableError):
        Table("t", ["a", "b"], [["x", "y"], ["z"]])
    with pytest.raises(TableError):
        Table("t", ["a"], [["x"]], {1: ["c"]})
    with pytest.raises(TableError):
        Table("t", ["a"], [["x"]], {0: []})
    with pytest.raises(TableError):
        Table("", ["a"], [["x"]])
    with pytest.raises(TableError):
        Table("t", ["a"], [])


def test_record_conversion(small_table):
    record = to_record(small_table)
    assert record["annotations"] == {"0": ["tennis.player", "people.person"],
                                     "1": ["location.country"]}
    assert from_record(record) == small_table
