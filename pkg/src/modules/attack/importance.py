import logging
from typing import Optional, Sequence, Tuple

import numpy as np

from src.modules.attack.typing import (
    AttackConfig,
    AttackError,
    ImportanceScore,
    SelectionStrategy,
)
from src.modules.table import MASK_TOKEN, CellRef, Table, column, mask_entity
from src.modules.victim import LogitVector, Victim
from src.utils.digest import derive_seed

logger = logging.getLogger(__name__)


def selection_count(p: int, n: int) -> int:
    """ceil(p * n / 100) in integer arithmetic."""
    return -(-p * n // 100)


def ground_truth_classes(table: Table, j: int) -> Tuple[str, ...]:
    try:
        return tuple(table.annotations[j])
    except KeyError:
        raise AttackError(f"Column {j} of table '{table.table_id}' is not annotated.")


def scored_classes(victim: Victim, table: Table, j: int) -> Tuple[str, ...]:
    """The column's ground-truth classes that the victim can score, in annotation order."""
    vocabulary = set(victim.classes)
    classes = tuple(c for c in ground_truth_classes(table, j) if c in vocabulary)
    if not classes:
        raise AttackError(
            f"No ground-truth class of column {j} in table '{table.table_id}' is known to the victim.")
    return classes


def _max_delta(original: LogitVector, masked: LogitVector) -> float:
    return max(o - m for o, m in zip(original.scores, masked.scores))


def importance_score(victim: Victim, table: Table, j: int, cell: CellRef,
                     gt_classes: Sequence[str]) -> float:
    """
    Largest drop, over the ground-truth classes, between the logits of the
    column as is and with `cell` masked. Uses exactly two victim evaluations.

    Raises:
        AttackError: If the cell is outside column j or no class is given.
    """
    if cell.col != j:
        raise AttackError(f"Cell column {cell.col} is not the attacked column {j}.")
    classes = tuple(gt_classes)
    if not classes:
        raise AttackError("Importance needs at least one ground-truth class.")
    original = victim.predict_logits(table, j, classes)
    masked = victim.predict_logits(mask_entity(table, cell), j, classes)
    return _max_delta(original, masked)


def score_column(victim: Victim, table: Table, j: int,
                 gt_classes: Optional[Sequence[str]] = None) -> Tuple[ImportanceScore, ...]:
    """
    Importance of every body cell of column j, with one evaluation of the
    column as is plus one per masked cell. Cells that are already masked score 0.
    """
    classes = tuple(gt_classes) if gt_classes is not None else scored_classes(victim, table, j)
    original = victim.predict_logits(table, j, classes)
    scores = []
    for ref, value in column(table, j):
        if value == MASK_TOKEN:
            scores.append(ImportanceScore(ref, 0.0))
            continue
        masked = victim.predict_logits(mask_entity(table, ref), j, classes)
        scores.append(ImportanceScore(ref, _max_delta(original, masked)))
    return tuple(scores)


def select_key_entities(victim: Victim, table: Table, j: int, config: AttackConfig,
                        scores: Optional[Sequence[ImportanceScore]] = None) -> Tuple[CellRef, ...]:
    """
    Chooses ceil(p * n / 100) cells of column j.

    Importance selection ranks cells by score, highest first, with the lower
    row winning ties. Random selection takes a prefix of a permutation seeded
    per column, so the cells chosen at a smaller p are always among those
    chosen at a larger p.
    """
    cells = column(table, j)
    k = selection_count(config.p, len(cells))
    if config.selection is SelectionStrategy.IMPORTANCE:
        if scores is None:
            scores = score_column(victim, table, j)
        ranked = sorted(scores, key=lambda s: (-s.score, s.cell.row))
        return tuple(s.cell for s in ranked[:k])

    rng = np.random.default_rng(derive_seed(config.seed, table.table_id, j, "selection"))
    order = rng.permutation(len(cells))[:k]
    return tuple(cells[int(i)][0] for i in order)
