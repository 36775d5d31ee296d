import logging
from typing import Dict, List, Optional, Sequence, Set

import numpy as np

from src.modules.attack.importance import (
    ground_truth_classes,
    score_column,
    scored_classes,
    select_key_entities,
)
from src.modules.attack.sampling import sample_adversarial
from src.modules.attack.typing import (
    AttackConfig,
    AttackError,
    AttackResult,
    ImperceptibilityError,
    ImportanceScore,
    SelectionStrategy,
    SwapRecord,
)
from src.modules.kb import EntityKB
from src.modules.table import Table, swap_entity
from src.modules.victim import PredictionSet, Victim
from src.utils.digest import derive_seed

logger = logging.getLogger(__name__)


def entity_swap_attack(victim: Victim, table: Table, j: int, config: AttackConfig,
                       kb: EntityKB, scores: Optional[Sequence[ImportanceScore]] = None,
                       pred_before: Optional[PredictionSet] = None) -> AttackResult:
    """
    Attacks column j in two steps: select the key entities, then swap each for
    an entity of the column's most-specific class drawn from the KB.

    Importance scores are computed once on the pristine column. Every random
    draw comes from generators seeded per (seed, table, column), so the result
    only depends on the inputs.

    Args:
        victim (Victim): The classifier under attack.
        table (Table): The pristine table; it is never modified.
        j (int): The attacked column.
        config (AttackConfig): Strategy, pool, p and seed.
        kb (EntityKB): Candidate pools; filtered pools need a training reference.
        scores (Optional[Sequence[ImportanceScore]]): Precomputed importance scores of column j.
        pred_before (Optional[PredictionSet]): Precomputed prediction on the pristine column.

    Returns:
        AttackResult: The adversarial table, swaps, skips and predictions.

    Raises:
        AttackError: If the column is unannotated or its class is absent from the KB.
    """
    gt_classes = ground_truth_classes(table, j)
    entity_class = gt_classes[0]
    if not kb.has_class(entity_class):
        raise AttackError(f"Class '{entity_class}' is absent from the entity KB.")

    if pred_before is None:
        pred_before = victim.predict_classes(table, j)
    if config.selection is SelectionStrategy.IMPORTANCE and scores is None:
        scores = score_column(victim, table, j, scored_classes(victim, table, j))
    scores = tuple(scores or ())
    selected = select_key_entities(victim, table, j, config, scores=scores)

    rng = np.random.default_rng(derive_seed(config.seed, table.table_id, j, "sampling"))
    score_by_row: Dict[int, float] = {s.cell.row: s.score for s in scores}
    adversarial = table
    swaps: List[SwapRecord] = []
    used: Set[str] = set()
    skips = 0
    for ref in selected:
        original = table.cell(ref)
        anchor = kb.record(entity_class, original)
        if anchor is None:
            logger.warning("Entity '%s' of table '%s' is not in the KB; cell left as is.",
                           original, table.table_id)
            skips += 1
            continue
        replacement = sample_adversarial(kb, entity_class, anchor, config, used, rng)
        if replacement is None:
            skips += 1
            continue
        adversarial = swap_entity(adversarial, ref, replacement.surface)
        used.add(replacement.surface)
        swaps.append(SwapRecord(ref, original, replacement.surface,
                                score_by_row.get(ref.row)))

    pred_after = victim.predict_classes(adversarial, j) if swaps else pred_before
    return AttackResult(
        original_table=table,
        adversarial_table=adversarial,
        column=j,
        config=config,
        selected=selected,
        swaps=tuple(swaps),
        scores=scores,
        pred_before=pred_before,
        pred_after=pred_after,
        skips=skips,
    )


def imperceptibility_audit(result: AttackResult, kb: EntityKB) -> bool:
    """
    Checks that every adversarial entity belongs to the pool of the attacked
    column's most-specific class.

    Raises:
        ImperceptibilityError: If an adversarial entity is unknown to the KB.
    """
    entity_class = ground_truth_classes(result.original_table, result.column)[0]
    for swap in result.swaps:
        if not kb.classes_of(swap.replacement):
            raise ImperceptibilityError(swap.replacement)
        if kb.record(entity_class, swap.replacement) is None:
            return False
    return True
