import logging
from typing import List, Set

import numpy as np

from src.modules.attack.importance import selection_count
from src.modules.attack.typing import AttackConfig, HeaderAttackResult, HeaderSwap
from src.modules.kb import EmbeddingError, EmbeddingStore, nearest_synonym
from src.modules.table import MASK_TOKEN, Table, replace_header
from src.utils.digest import derive_seed

logger = logging.getLogger(__name__)


def header_synonym_attack(table: Table, config: AttackConfig,
                          store: EmbeddingStore) -> HeaderAttackResult:
    """
    Replaces ceil(p * m / 100) headers, chosen uniformly under the seed, with
    their nearest neighbour in the synonym embedding store. Headers that are
    masked or out of vocabulary stay as they are and count as skips. Body
    cells are never touched.
    """
    rng = np.random.default_rng(derive_seed(config.seed, table.table_id, "headers"))
    k = selection_count(config.p, table.n_cols)
    selected = tuple(sorted(int(j) for j in rng.permutation(table.n_cols)[:k]))

    adversarial = table
    swaps: List[HeaderSwap] = []
    used: Set[str] = set()
    skips = 0
    for j in selected:
        original = table.headers[j]
        if original == MASK_TOKEN or original not in store:
            logger.debug("Header '%s' of table '%s' is out of vocabulary.",
                         original, table.table_id)
            skips += 1
            continue
        exclusions = set() if config.allow_duplicates else used
        try:
            synonym = nearest_synonym(store, original, exclusions)
        except EmbeddingError:
            skips += 1
            continue
        adversarial = replace_header(adversarial, j, synonym)
        used.add(synonym)
        swaps.append(HeaderSwap(j, original, synonym))

    return HeaderAttackResult(table, adversarial, selected, tuple(swaps), skips)
