from typing import AbstractSet, Optional

import numpy as np

from src.modules.attack.typing import AttackConfig, SamplingStrategy
from src.modules.kb import EmptyPoolError, EntityKB, EntityRecord, most_dissimilar


def sample_adversarial(kb: EntityKB, entity_class: str, anchor: EntityRecord,
                       config: AttackConfig, used: AbstractSet[str] = frozenset(),
                       rng: Optional[np.random.Generator] = None) -> Optional[EntityRecord]:
    """
    Draws a replacement for `anchor` from the class pool named by `config.pool`.

    The anchor is never its own replacement, and unless duplicates are allowed
    neither is any surface already used in this column.

    Returns:
        Optional[EntityRecord]: The replacement, or None when no candidate is left.
    """
    exclusions = {anchor.surface}
    if not config.allow_duplicates:
        exclusions.update(used)

    if config.sampling is SamplingStrategy.SIMILARITY:
        try:
            return most_dissimilar(kb, entity_class, anchor, exclusions, pool=config.pool)
        except EmptyPoolError:
            return None

    candidates = [r for r in kb.candidates(entity_class, config.pool)
                  if r.surface not in exclusions]
    if not candidates:
        return None
    if rng is None:
        rng = np.random.default_rng(config.seed)
    return candidates[int(rng.integers(len(candidates)))]
