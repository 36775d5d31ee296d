import logging
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, List, Set, Tuple, Union

import pandas as pd

from src.modules.kb.store import KBError
from src.modules.table import MASK_TOKEN, Corpus, column

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["class", "total", "overlap", "pct"]


class CountMode(str, Enum):
    UNIQUE = "unique"
    MENTION = "mention"


def overlap_pct(overlap: int, total: int) -> float:
    """
    Percentage of overlapping entities, truncated to one decimal.
    """
    if total == 0:
        return 0.0
    return (1000 * overlap // total) / 10


@dataclass(frozen=True)
class LeakageRow:
    entity_class: str
    total: int
    overlap: int
    pct: float

    def __post_init__(self):
        if not 0 <= self.overlap <= self.total:
            raise KBError(
                f"Overlap {self.overlap} of class '{self.entity_class}' is outside [0, {self.total}].")


@dataclass(frozen=True)
class LeakageReport:
    rows: Tuple[LeakageRow, ...]
    mode: CountMode

    @property
    def classes(self) -> List[str]:
        return [row.entity_class for row in self.rows]

    def row(self, entity_class: str) -> LeakageRow:
        for row in self.rows:
            if row.entity_class == entity_class:
                return row
        raise KeyError(entity_class)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [(r.entity_class, r.total, r.overlap, r.pct) for r in self.rows],
            columns=CSV_COLUMNS,
        )

    def write_csv(self, path: Union[str, Path]) -> Path:
        """
        Writes one row per class with columns class, total, overlap and pct.

        pct is truncated, so a class with a handful of leaked entities out of
        thousands reads 0.0; only overlap == 0 means no entity occurs in train.
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format="%.1f", lineterminator="\n")
        return path


def _mentions_by_class(corpus: Corpus) -> Dict[str, Counter]:
    mentions: Dict[str, Counter] = {}
    for table in corpus:
        for j in table.annotated_columns:
            counter = mentions.setdefault(table.most_specific(j), Counter())
            counter.update(surface for _, surface in column(table, j)
                           if surface != MASK_TOKEN)
    return mentions


def leakage_report(train: Corpus, test: Corpus,
                   mode: Union[str, CountMode] = CountMode.UNIQUE) -> LeakageReport:
    """
    Counts, per most-specific class, the test entities that also occur in
    training columns of the same class.

    Args:
        train (Corpus): The training corpus.
        test (Corpus): The test corpus.
        mode (Union[str, CountMode]): Count distinct entities or every mention.

    Returns:
        LeakageReport: Rows sorted by total descending, then by class name.
    """
    mode = CountMode(mode)
    train_surfaces: Dict[str, Set[str]] = {
        c: set(counter) for c, counter in _mentions_by_class(train).items()}

    rows = []
    for entity_class, counter in _mentions_by_class(test).items():
        seen = train_surfaces.get(entity_class, set())
        if mode is CountMode.UNIQUE:
            total = len(counter)
            overlap = sum(1 for surface in counter if surface in seen)
        else:
            total = sum(counter.values())
            overlap = sum(n for surface, n in counter.items() if surface in seen)
        rows.append(LeakageRow(entity_class, total, overlap, overlap_pct(overlap, total)))

    rows.sort(key=lambda r: (-r.total, r.entity_class))
    logger.info("Leakage audit (%s): %d classes.", mode.value, len(rows))
    return LeakageReport(tuple(rows), mode)
