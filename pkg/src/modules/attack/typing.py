from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional, Tuple

from src.modules import InputError
from src.modules.kb import PoolKind
from src.modules.table import CellRef, Table
from src.modules.victim import PredictionSet


class AttackError(InputError):
    pass


class AttackConfigError(AttackError):
    pass


class ImperceptibilityError(AttackError):
    def __init__(self, surface: str, message: Optional[str] = None):
        self.surface = surface
        super().__init__(
            message or f"Adversarial entity '{surface}' is missing from the entity KB.")


class SelectionStrategy(str, Enum):
    IMPORTANCE = "importance"
    RANDOM = "random"


class SamplingStrategy(str, Enum):
    SIMILARITY = "similarity"
    RANDOM = "random"


@dataclass(frozen=True)
class AttackConfig:
    """
    Attributes:
        p (int): Percentage of the column (or of the headers) to perturb, 1 to 100.
        selection (SelectionStrategy): How key entities are chosen.
        sampling (SamplingStrategy): How replacements are drawn.
        pool (PoolKind): Test pool, or the filtered pool without training entities.
        seed (int): Global seed; per-column seeds derive from it.
        allow_duplicates (bool): Whether one replacement may fill several cells of a column.
    """
    p: int
    selection: SelectionStrategy = SelectionStrategy.IMPORTANCE
    sampling: SamplingStrategy = SamplingStrategy.SIMILARITY
    pool: PoolKind = PoolKind.TEST
    seed: int = 0
    allow_duplicates: bool = False

    def __post_init__(self):
        if isinstance(self.p, bool) or not isinstance(self.p, int) or not 1 <= self.p <= 100:
            raise AttackConfigError(f"p must be an integer in [1, 100], got {self.p!r}.")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int):
            raise AttackConfigError(f"seed must be an integer, got {self.seed!r}.")
        try:
            object.__setattr__(self, "selection", SelectionStrategy(self.selection))
            object.__setattr__(self, "sampling", SamplingStrategy(self.sampling))
            object.__setattr__(self, "pool", PoolKind(self.pool))
        except ValueError as e:
            raise AttackConfigError(str(e))

    def to_record(self) -> Dict[str, Any]:
        return {
            "p": self.p,
            "selection": self.selection.value,
            "sampling": self.sampling.value,
            "pool": self.pool.value,
            "seed": self.seed,
            "allow_duplicates": self.allow_duplicates,
        }


@dataclass(frozen=True)
class ImportanceScore:
    cell: CellRef
    score: float


@dataclass(frozen=True)
class SwapRecord:
    cell: CellRef
    original: str
    replacement: str
    score: Optional[float] = None

    def to_record(self) -> Dict[str, Any]:
        return {
            "row": self.cell.row,
            "col": self.cell.col,
            "before": self.original,
            "after": self.replacement,
            "score": self.score,
        }


@dataclass(frozen=True)
class AttackResult:
    """
    Outcome of one entity-swap attack on one column.

    `success` holds when the predictions before and after share no class; an
    empty prediction after the attack is a success recorded as an abstention.
    """
    original_table: Table
    adversarial_table: Table
    column: int
    config: AttackConfig
    selected: Tuple[CellRef, ...]
    swaps: Tuple[SwapRecord, ...]
    scores: Tuple[ImportanceScore, ...]
    pred_before: PredictionSet
    pred_after: PredictionSet
    skips: int = 0

    def __post_init__(self):
        if len(self.swaps) + self.skips != len(self.selected):
            raise AttackError(
                f"{len(self.swaps)} swaps and {self.skips} skips do not add up to "
                f"{len(self.selected)} selected cells.")
        if any(s.cell.col != self.column for s in self.swaps):
            raise AttackError("Every swap must stay in the attacked column.")

    @property
    def success(self) -> bool:
        return self.pred_before.isdisjoint(self.pred_after)

    @property
    def abstention(self) -> bool:
        return self.success and len(self.pred_after) == 0

    def to_record(self) -> Dict[str, Any]:
        return {
            "table_id": self.original_table.table_id,
            "column": self.column,
            "config": self.config.to_record(),
            "swaps": [swap.to_record() for swap in self.swaps],
            "pred_before": self.pred_before.to_list(),
            "pred_after": self.pred_after.to_list(),
            "success": self.success,
            "abstention": self.abstention,
            "skips": self.skips,
        }


@dataclass(frozen=True)
class HeaderSwap:
    column: int
    original: str
    replacement: str


@dataclass(frozen=True)
class HeaderAttackResult:
    original_table: Table
    adversarial_table: Table
    selected: Tuple[int, ...]
    swaps: Tuple[HeaderSwap, ...] = field(default_factory=tuple)
    skips: int = 0

    def to_record(self) -> Dict[str, Any]:
        return {
            "table_id": self.original_table.table_id,
            "selected": list(self.selected),
            "swaps": [{"col": s.column, "before": s.original, "after": s.replacement}
                      for s in self.swaps],
            "skips": self.skips,
        }
