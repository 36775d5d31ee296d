import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple

from src.modules import InputError
from src.modules.table import Table


class VictimTransportError(Exception):
    """
    Raised when a remote victim cannot be reached or answers unusably.

    Attributes:
        endpoint (Optional[str]): The victim endpoint involved.
    """

    def __init__(self, message: str, endpoint: Optional[str] = None):
        self.endpoint = endpoint
        self.message = f"{message} [{endpoint}]" if endpoint else message
        super().__init__(self.message)


class VictimProtocolError(VictimTransportError):
    pass


class UnknownClassError(InputError):
    def __init__(self, classes: Iterable[str], message: Optional[str] = None):
        self.classes = list(classes)
        super().__init__(
            message or f"Classes unknown to the victim: {', '.join(map(str, self.classes))}.")


@dataclass(frozen=True)
class LogitVector:
    """Victim scores for an ordered list of requested classes."""
    classes: Tuple[str, ...]
    scores: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "scores", tuple(float(s) for s in self.scores))
        if len(self.classes) != len(self.scores):
            raise ValueError(
                f"classes and scores expected to be equal length but "
                f"len(classes)={len(self.classes)} and len(scores)={len(self.scores)}")
        if not all(math.isfinite(s) for s in self.scores):
            raise ValueError("Logit scores must be finite.")

    def score(self, entity_class: str) -> float:
        return self.scores[self.classes.index(entity_class)]

    def __len__(self) -> int:
        return len(self.classes)


@dataclass(frozen=True)
class PredictionSet:
    classes: FrozenSet[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "classes", frozenset(self.classes))

    def __contains__(self, entity_class: object) -> bool:
        return entity_class in self.classes

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self.classes))

    def __len__(self) -> int:
        return len(self.classes)

    def isdisjoint(self, other: "PredictionSet") -> bool:
        return self.classes.isdisjoint(other.classes)

    def to_list(self) -> List[str]:
        return sorted(self.classes)


class Victim(ABC):
    """
    Black-box column classifier. Attacks only ever see its scores.
    """

    @property
    @abstractmethod
    def classes(self) -> Tuple[str, ...]:
        """The class vocabulary, in the victim's canonical order."""

    @property
    @abstractmethod
    def threshold(self) -> float:
        """The decision threshold on scores."""

    @abstractmethod
    def predict_logits(self, table: Table, j: int, classes: Sequence[str]) -> LogitVector:
        """
        Scores column j of the table for exactly the requested classes, in request order.

        Raises:
            UnknownClassError: If a class is not in the vocabulary.
            VictimTransportError: On remote failures.
        """

    def predict_classes(self, table: Table, j: int) -> PredictionSet:
        """Returns every vocabulary class whose score reaches the threshold."""
        logits = self.predict_logits(table, j, self.classes)
        return PredictionSet(frozenset(
            c for c, s in zip(logits.classes, logits.scores) if s >= self.threshold))


def check_requested(classes: Sequence[str], vocabulary: Iterable[str]) -> Tuple[str, ...]:
    classes = tuple(classes)
    if not classes:
        raise UnknownClassError([], "At least one class must be requested.")
    known = set(vocabulary)
    unknown = [c for c in classes if c not in known]
    if unknown:
        raise UnknownClassError(unknown)
    return classes
