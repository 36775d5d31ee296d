import logging
from dataclasses import dataclass
from enum import Enum
from typing import (
    AbstractSet,
    Dict,
    FrozenSet,
    Iterable,
    List,
    Mapping,
    Optional,
    Sequence,
    Set,
    Tuple,
    Union,
)

import numpy as np

from src.modules import InputError
from src.modules.kb.embeddings import (
    EmbeddingError,
    EmbeddingStore,
    cosine_similarities,
)
from src.modules.table import MASK_TOKEN, Corpus, SplitTag, column

logger = logging.getLogger(__name__)


class KBError(InputError):
    pass


class EmptyPoolError(KBError):
    """Raised when no candidate entity is left for a class."""

    def __init__(self, entity_class: str, message: Optional[str] = None):
        self.entity_class = entity_class
        super().__init__(
            message or f"No candidate entities left for class '{entity_class}'.")


class PoolKind(str, Enum):
    TEST = "test"
    FILTERED = "filtered"


@dataclass(frozen=True, eq=False)
class EntityRecord:
    surface: str
    entity_class: str
    embedding: np.ndarray

    def __post_init__(self):
        if not self.surface or not self.entity_class:
            raise KBError("Entity records need a surface form and a class.")
        embedding = np.asarray(self.embedding, dtype=np.float64)
        if embedding.ndim != 1 or abs(float(np.linalg.norm(embedding)) - 1.0) > 1e-9:
            raise KBError(
                f"Embedding of '{self.surface}' must be a unit-norm vector.")
        object.__setattr__(self, "embedding", embedding)


class _Pool:
    """A class pool with its stacked embedding matrix."""

    def __init__(self, records: Sequence[EntityRecord]):
        self.records: Tuple[EntityRecord, ...] = tuple(records)
        self.surfaces: Tuple[str, ...] = tuple(r.surface for r in self.records)
        self.by_surface: Dict[str, EntityRecord] = {
            r.surface: r for r in self.records}
        if self.records:
            self.matrix = np.stack([r.embedding for r in self.records])
        else:
            self.matrix = np.zeros((0, 0))
        self.matrix.setflags(write=False)


class EntityKB:
    """
    Class-indexed entity pools. Pool order is first-appearance order in the
    source corpus, and every record in pool c has class c.

    A KB built from a test corpus can carry a training reference (see
    `with_reference`), which enables the filtered pools.
    """

    def __init__(self, pools: Mapping[str, Sequence[EntityRecord]], dimension: int,
                 split_tag: Union[str, SplitTag] = SplitTag.TEST, skipped: int = 0,
                 reference: Optional[Mapping[str, AbstractSet[str]]] = None):
        self.dimension = int(dimension)
        self.split_tag = SplitTag(split_tag)
        self.skipped = skipped
        self._pools: Dict[str, _Pool] = {}
        for entity_class, records in pools.items():
            seen: Set[str] = set()
            for record in records:
                if record.entity_class != entity_class:
                    raise KBError(
                        f"Record '{record.surface}' of class '{record.entity_class}' placed in pool '{entity_class}'.")
                if record.surface in seen:
                    raise KBError(
                        f"Duplicate surface '{record.surface}' in pool '{entity_class}'.")
                if record.embedding.shape[0] != self.dimension:
                    raise KBError(
                        f"Embedding of '{record.surface}' has dimension {record.embedding.shape[0]}, expected {self.dimension}.")
                seen.add(record.surface)
            self._pools[entity_class] = _Pool(records)

        self._reference: Optional[Dict[str, FrozenSet[str]]] = None
        self._filtered: Dict[str, _Pool] = {}
        if reference is not None:
            self._reference = {c: frozenset(s) for c, s in reference.items()}
            for entity_class, pool in self._pools.items():
                seen_in_train = self._reference.get(entity_class, frozenset())
                self._filtered[entity_class] = _Pool(
                    [r for r in pool.records if r.surface not in seen_in_train])

    @classmethod
    def from_records(cls, records: Iterable[EntityRecord],
                     split_tag: Union[str, SplitTag] = SplitTag.TEST) -> "EntityKB":
        pools: Dict[str, List[EntityRecord]] = {}
        dimension = None
        for record in records:
            dimension = record.embedding.shape[0] if dimension is None else dimension
            pools.setdefault(record.entity_class, []).append(record)
        if dimension is None:
            raise KBError("Cannot build an entity KB without records.")
        return cls(pools, dimension, split_tag)

    def with_reference(self, kb_train: "EntityKB") -> "EntityKB":
        """
        Returns a copy whose provenance marks every entity also present in the
        same class pool of `kb_train`.
        """
        reference = {c: frozenset(kb_train.surfaces(c)) for c in kb_train.classes}
        pools = {c: pool.records for c, pool in self._pools.items()}
        return EntityKB(pools, self.dimension, self.split_tag, self.skipped, reference)

    @property
    def classes(self) -> List[str]:
        return sorted(self._pools)

    @property
    def has_reference(self) -> bool:
        return self._reference is not None

    def has_class(self, entity_class: str) -> bool:
        return entity_class in self._pools

    def pool(self, entity_class: str) -> Tuple[EntityRecord, ...]:
        return self._get_pool(entity_class, PoolKind.TEST).records

    def surfaces(self, entity_class: str) -> FrozenSet[str]:
        pool = self._pools.get(entity_class)
        return frozenset(pool.surfaces) if pool else frozenset()

    def candidates(self, entity_class: str,
                   kind: Union[str, PoolKind] = PoolKind.TEST) -> Tuple[EntityRecord, ...]:
        """Returns the test or filtered pool of a class. The filtered pool may be empty."""
        return self._get_pool(entity_class, PoolKind(kind)).records

    def record(self, entity_class: str, surface: str) -> Optional[EntityRecord]:
        pool = self._pools.get(entity_class)
        return pool.by_surface.get(surface) if pool else None

    def classes_of(self, surface: str) -> List[str]:
        return [c for c in self.classes if surface in self._pools[c].by_surface]

    def provenance(self, entity_class: str, surface: str) -> FrozenSet[SplitTag]:
        if self.record(entity_class, surface) is None:
            return frozenset()
        splits = {self.split_tag}
        if self._reference is not None and surface in self._reference.get(entity_class, ()):
            splits.add(SplitTag.TRAIN)
        return frozenset(splits)

    def _get_pool(self, entity_class: str, kind: PoolKind) -> _Pool:
        if entity_class not in self._pools:
            raise KBError(f"Class '{entity_class}' is absent from the entity KB.")
        if kind is PoolKind.TEST:
            return self._pools[entity_class]
        if self._reference is None:
            raise KBError(
                "Filtered pools need a training reference; build the KB with `with_reference`.")
        return self._filtered[entity_class]

    def __len__(self) -> int:
        return sum(len(pool.records) for pool in self._pools.values())


def build_kb(corpus: Corpus, embeddings: EmbeddingStore,
             split_tag: Optional[Union[str, SplitTag]] = None) -> EntityKB:
    """
    Collects every distinct entity of each annotated column into the pool of
    the column's most-specific class.

    Args:
        corpus (Corpus): The source corpus.
        embeddings (EmbeddingStore): Entity vectors.
        split_tag (Optional[Union[str, SplitTag]]): Provenance tag. Defaults to the corpus split.

    Returns:
        EntityKB: Pools in first-appearance order; entities lacking embeddings are skipped and counted.

    Raises:
        KBError: If the corpus is empty or no entity could be resolved.
    """
    if len(corpus) == 0:
        raise KBError("Cannot build an entity KB from an empty corpus.")

    pools: Dict[str, Dict[str, EntityRecord]] = {}
    missing: Set[Tuple[str, str]] = set()
    for table in corpus:
        for j in table.annotated_columns:
            entity_class = table.most_specific(j)
            pool = pools.setdefault(entity_class, {})
            for _, surface in column(table, j):
                if surface == MASK_TOKEN or surface in pool:
                    continue
                vector = embeddings.get(surface)
                if vector is None:
                    missing.add((entity_class, surface))
                    continue
                pool[surface] = EntityRecord(surface, entity_class, vector)

    resolved = {c: list(pool.values()) for c, pool in pools.items() if pool}
    if not resolved:
        raise KBError(
            f"No entity of the {corpus.split_tag.value} corpus has an embedding.")
    if missing:
        logger.warning("Skipped %d %s entities without embeddings.",
                       len(missing), corpus.split_tag.value)

    kb = EntityKB(resolved, embeddings.dimension,
                  split_tag or corpus.split_tag, skipped=len(missing))
    logger.info("Built %s entity KB: %d classes, %d entities.",
                kb.split_tag.value, len(kb.classes), len(kb))
    return kb


def filtered_pool(kb_test: EntityKB, kb_train: EntityKB, entity_class: str) -> List[EntityRecord]:
    """
    Returns the test pool of a class minus every surface also in the training
    pool of that class, in pool order.

    Raises:
        KBError: If the class is absent from the test KB.
        EmptyPoolError: If no novel entity is left.
    """
    seen_in_train = kb_train.surfaces(entity_class)
    pool = [r for r in kb_test.pool(entity_class) if r.surface not in seen_in_train]
    if not pool:
        raise EmptyPoolError(
            entity_class, f"Every test entity of class '{entity_class}' also appears in training.")
    return pool


def _argmin_candidates(records: Sequence[EntityRecord], matrix: np.ndarray,
                       anchor: EntityRecord, exclusions: AbstractSet[str]) -> Optional[EntityRecord]:
    if not records:
        return None
    similarities = cosine_similarities(matrix, anchor.embedding)
    best, best_similarity = None, np.inf
    for record, similarity in zip(records, similarities):
        if record.surface == anchor.surface or record.surface in exclusions:
            continue
        # Strict comparison keeps the first candidate on ties.
        if similarity < best_similarity:
            best, best_similarity = record, similarity
    return best


def most_dissimilar(kb: EntityKB, entity_class: str, anchor: EntityRecord,
                    exclusions: AbstractSet[str] = frozenset(),
                    pool: Union[str, PoolKind] = PoolKind.TEST) -> EntityRecord:
    """
    Returns the candidate of the class pool with the lowest cosine similarity
    to the anchor. The anchor itself and excluded surfaces are never returned.

    Raises:
        EmptyPoolError: If no candidate is left after exclusions.
    """
    kind = PoolKind(pool)
    target = kb._get_pool(entity_class, kind)
    try:
        best = _argmin_candidates(target.records, target.matrix, anchor, exclusions)
    except EmbeddingError as e:
        raise KBError(e.message)
    if best is None:
        raise EmptyPoolError(entity_class)
    return best


def nearest_synonym(store: EmbeddingStore, word: str,
                    exclusions: AbstractSet[str] = frozenset()) -> str:
    """
    Returns the token with the highest cosine similarity to `word`, other than
    `word` itself and excluded tokens. Ties go to the lexicographically smallest token.

    Raises:
        OutOfVocabularyError: If `word` is not in the store.
        EmbeddingError: If no other token is available.
    """
    target = store.vector(word)
    similarities = cosine_similarities(store.sorted_vectors, target)
    best, best_similarity = None, -np.inf
    for token, similarity in zip(store.sorted_tokens, similarities):
        if token == word or token in exclusions:
            continue
        if similarity > best_similarity:
            best, best_similarity = token, similarity
    if best is None:
        raise EmbeddingError(f"No synonym candidate left for '{word}'.")
    return best
