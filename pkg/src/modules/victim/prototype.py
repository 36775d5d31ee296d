import logging
from enum import Enum
from pathlib import Path
from typing import Dict, Mapping, Optional, Sequence, Set, Tuple, Union

import numpy as np

from src.modules import InputError
from src.modules.kb import EmbeddingStore
from src.modules.table import MASK_TOKEN, Corpus, Table, column, header
from src.modules.victim.base import LogitVector, Victim, check_requested

logger = logging.getLogger(__name__)

# Norm below which a class mean is considered to have cancelled out.
DEGENERATE_NORM = 1e-12


class VictimConfigError(InputError):
    pass


class EmptyClassError(InputError):
    pass


class DegeneratePrototypeError(InputError):
    pass


class MissingEmbeddingError(InputError):
    pass


class VictimModelError(InputError):
    pass


class MissingPolicy(str, Enum):
    SKIP = "skip"
    FAIL = "fail"


class PrototypeVictim(Victim):
    """
    Nearest-class-mean classifier over entity and header embeddings.

    A column is represented by the unit-normalized blend
    (1 - w_h) * mean(entity vectors) + w_h * header vector, where masked cells
    are left out of the mean and a masked or unknown header contributes nothing.
    The score of class c is the dot product of that representation with the
    unit prototype of c, which is the cosine similarity.
    """

    def __init__(self, prototypes: Mapping[str, np.ndarray], embeddings: EmbeddingStore,
                 header_weight: float, threshold: float,
                 missing: Union[str, MissingPolicy] = MissingPolicy.SKIP):
        if not 0.0 <= header_weight <= 1.0:
            raise VictimConfigError(
                f"Header weight must lie in [0, 1], got {header_weight}.")
        if not -1.0 < threshold < 1.0:
            raise VictimConfigError(
                f"Decision threshold must lie in (-1, 1), got {threshold}.")
        if not prototypes:
            raise EmptyClassError("A prototype victim needs at least one class.")

        d = embeddings.dimension
        self._prototypes: Dict[str, np.ndarray] = {}
        for entity_class in sorted(prototypes):
            vector = np.array(prototypes[entity_class], dtype=np.float64)
            if vector.shape != (d,):
                raise VictimConfigError(
                    f"Prototype of '{entity_class}' has shape {vector.shape}, expected ({d},).")
            if abs(float(np.linalg.norm(vector)) - 1.0) > 1e-9:
                raise VictimConfigError(
                    f"Prototype of '{entity_class}' is not unit-norm.")
            vector.setflags(write=False)
            self._prototypes[entity_class] = vector

        self._classes = tuple(self._prototypes)
        self._embeddings = embeddings
        self._header_weight = float(header_weight)
        self._threshold = float(threshold)
        self._missing = MissingPolicy(missing)

    @property
    def classes(self) -> Tuple[str, ...]:
        return self._classes

    @property
    def threshold(self) -> float:
        return self._threshold

    @property
    def header_weight(self) -> float:
        return self._header_weight

    @property
    def dimension(self) -> int:
        return self._embeddings.dimension

    @property
    def embeddings(self) -> EmbeddingStore:
        return self._embeddings

    @property
    def missing_policy(self) -> MissingPolicy:
        return self._missing

    def prototype(self, entity_class: str) -> np.ndarray:
        return self._prototypes[entity_class]

    def _lookup(self, token: str, kind: str) -> Optional[np.ndarray]:
        vector = self._embeddings.get(token)
        if vector is None:
            if self._missing is MissingPolicy.FAIL:
                raise MissingEmbeddingError(f"No embedding for {kind} '{token}'.")
            logger.debug("No embedding for %s '%s'; ignored.", kind, token)
        return vector

    def column_vector(self, table: Table, j: int) -> np.ndarray:
        """
        Returns the unit-normalized representation of column j. When every
        entity is masked or lacks an embedding the entity mean is zero and the
        result is w_h times the header vector, left unnormalized, so logits
        reduce to w_h * cos(header, prototype). Without a header either, the
        result is the zero vector.
        """
        d = self.dimension
        vectors = []
        for _, surface in column(table, j):
            if surface == MASK_TOKEN:
                continue
            vector = self._lookup(surface, "entity")
            if vector is not None:
                vectors.append(vector)

        header_vector = np.zeros(d)
        name = header(table, j)
        if name != MASK_TOKEN and self._header_weight > 0.0:
            vector = self._lookup(name, "header")
            if vector is not None:
                header_vector = vector

        if not vectors:
            return self._header_weight * header_vector

        entity_mean = np.mean(np.stack(vectors), axis=0)
        combined = (1.0 - self._header_weight) * entity_mean + \
            self._header_weight * header_vector
        norm = np.linalg.norm(combined)
        if norm == 0.0:
            return combined
        return combined / norm

    def predict_logits(self, table: Table, j: int, classes: Sequence[str]) -> LogitVector:
        classes = check_requested(classes, self._prototypes)
        representation = self.column_vector(table, j)
        # Each score depends only on its own class, never on the request.
        scores = tuple(float(np.dot(self._prototypes[c], representation)) for c in classes)
        return LogitVector(classes, scores)


def build_prototype_victim(train: Corpus, embeddings: EmbeddingStore,
                           header_weight: float, threshold: float,
                           missing: Union[str, MissingPolicy] = MissingPolicy.SKIP) -> PrototypeVictim:
    """
    Trains a prototype victim: the prototype of class c is the unit-normalized
    mean of the distinct training entities found in columns whose most-specific
    class is c.

    Args:
        train (Corpus): The training corpus.
        embeddings (EmbeddingStore): Entity and header vectors.
        header_weight (float): w_h in [0, 1].
        threshold (float): Decision threshold in (-1, 1).
        missing (Union[str, MissingPolicy]): Skip or fail on entities without embeddings.

    Returns:
        PrototypeVictim: One prototype per annotated class, classes sorted by name.

    Raises:
        EmptyClassError: If a class has no training entity with an embedding.
        DegeneratePrototypeError: If the entity mean of a class cancels out.
        MissingEmbeddingError: If an entity has no embedding and the policy is fail.
    """
    missing = MissingPolicy(missing)
    members: Dict[str, Dict[str, np.ndarray]] = {}
    skipped: Set[str] = set()
    for table in train:
        for j in table.annotated_columns:
            pool = members.setdefault(table.most_specific(j), {})
            for _, surface in column(table, j):
                if surface == MASK_TOKEN or surface in pool:
                    continue
                vector = embeddings.get(surface)
                if vector is None:
                    if missing is MissingPolicy.FAIL:
                        raise MissingEmbeddingError(
                            f"No embedding for training entity '{surface}'.")
                    skipped.add(surface)
                    continue
                pool[surface] = vector

    if not members:
        raise EmptyClassError("The training corpus has no annotated columns.")
    if skipped:
        logger.warning("Skipped %d training entities without embeddings.", len(skipped))

    prototypes: Dict[str, np.ndarray] = {}
    for entity_class in sorted(members):
        vectors = list(members[entity_class].values())
        if not vectors:
            raise EmptyClassError(
                f"Class '{entity_class}' has no training entity with an embedding.")
        mean = np.mean(np.stack(vectors), axis=0)
        norm = np.linalg.norm(mean)
        if norm < DEGENERATE_NORM:
            raise DegeneratePrototypeError(
                f"Training entities of class '{entity_class}' cancel out; the prototype is undefined.")
        prototypes[entity_class] = mean / norm

    logger.info("Trained prototype victim with %d classes (w_h=%s, threshold=%s).",
                len(prototypes), header_weight, threshold)
    return PrototypeVictim(prototypes, embeddings, header_weight, threshold, missing)


def save_model(victim: PrototypeVictim, path: Union[str, Path]) -> Path:
    """
    Writes prototypes, parameters and the embedding vocabulary the victim
    resolves at inference into a single `.npz` archive.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    classes = victim.classes
    with open(path, "wb") as f:
        np.savez(
            f,
            classes=np.array(classes, dtype=str),
            prototypes=np.stack([victim.prototype(c) for c in classes]),
            params=np.array([victim.header_weight, victim.threshold]),
            missing=np.array(victim.missing_policy.value),
            tokens=np.array(victim.embeddings.tokens, dtype=str),
            vectors=victim.embeddings.vectors,
        )
    logger.info("Saved prototype victim to %s.", path)
    return path


def load_prototype_victim(path: Union[str, Path]) -> PrototypeVictim:
    """
    Raises:
        VictimModelError: If the file is missing or not a prototype victim archive.
    """
    path = Path(path)
    try:
        with np.load(path, allow_pickle=False) as data:
            classes = [str(c) for c in data["classes"]]
            prototypes = np.array(data["prototypes"], dtype=np.float64)
            header_weight, threshold = (float(x) for x in data["params"])
            missing = str(data["missing"])
            tokens = [str(t) for t in data["tokens"]]
            vectors = np.array(data["vectors"], dtype=np.float64)
    except (OSError, KeyError, ValueError) as e:
        raise VictimModelError(f"Cannot load prototype victim from {path}: {e}")

    if len(classes) != len(prototypes):
        raise VictimModelError(
            f"Model {path} holds {len(classes)} classes but {len(prototypes)} prototypes.")
    embeddings = EmbeddingStore(tokens, vectors)
    victim = PrototypeVictim(dict(zip(classes, prototypes)), embeddings,
                             header_weight, threshold, missing)
    logger.info("Loaded prototype victim from %s (%d classes).", path, len(classes))
    return victim
