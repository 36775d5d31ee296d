import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Mapping, Sequence, Tuple, Union

import numpy as np
import yaml

from src.modules import InputError
from src.modules.kb import EmbeddingStore
from src.modules.table import Corpus, SplitTag, Table
from src.utils.formatting import round_half_up

logger = logging.getLogger(__name__)

# (class, header, planted header synonym), most-specific class names first.
DEFAULT_VOCABULARY: Tuple[Tuple[str, str, str], ...] = (
    ("people.person", "person", "individual"),
    ("location.location", "location", "place"),
    ("sports.pro_athlete", "player", "athlete"),
    ("organization.organization", "organization", "institution"),
    ("sports.sports_team", "team", "squad"),
    ("location.citytown", "city", "town"),
    ("location.country", "country", "nation"),
    ("film.film", "film", "movie"),
    ("music.artist", "artist", "musician"),
    ("music.album", "album", "record"),
    ("government.politician", "politician", "statesman"),
    ("sports.sports_league", "league", "division"),
    ("education.university", "university", "college"),
    ("architecture.building", "building", "edifice"),
    ("book.book", "book", "novel"),
    ("award.award", "award", "prize"),
    ("tv.tv_program", "show", "programme"),
    ("business.company", "company", "firm"),
    ("location.river", "river", "stream"),
    ("time.event", "event", "occasion"),
)


class FixtureSpecError(InputError):
    pass


def fixture_vocabulary(n_classes: int) -> List[Tuple[str, str, str]]:
    vocabulary = list(DEFAULT_VOCABULARY[:n_classes])
    for i in range(len(vocabulary), n_classes):
        vocabulary.append((f"synthetic.class_{i:03d}", f"column{i:03d}", f"field{i:03d}"))
    return vocabulary


@dataclass(frozen=True)
class FixtureSpec:
    """
    Shape of a synthetic train/test fixture.

    Attributes:
        n_classes (int): Number of column classes.
        entities_per_class (int): Distinct entities per class in each split.
        columns (int): Annotated test columns, assigned to classes round-robin.
        train_columns (int): Annotated training columns.
        rows_per_column (int): Body rows of every table.
        columns_per_table (int): Columns grouped into one table.
        overlap_fraction (float): Share of each class's test entities also seen in training.
        overlap_overrides (Mapping[str, float]): Per-class overlap fractions.
        dimension (int): Embedding dimension d.
        noise (float): Standard deviation of the Gaussian noise around class centroids.
        outlier_fraction (float): Share of the novel test entities of a class drawn
            around the opposite of its centroid. Independent of noise: at noise 0
            a class holds two embeddings, its centroid and the opposite, and
            needs outlier_fraction 0 for a single one.
        synonym_noise (float): Noise separating a header from its planted synonym.
        seed (int): Generator seed.
    """
    n_classes: int = 20
    entities_per_class: int = 100
    columns: int = 200
    train_columns: int = 200
    rows_per_column: int = 10
    columns_per_table: int = 2
    overlap_fraction: float = 0.61
    overlap_overrides: Mapping[str, float] = field(default_factory=dict)
    dimension: int = 32
    noise: float = 0.15
    outlier_fraction: float = 0.3
    synonym_noise: float = 0.05
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "overlap_overrides", dict(self.overlap_overrides))
        for name in ("n_classes", "entities_per_class", "columns", "train_columns",
                     "rows_per_column", "columns_per_table", "dimension"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise FixtureSpecError(f"{name} must be a positive integer, got {value!r}.")
        for name in ("overlap_fraction", "outlier_fraction"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise FixtureSpecError(f"{name} must lie in [0, 1], got {getattr(self, name)}.")
        if self.noise < 0 or self.synonym_noise < 0:
            raise FixtureSpecError("Noise levels must be non-negative.")

        classes = {c for c, _, _ in fixture_vocabulary(self.n_classes)}
        for entity_class, fraction in self.overlap_overrides.items():
            if entity_class not in classes:
                raise FixtureSpecError(f"Overlap override names unknown class '{entity_class}'.")
            if not 0.0 <= fraction <= 1.0:
                raise FixtureSpecError(
                    f"Overlap of '{entity_class}' must lie in [0, 1], got {fraction}.")

        if self.rows_per_column > self.entities_per_class:
            raise FixtureSpecError(
                f"{self.rows_per_column} rows per column cannot be filled with "
                f"{self.entities_per_class} distinct entities per class.")
        for name in ("columns", "train_columns"):
            per_class = getattr(self, name) // self.n_classes
            if per_class * self.rows_per_column < self.entities_per_class:
                raise FixtureSpecError(
                    f"{getattr(self, name)} {name.replace('_', ' ')} leave room for "
                    f"{per_class * self.rows_per_column} cells per class, fewer than the "
                    f"{self.entities_per_class} entities to place.")

    def overlap_for(self, entity_class: str) -> float:
        return self.overlap_overrides.get(entity_class, self.overlap_fraction)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_yaml(cls, path: Union[str, Path], **overrides) -> "FixtureSpec":
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = yaml.safe_load(f) or {}
        except (OSError, yaml.YAMLError) as e:
            raise FixtureSpecError(f"Cannot read fixture spec {path}: {e}")
        if not isinstance(data, dict):
            raise FixtureSpecError(f"Fixture spec {path} must be a mapping.")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise FixtureSpecError(
                f"Unknown fixture spec keys in {path}: {', '.join(sorted(unknown))}.")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)


@dataclass(frozen=True)
class ClassCounts:
    test_pool: int
    shared: int
    filtered_pool: int
    outliers: int
    train_pool: int


@dataclass(frozen=True)
class SyntheticFixture:
    spec: FixtureSpec
    train: Corpus
    test: Corpus
    embeddings: EmbeddingStore
    synonyms: EmbeddingStore
    centroids: Dict[str, np.ndarray]
    headers: Dict[str, Tuple[str, str]]
    counts: Dict[str, ClassCounts]


def _unit(vector: np.ndarray) -> np.ndarray:
    return vector / np.linalg.norm(vector)


def _centroids(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    if n <= d:
        q, _ = np.linalg.qr(rng.standard_normal((d, n)))
        return q.T
    return np.stack([_unit(v) for v in rng.standard_normal((n, d))])


def _spread(core: Sequence[str], outliers: Sequence[str]) -> List[str]:
    """Interleaves outliers evenly among the core entities."""
    total = len(core) + len(outliers)
    slots = {(2 * t + 1) * total // (2 * len(outliers)) for t in range(len(outliers))}
    core_iter, outlier_iter = iter(core), iter(outliers)
    return [next(outlier_iter) if i in slots else next(core_iter) for i in range(total)]


def _layout(split: SplitTag, spec: FixtureSpec, vocabulary: Sequence[Tuple[str, str, str]],
            orders: Mapping[str, Sequence[str]], n_columns: int) -> Corpus:
    """
    Assigns columns to classes round-robin and fills column q of a class with
    a window of its entity order starting at q * rows, wrapping around.
    """
    rows = spec.rows_per_column
    filled = []
    for g in range(n_columns):
        entity_class, name, _ = vocabulary[g % len(vocabulary)]
        order = orders[entity_class]
        q = g // len(vocabulary)
        cells = [order[(q * rows + r) % len(order)] for r in range(rows)]
        filled.append((entity_class, name, cells))

    tables = []
    width = spec.columns_per_table
    for t, start in enumerate(range(0, n_columns, width)):
        group = filled[start:start + width]
        tables.append(Table(
            table_id=f"{split.value}-{t:04d}",
            headers=[name for _, name, _ in group],
            cells=[[cells[r] for _, _, cells in group] for r in range(rows)],
            annotations={j: [entity_class] for j, (entity_class, _, _) in enumerate(group)},
        ))
    return Corpus(tables, split)


def gen_synthetic_corpus(spec: FixtureSpec) -> SyntheticFixture:
    """
    Generates a train/test fixture with planted structure:

    - every class has a unit centroid (orthonormal when n_classes <= d);
    - core entities are the unit-normalized centroid plus Gaussian noise;
    - a share of the novel test entities sit around the opposite of the centroid;
    - exactly round(overlap * entities_per_class) test entities also occur in training;
    - each header has a planted synonym that is its nearest neighbour in the
      synonym store, while the victim embeds it away from the header's class
      and towards the next class.

    Deterministic for a given spec.

    Raises:
        FixtureSpecError: If the spec cannot be realised.
    """
    rng = np.random.default_rng(spec.seed)
    vocabulary = fixture_vocabulary(spec.n_classes)
    d, sigma, size = spec.dimension, spec.noise, spec.entities_per_class
    centroid_matrix = _centroids(rng, spec.n_classes, d)

    tokens: List[str] = []
    vectors: List[np.ndarray] = []
    test_orders: Dict[str, List[str]] = {}
    train_orders: Dict[str, List[str]] = {}
    counts: Dict[str, ClassCounts] = {}
    centroids: Dict[str, np.ndarray] = {}
    headers: Dict[str, Tuple[str, str]] = {}

    for i, (entity_class, name, synonym) in enumerate(vocabulary):
        centroid = centroid_matrix[i]
        drift = centroid_matrix[(i + 1) % spec.n_classes] - centroid if spec.n_classes > 1 else -centroid
        centroids[entity_class] = centroid
        headers[entity_class] = (name, synonym)

        shared = int(round_half_up(spec.overlap_for(entity_class) * size))
        novel = size - shared
        outliers = int(round_half_up(spec.outlier_fraction * novel))
        core = size - outliers
        train_only = size - shared

        surfaces = [f"{name} {k:04d}" for k in range(size + train_only)]
        for k, surface in enumerate(surfaces):
            direction = -centroid if core <= k < size else centroid
            tokens.append(surface)
            vectors.append(_unit(direction + sigma * rng.standard_normal(d)))

        test_core = [surfaces[k] for k in rng.permutation(core)]
        test_orders[entity_class] = _spread(test_core, surfaces[core:size]) if outliers else test_core
        train_core = surfaces[:shared] + surfaces[size:]
        train_orders[entity_class] = [train_core[k] for k in rng.permutation(len(train_core))]

        tokens.extend([name, synonym])
        vectors.append(_unit(centroid + sigma * rng.standard_normal(d)))
        vectors.append(_unit(drift + sigma * rng.standard_normal(d)))

        counts[entity_class] = ClassCounts(
            test_pool=size, shared=shared, filtered_pool=novel,
            outliers=outliers, train_pool=size)

    synonym_tokens: List[str] = []
    synonym_vectors: List[np.ndarray] = []
    for _, name, synonym in vocabulary:
        anchor = _unit(rng.standard_normal(d))
        synonym_tokens.extend([name, synonym])
        synonym_vectors.extend([
            anchor, _unit(anchor + spec.synonym_noise * rng.standard_normal(d))])

    test = _layout(SplitTag.TEST, spec, vocabulary, test_orders, spec.columns)
    train = _layout(SplitTag.TRAIN, spec, vocabulary, train_orders, spec.train_columns)
    logger.info("Generated fixture: %d test tables, %d train tables, %d classes.",
                len(test), len(train), spec.n_classes)
    return SyntheticFixture(
        spec=spec,
        train=train,
        test=test,
        embeddings=EmbeddingStore(tokens, np.stack(vectors)),
        synonyms=EmbeddingStore(synonym_tokens, np.stack(synonym_vectors)),
        centroids=centroids,
        headers=headers,
        counts=counts,
    )
