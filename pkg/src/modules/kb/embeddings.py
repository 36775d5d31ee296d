import logging
from functools import cached_property
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.modules import InputError

logger = logging.getLogger(__name__)


class EmbeddingError(InputError):
    pass


class EmbeddingFileError(EmbeddingError):
    def __init__(self, path: Union[str, Path], message: str):
        self.path = str(path)
        super().__init__(f"{self.path}: {message}")


class OutOfVocabularyError(EmbeddingError):
    def __init__(self, token: str):
        self.token = token
        super().__init__(f"Token '{token}' is not in the embedding vocabulary.")


def _row_norms(matrix: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(matrix * matrix, axis=1))


def cosine_similarity(u: Sequence[float], v: Sequence[float]) -> float:
    """
    Cosine similarity of two nonzero vectors of equal dimension, clipped to [-1, 1].

    Raises:
        EmbeddingError: On a zero vector or a dimension mismatch.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.ndim != 1 or u.shape != v.shape:
        raise EmbeddingError(
            f"Cannot compare vectors of shapes {u.shape} and {v.shape}.")
    nu = np.sqrt(np.sum(u * u))
    nv = np.sqrt(np.sum(v * v))
    if nu == 0.0 or nv == 0.0:
        raise EmbeddingError("Cosine similarity is undefined for a zero vector.")
    return float(np.clip(np.sum(u * v) / (nu * nv), -1.0, 1.0))


def cosine_similarities(matrix: np.ndarray, v: Sequence[float]) -> np.ndarray:
    """
    Row-wise cosine similarity between every row of `matrix` and `v`.

    Each entry is computed with the same arithmetic as `cosine_similarity`,
    so a scan over the result agrees with a scan over pairwise calls.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[1] != v.shape[0]:
        raise EmbeddingError(
            f"Cannot compare rows of shape {matrix.shape} with a vector of shape {v.shape}.")
    nv = np.sqrt(np.sum(v * v))
    norms = _row_norms(matrix)
    if nv == 0.0 or np.any(norms == 0.0):
        raise EmbeddingError("Cosine similarity is undefined for a zero vector.")
    return np.clip(np.sum(matrix * v, axis=1) / (norms * nv), -1.0, 1.0)


class EmbeddingStore:
    """
    Read-only mapping from exact token strings to unit-normalized vectors.

    Attributes:
        dimension (int): The shared vector dimension d.
    """

    def __init__(self, tokens: Sequence[str], vectors: Union[np.ndarray, Sequence[Sequence[float]]]):
        vectors = np.array(vectors, dtype=np.float64)
        tokens = tuple(tokens)
        if vectors.ndim != 2 or vectors.shape[0] != len(tokens):
            raise EmbeddingError(
                f"Expected one vector per token, got {len(tokens)} tokens and an array of shape {vectors.shape}.")

        index: Dict[str, int] = {}
        for i, token in enumerate(tokens):
            if token in index:
                raise EmbeddingError(f"Duplicate token '{token}'.")
            index[token] = i

        norms = _row_norms(vectors)
        for i, norm in enumerate(norms):
            if not np.isfinite(norm) or norm == 0.0:
                raise EmbeddingError(
                    f"Vector of token '{tokens[i]}' cannot be normalized.")

        self._tokens = tokens
        self._index = index
        self._vectors = vectors / norms[:, None]
        self._vectors.setflags(write=False)

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: object) -> bool:
        return token in self._index

    @property
    def dimension(self) -> int:
        return int(self._vectors.shape[1])

    @property
    def tokens(self) -> Tuple[str, ...]:
        return self._tokens

    @property
    def vectors(self) -> np.ndarray:
        return self._vectors

    @cached_property
    def sorted_tokens(self) -> Tuple[str, ...]:
        return tuple(sorted(self._tokens))

    @cached_property
    def sorted_vectors(self) -> np.ndarray:
        matrix = self._vectors[[self._index[t] for t in self.sorted_tokens]]
        matrix.setflags(write=False)
        return matrix

    def get(self, token: str) -> Optional[np.ndarray]:
        i = self._index.get(token)
        return None if i is None else self._vectors[i]

    def vector(self, token: str) -> np.ndarray:
        i = self._index.get(token)
        if i is None:
            raise OutOfVocabularyError(token)
        return self._vectors[i]


def load_embeddings(path: Union[str, Path]) -> EmbeddingStore:
    """
    Loads an embedding file: a `count d` line, then `token<TAB>v1 ... vd` per line.

    Args:
        path (Union[str, Path]): The embedding file.

    Returns:
        EmbeddingStore: Every vector unit-normalized.

    Raises:
        EmbeddingFileError: On unreadable files, malformed lines, dimension
            mismatches, duplicate tokens, zero vectors or a wrong count.
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as e:
        raise EmbeddingFileError(path, f"cannot read file ({e})")
    if not lines:
        raise EmbeddingFileError(path, "file is empty")

    head = lines[0].split()
    try:
        count, d = int(head[0]), int(head[1])
        if len(head) != 2 or count < 0 or d < 1:
            raise ValueError
    except (IndexError, ValueError):
        raise EmbeddingFileError(
            path, f"first line must be 'count d', got {lines[0]!r}")

    tokens: List[str] = []
    rows: List[List[float]] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        token, sep, values = line.partition("\t")
        if not sep or not token:
            raise EmbeddingFileError(
                path, f"line {lineno} is not 'token<TAB>values'")
        parts = values.split()
        if len(parts) != d:
            raise EmbeddingFileError(
                path, f"token '{token}' has {len(parts)} values, expected {d}")
        try:
            rows.append([float(x) for x in parts])
        except ValueError:
            raise EmbeddingFileError(
                path, f"token '{token}' has a non-numeric value")
        tokens.append(token)

    if len(tokens) != count:
        raise EmbeddingFileError(
            path, f"header announces {count} vectors but {len(tokens)} were found")
    if count == 0:
        raise EmbeddingFileError(path, "file holds no vectors")

    try:
        store = EmbeddingStore(tokens, np.array(rows, dtype=np.float64))
    except EmbeddingError as e:
        raise EmbeddingFileError(path, e.message)
    logger.info("Loaded %d embeddings of dimension %d from %s.",
                len(store), store.dimension, path)
    return store


def dump_embeddings(store: EmbeddingStore, path: Union[str, Path],
                    tokens: Optional[Iterable[str]] = None) -> Path:
    """Writes the store, or the given subset of its tokens, in the embedding file format."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    selected = list(store.tokens if tokens is None else tokens)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"{len(selected)} {store.dimension}\n")
        for token in selected:
            values = " ".join(repr(float(x)) for x in store.vector(token))
            f.write(f"{token}\t{values}\n")
    return path
