import logging
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Union

from config import BaseConfig
from src.modules.kb import load_embeddings
from src.modules.table import SplitTag, TableError, load_table_record, parse_corpus
from src.modules.victim import (
    PrototypeVictim,
    Victim,
    build_prototype_victim,
    save_model,
)
from src.utils.manifest import RunManifest

logger = logging.getLogger(__name__)


def predict_column(victim: Victim, record: Dict[str, Any], j: int,
                   classes: Sequence[str]) -> Dict[str, Any]:
    """
    Scores one column of a wire table record for the requested classes.

    Raises:
        TableError: If the record or the column index is invalid.
        UnknownClassError: If a requested class is unknown to the victim.
    """
    table = load_table_record(record, allow_mask=True)
    if isinstance(j, bool) or not isinstance(j, int):
        raise TableError(f"Column index {j!r} is not an integer.")
    if not 0 <= j < table.n_cols:
        raise TableError(f"Column index {j!r} is outside [0, {table.n_cols}).")
    logits = victim.predict_logits(table, j, list(classes))
    return {"classes": list(logits.classes), "logits": list(logits.scores)}


def describe_victim(victim: Victim) -> Dict[str, Any]:
    return {"classes": list(victim.classes), "threshold": victim.threshold}


def train_victim(train_path: Union[str, Path], embeddings_path: Union[str, Path],
                 out_path: Union[str, Path],
                 header_weight: float = BaseConfig.DEFAULT_HEADER_WEIGHT,
                 threshold: float = BaseConfig.DEFAULT_THRESHOLD,
                 missing: Optional[str] = None) -> PrototypeVictim:
    """
    Trains the prototype victim on a training corpus and saves it as a model
    file usable through a `prototype:<model file>` victim spec.
    """
    missing = missing or BaseConfig.MISSING_EMBEDDING_POLICY
    out_path = Path(out_path)
    manifest = RunManifest.for_inputs(
        "train-victim",
        {"header_weight": header_weight, "threshold": threshold, "missing": missing},
        {"train": train_path, "embeddings": embeddings_path})

    train = parse_corpus(train_path, SplitTag.TRAIN)
    victim = build_prototype_victim(
        train, load_embeddings(embeddings_path), header_weight, threshold, missing)
    save_model(victim, out_path)
    manifest.record_output("model", out_path)
    manifest.write(out_path.with_name(f"{out_path.stem}.manifest.yaml"))
    return victim
