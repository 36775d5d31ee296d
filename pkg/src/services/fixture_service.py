import logging
from pathlib import Path
from typing import Any, Dict, Union

import yaml

from config import BaseConfig
from src.modules.evaluation import FixtureSpec, SyntheticFixture, gen_synthetic_corpus, micro_prf
from src.modules.kb import dump_embeddings
from src.modules.table import serialize_corpus
from src.modules.victim import build_prototype_victim
from src.utils.digest import file_digest
from src.utils.manifest import to_plain

logger = logging.getLogger(__name__)

FIXTURE_FILES = {
    "train": "train.jsonl",
    "test": "test.jsonl",
    "embeddings": "embeddings.txt",
    "synonyms": "synonyms.txt",
}


def calibrate(fixture: SyntheticFixture,
              header_weight: float = BaseConfig.DEFAULT_HEADER_WEIGHT,
              threshold: float = BaseConfig.DEFAULT_THRESHOLD) -> Dict[str, Any]:
    """Baseline scores of the reference victim trained on the fixture's training split."""
    victim = build_prototype_victim(fixture.train, fixture.embeddings, header_weight, threshold)
    columns = fixture.test.annotated_columns()
    predictions = [victim.predict_classes(table, j) for table, j in columns]
    gold = [set(table.annotations[j]) for table, j in columns]
    scores = micro_prf(predictions, gold)
    note = f"baseline F1 = {scores.f1:.4f}"
    if scores.f1 == 1.0:
        note = "baseline F1 = 1.0"
    logger.info("Calibration: %s (w_h=%s, threshold=%s).", note, header_weight, threshold)
    return {
        "header_weight": header_weight,
        "threshold": threshold,
        "precision": round(scores.precision, 6),
        "recall": round(scores.recall, 6),
        "f1": round(scores.f1, 6),
        "note": note,
    }


def generate_fixtures(spec: FixtureSpec, out_dir: Union[str, Path],
                      header_weight: float = BaseConfig.DEFAULT_HEADER_WEIGHT,
                      threshold: float = BaseConfig.DEFAULT_THRESHOLD) -> Dict[str, Path]:
    """
    Writes the train and test corpora, the entity embedding file, the synonym
    embedding file and a metadata file holding the spec, the planted counts,
    the calibration outcome and the digest of every file.

    Returns:
        Dict[str, Path]: Output name to written path.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fixture = gen_synthetic_corpus(spec)

    outputs = {
        "train": serialize_corpus(fixture.train, out_dir / FIXTURE_FILES["train"]),
        "test": serialize_corpus(fixture.test, out_dir / FIXTURE_FILES["test"]),
        "embeddings": dump_embeddings(fixture.embeddings, out_dir / FIXTURE_FILES["embeddings"]),
        "synonyms": dump_embeddings(fixture.synonyms, out_dir / FIXTURE_FILES["synonyms"]),
    }
    metadata = {
        "spec": to_plain(spec.to_dict()),
        "counts": {c: to_plain(vars(counts)) for c, counts in fixture.counts.items()},
        "headers": {c: list(pair) for c, pair in fixture.headers.items()},
        "calibration": calibrate(fixture, header_weight, threshold),
        "files": {name: {"path": path.name, "sha256": file_digest(path)}
                  for name, path in outputs.items()},
    }
    metadata_path = out_dir / BaseConfig.FIXTURE_METADATA_FILE
    with open(metadata_path, "w", encoding="utf-8", newline="\n") as f:
        yaml.safe_dump(metadata, f, sort_keys=True, allow_unicode=True)
    outputs["metadata"] = metadata_path
    logger.info("Wrote fixture files to %s.", out_dir)
    return outputs
