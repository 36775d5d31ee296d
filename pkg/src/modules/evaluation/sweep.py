import json
import logging
import sys
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from itertools import product
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import pandas as pd
import yaml
from tqdm import tqdm

from config import BaseConfig
from src.modules import InputError
from src.modules.attack import (
    AttackConfig,
    AttackResult,
    HeaderAttackResult,
    ImportanceScore,
    SamplingStrategy,
    SelectionStrategy,
    entity_swap_attack,
    header_synonym_attack,
    score_column,
    scored_classes,
)
from src.modules.evaluation.metrics import (
    ClassMetrics,
    MetricsError,
    PRF,
    micro_prf,
    per_class_prf,
    relative_drop,
)
from src.modules.kb import EmbeddingStore, EntityKB, PoolKind
from src.modules.table import Corpus, Table, mask_headers
from src.modules.victim import PredictionSet, Victim, VictimTransportError

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ["p", "selection", "sampling", "pool", "seed", "precision", "recall", "f1",
                 "drop_f1_pct", "success_rate", "skip_rate"]
BASELINE = "none"
HEADER_SELECTION = "random"
HEADER_SAMPLING = "synonym"

RowKey = Tuple[int, str, str, str, int]


class SweepSpecError(InputError):
    pass


def _as_tuple(value: Any) -> Tuple:
    if isinstance(value, (list, tuple, set, frozenset)):
        return tuple(value)
    return (value,)


@dataclass(frozen=True)
class SweepSpec:
    """
    Grid of attack configurations evaluated by a sweep.

    Attributes:
        p_values (Tuple[int, ...]): Perturbation percentages.
        selections (Tuple[SelectionStrategy, ...]): Key-entity selection strategies.
        samplings (Tuple[SamplingStrategy, ...]): Replacement sampling strategies.
        pools (Tuple[PoolKind, ...]): Candidate pools.
        seeds (Tuple[int, ...]): Global seeds; one row per seed.
        allow_duplicates (bool): Whether one replacement may fill several cells of a column.
        only_correct (bool): Attack only columns whose pristine prediction contains the
            most-specific gold class.
        mask_headers (bool): Evaluate on tables whose headers are all masked.
        header_synonyms (bool): Swap headers for synonyms before the entity attack.
        threads (int): Workers for per-column attacks.
    """
    p_values: Tuple[int, ...] = BaseConfig.DEFAULT_P_VALUES
    selections: Tuple[SelectionStrategy, ...] = (SelectionStrategy.IMPORTANCE,)
    samplings: Tuple[SamplingStrategy, ...] = (SamplingStrategy.SIMILARITY,)
    pools: Tuple[PoolKind, ...] = (PoolKind.TEST,)
    seeds: Tuple[int, ...] = (BaseConfig.DEFAULT_SEED,)
    allow_duplicates: bool = False
    only_correct: bool = True
    mask_headers: bool = False
    header_synonyms: bool = False
    threads: int = BaseConfig.THREADS
    victim: Optional[str] = None
    corpus: Optional[str] = None
    train_corpus: Optional[str] = None
    embeddings: Optional[str] = None
    synonyms: Optional[str] = None

    def __post_init__(self):
        try:
            object.__setattr__(self, "selections", tuple(
                SelectionStrategy(s) for s in _as_tuple(self.selections)))
            object.__setattr__(self, "samplings", tuple(
                SamplingStrategy(s) for s in _as_tuple(self.samplings)))
            object.__setattr__(self, "pools", tuple(PoolKind(s) for s in _as_tuple(self.pools)))
        except ValueError as e:
            raise SweepSpecError(str(e))
        object.__setattr__(self, "p_values", tuple(sorted(set(_as_tuple(self.p_values)))))
        object.__setattr__(self, "seeds", tuple(sorted(set(_as_tuple(self.seeds)))))

        for name in ("p_values", "selections", "samplings", "pools", "seeds"):
            if not getattr(self, name):
                raise SweepSpecError(f"{name} must not be empty.")
        for p in self.p_values:
            if isinstance(p, bool) or not isinstance(p, int) or not 1 <= p <= 100:
                raise SweepSpecError(f"p values must be integers in [1, 100], got {p!r}.")
        if any(isinstance(s, bool) or not isinstance(s, int) for s in self.seeds):
            raise SweepSpecError(f"seeds must be integers, got {list(self.seeds)}.")
        if not isinstance(self.threads, int) or self.threads < 1:
            raise SweepSpecError(f"threads must be a positive integer, got {self.threads!r}.")

    def configs(self) -> Iterator[AttackConfig]:
        for p, selection, sampling, pool, seed in product(
                self.p_values, self.selections, self.samplings, self.pools, self.seeds):
            yield AttackConfig(p=p, selection=selection, sampling=sampling, pool=pool,
                               seed=seed, allow_duplicates=self.allow_duplicates)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_yaml(cls, path: Union[str, Path], **overrides) -> "SweepSpec":
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = yaml.safe_load(f) or {}
        except (OSError, yaml.YAMLError) as e:
            raise SweepSpecError(f"Cannot read sweep spec {path}: {e}")
        if not isinstance(data, dict):
            raise SweepSpecError(f"Sweep spec {path} must be a mapping.")
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise SweepSpecError(
                f"Unknown sweep spec keys in {path}: {', '.join(sorted(unknown))}.")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)


@dataclass(frozen=True)
class MetricsRow:
    """
    One sweep row. Scores are fractions in [0, 1]; drops are percentages
    relative to the baseline row and NaN when that baseline is 0.
    """
    p: int
    selection: str
    sampling: str
    pool: str
    seed: int
    precision: float
    recall: float
    f1: float
    drop_f1_pct: float = 0.0
    drop_p_pct: float = 0.0
    drop_r_pct: float = 0.0
    success_rate: float = 0.0
    skip_rate: float = 0.0

    @property
    def key(self) -> RowKey:
        return (self.p, self.selection, self.sampling, self.pool, self.seed)

    @property
    def is_baseline(self) -> bool:
        return self.p == 0


def _drop(baseline: float, value: float) -> float:
    try:
        return relative_drop(baseline, value)
    except MetricsError:
        return float("nan")


def baseline_row(scores: PRF, seed: int = 0) -> MetricsRow:
    return MetricsRow(0, BASELINE, BASELINE, BASELINE, seed, *scores)


def metrics_row(key: RowKey, scores: PRF, baseline: PRF,
                success_rate: float, skip_rate: float) -> MetricsRow:
    return MetricsRow(
        *key, *scores,
        drop_f1_pct=_drop(baseline.f1, scores.f1),
        drop_p_pct=_drop(baseline.precision, scores.precision),
        drop_r_pct=_drop(baseline.recall, scores.recall),
        success_rate=success_rate,
        skip_rate=skip_rate,
    )


@dataclass
class SweepOutcome:
    rows: List[MetricsRow]
    results: List[AttackResult] = field(default_factory=list)
    header_results: List[Tuple[AttackConfig, HeaderAttackResult]] = field(default_factory=list)
    per_class: Dict[RowKey, Dict[str, ClassMetrics]] = field(default_factory=dict)

    @property
    def baseline(self) -> MetricsRow:
        for row in self.rows:
            if row.is_baseline:
                return row
        raise MetricsError("The sweep has no baseline row.")


def _progress(iterable, total: int, desc: str):
    return tqdm(iterable, total=total, desc=desc, disable=not sys.stderr.isatty())


class SweepRunner:
    """
    Runs every configuration of a SweepSpec against one victim and test corpus.

    Pristine predictions and importance scores are computed once and shared by
    all sweep cells. Every cell attacks the pristine tables, so rows for
    different p never build on each other.
    """

    def __init__(self, victim: Victim, test: Corpus, kb: EntityKB, spec: SweepSpec,
                 synonyms: Optional[EmbeddingStore] = None):
        if spec.header_synonyms and synonyms is None:
            raise SweepSpecError("Header synonyms need a synonym embedding store.")
        if any(pool is PoolKind.FILTERED for pool in spec.pools) and not kb.has_reference:
            raise SweepSpecError("The filtered pool needs a KB built with a training reference.")
        self.victim = victim
        self.kb = kb
        self.spec = spec
        self.synonyms = synonyms
        self.tables: List[Table] = [mask_headers(t) if spec.mask_headers else t for t in test]
        self.columns: List[Tuple[Table, int]] = [
            (table, j) for table in self.tables for j in table.annotated_columns]
        if not self.columns:
            raise SweepSpecError("The test corpus has no annotated column.")
        self.gold = [set(table.annotations[j]) for table, j in self.columns]
        self._scores: Dict[Tuple[str, int, Tuple[str, ...]], Tuple[ImportanceScore, ...]] = {}
        self._headers: Dict[Tuple[str, int, int], Table] = {}
        self._lock = threading.Lock()
        self._pristine: Optional[List[PredictionSet]] = None

    def _map(self, fn, items: Sequence) -> List:
        with ThreadPoolExecutor(max_workers=self.spec.threads) as executor:
            return list(executor.map(fn, items))

    @property
    def pristine(self) -> List[PredictionSet]:
        if self._pristine is None:
            self._pristine = self._map(
                lambda column: self.victim.predict_classes(*column), self.columns)
        return self._pristine

    def baseline(self) -> Tuple[MetricsRow, Dict[str, ClassMetrics]]:
        scores = micro_prf(self.pristine, self.gold)
        logger.info("Baseline: P=%.4f R=%.4f F1=%.4f over %d columns.",
                    *scores, len(self.columns))
        return baseline_row(scores, self.spec.seeds[0]), per_class_prf(self.pristine, self.gold)

    def attacked(self, index: int) -> bool:
        if not self.spec.only_correct:
            return True
        table, j = self.columns[index]
        return table.most_specific(j) in self.pristine[index]

    def scores(self, table: Table, j: int) -> Tuple[ImportanceScore, ...]:
        key = (table.table_id, j, table.headers)
        with self._lock:
            cached = self._scores.get(key)
        if cached is None:
            cached = score_column(self.victim, table, j, scored_classes(self.victim, table, j))
            with self._lock:
                self._scores[key] = cached
        return cached

    def header_table(self, table: Table, config: AttackConfig) -> Table:
        key = (table.table_id, config.p, config.seed)
        with self._lock:
            cached = self._headers.get(key)
        if cached is None:
            cached = header_synonym_attack(table, config, self.synonyms).adversarial_table
            with self._lock:
                self._headers[key] = cached
        return cached

    def attack_column(self, index: int, config: AttackConfig) -> Optional[AttackResult]:
        if not self.attacked(index):
            return None
        table, j = self.columns[index]
        pred_before = self.pristine[index]
        if self.spec.header_synonyms:
            table = self.header_table(table, config)
            pred_before = None
        scores = self.scores(table, j) if config.selection is SelectionStrategy.IMPORTANCE else None
        return entity_swap_attack(self.victim, table, j, config, self.kb,
                                  scores=scores, pred_before=pred_before)

    def run_cell(self, config: AttackConfig, baseline: PRF) -> Tuple[
            MetricsRow, List[AttackResult], Dict[str, ClassMetrics]]:
        results = self._map(lambda index: self.attack_column(index, config),
                            range(len(self.columns)))
        predictions = [r.pred_after if r is not None else pred
                       for r, pred in zip(results, self.pristine)]
        done = [r for r in results if r is not None]
        selected = sum(len(r.selected) for r in done)
        row = metrics_row(
            (config.p, config.selection.value, config.sampling.value, config.pool.value,
             config.seed),
            micro_prf(predictions, self.gold), baseline,
            success_rate=sum(r.success for r in done) / len(done) if done else 0.0,
            skip_rate=sum(r.skips for r in done) / selected if selected else 0.0,
        )
        return row, done, per_class_prf(predictions, self.gold)

    def run(self) -> SweepOutcome:
        base_row, base_classes = self.baseline()
        baseline = PRF(base_row.precision, base_row.recall, base_row.f1)
        outcome = SweepOutcome([base_row], per_class={base_row.key: base_classes})
        configs = list(self.spec.configs())
        for config in _progress(configs, len(configs), "sweep"):
            try:
                row, results, classes = self.run_cell(config, baseline)
            except VictimTransportError:
                logger.error("Victim unreachable during cell %s.", config.to_record())
                raise
            except InputError as e:
                logger.warning("Sweep cell %s aborted: %s", config.to_record(), e.message)
                continue
            logger.info("Cell p=%d %s/%s/%s seed=%d: F1=%.4f.", config.p,
                        config.selection.value, config.sampling.value, config.pool.value,
                        config.seed, row.f1)
            outcome.rows.append(row)
            outcome.results.extend(results)
            outcome.per_class[row.key] = classes
        outcome.rows.sort(key=lambda r: r.key)
        return outcome


def run_sweep(victim: Victim, test: Corpus, kb: EntityKB, spec: SweepSpec,
              synonyms: Optional[EmbeddingStore] = None) -> SweepOutcome:
    """
    Evaluates the victim on the pristine test corpus, then under every attack
    configuration of the spec.

    Returns:
        SweepOutcome: The baseline row (p = 0) followed by one row per completed
            configuration in key order, plus every AttackResult.

    Raises:
        SweepSpecError: If the spec cannot run on these inputs.
        VictimTransportError: If a remote victim fails; no partial outcome is returned.
    """
    return SweepRunner(victim, test, kb, spec, synonyms).run()


def run_header_sweep(victim: Victim, test: Corpus, synonyms: EmbeddingStore,
                     p_values: Sequence[int] = BaseConfig.DEFAULT_P_VALUES,
                     seeds: Sequence[int] = (BaseConfig.DEFAULT_SEED,),
                     threads: int = BaseConfig.THREADS) -> SweepOutcome:
    """
    Attacks only the column names: for every p and seed, swaps ceil(p * m / 100)
    headers per table for their nearest synonyms and evaluates every annotated
    column of the perturbed corpus.
    """
    tables = list(test)
    columns = [(t_index, j) for t_index, table in enumerate(tables) for j in table.annotated_columns]
    if not columns:
        raise SweepSpecError("The test corpus has no annotated column.")
    gold = [set(tables[t].annotations[j]) for t, j in columns]

    def predict_all(corpus_tables: List[Table]) -> List[PredictionSet]:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            return list(executor.map(
                lambda column: victim.predict_classes(corpus_tables[column[0]], column[1]),
                columns))

    pristine = predict_all(tables)
    base_scores = micro_prf(pristine, gold)
    base_row = baseline_row(base_scores, min(seeds))
    outcome = SweepOutcome([base_row], per_class={base_row.key: per_class_prf(pristine, gold)})

    grid = list(product(sorted(set(p_values)), sorted(set(seeds))))
    for p, seed in _progress(grid, len(grid), "header sweep"):
        config = AttackConfig(p=p, seed=seed)
        attacks = [header_synonym_attack(table, config, synonyms) for table in tables]
        predictions = predict_all([a.adversarial_table for a in attacks])
        predicted = sum(1 for before in pristine if len(before))
        flipped = sum(1 for before, after in zip(pristine, predictions)
                      if len(before) and before.isdisjoint(after))
        selected = sum(len(a.selected) for a in attacks)
        row = metrics_row(
            (p, HEADER_SELECTION, HEADER_SAMPLING, BASELINE, seed),
            micro_prf(predictions, gold), base_scores,
            success_rate=flipped / predicted if predicted else 0.0,
            skip_rate=sum(a.skips for a in attacks) / selected if selected else 0.0,
        )
        logger.info("Header cell p=%d seed=%d: F1=%.4f.", p, seed, row.f1)
        outcome.rows.append(row)
        outcome.header_results.extend((config, a) for a in attacks)
        outcome.per_class[row.key] = per_class_prf(predictions, gold)
    outcome.rows.sort(key=lambda r: r.key)
    return outcome


def write_results(outcome: SweepOutcome, path: Union[str, Path]) -> Path:
    """Writes one JSON record per attack, keys sorted."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for result in outcome.results:
            f.write(json.dumps(result.to_record(), sort_keys=True, ensure_ascii=False) + "\n")
        for config, result in outcome.header_results:
            record = result.to_record()
            record.update(p=config.p, seed=config.seed)
            f.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")
    return path


def sweep_frame(rows: Sequence[MetricsRow]) -> pd.DataFrame:
    frame = pd.DataFrame([asdict(row) for row in rows], columns=SWEEP_COLUMNS)
    for name in ("precision", "recall", "f1"):
        frame[name] = frame[name] * 100
    return frame


def write_sweep_csv(rows: Sequence[MetricsRow], path: Union[str, Path]) -> Path:
    """Sweep CSV with precision, recall and F1 reported x100."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    sweep_frame(rows).to_csv(path, index=False, float_format=BaseConfig.FLOAT_FORMAT,
                             lineterminator="\n")
    return path


def write_header_swaps(outcome: SweepOutcome, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    records = [
        {"table_id": result.original_table.table_id, "p": config.p, "seed": config.seed,
         "col": swap.column, "before": swap.original, "after": swap.replacement}
        for config, result in outcome.header_results for swap in result.swaps
    ]
    frame = pd.DataFrame(records, columns=["table_id", "p", "seed", "col", "before", "after"])
    frame.to_csv(path, index=False, lineterminator="\n")
    return path
