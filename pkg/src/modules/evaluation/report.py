import logging
import math
from dataclasses import asdict
from pathlib import Path
from typing import Dict, Mapping, Optional, Sequence, Union

import pandas as pd

from config import BaseConfig
from src.modules.evaluation.metrics import ClassMetrics, MetricsError, relative_drop
from src.modules.evaluation.sweep import MetricsRow, RowKey
from src.utils.formatting import format_metric

logger = logging.getLogger(__name__)

COORDINATES = ["p", "selection", "sampling", "pool"]
TABLE_COLUMNS = COORDINATES + ["seeds", "F1", "P", "R"]
SERIES_COLUMNS = COORDINATES + ["seed", "series", "f1", "baseline_f1"]
PER_TYPE_COLUMNS = COORDINATES + ["seed", "class", "precision", "recall", "f1", "support"]


def _cell(value: float, baseline: float) -> str:
    """Formats a mean score (x100) with its drop against the baseline mean."""
    if baseline <= 0 or math.isnan(value):
        return format_metric(value)
    return format_metric(value, relative_drop(baseline, value))


def result_table(rows: Sequence[MetricsRow]) -> pd.DataFrame:
    """
    Averages rows over seeds and formats each score as "value (drop%)", scores
    x100. The baseline row keeps two decimals and no drop.

    Raises:
        MetricsError: If there are no rows or no baseline row.
    """
    if not rows:
        raise MetricsError("Nothing to report.")
    frame = pd.DataFrame([asdict(row) for row in rows])
    baseline = frame[frame["p"] == 0]
    if baseline.empty:
        raise MetricsError("The report needs a baseline row (p = 0).")
    base = baseline.iloc[0]
    base_scores = {name: base[name] * 100 for name in ("f1", "precision", "recall")}

    grouped = (frame[frame["p"] > 0]
               .groupby(COORDINATES, sort=True)
               .agg(seeds=("seed", "count"), f1=("f1", "mean"),
                    precision=("precision", "mean"), recall=("recall", "mean"))
               .reset_index())

    records = [{
        "p": 0, "selection": base["selection"], "sampling": base["sampling"],
        "pool": base["pool"], "seeds": 1,
        "F1": format_metric(base_scores["f1"], digits=2),
        "P": format_metric(base_scores["precision"], digits=2),
        "R": format_metric(base_scores["recall"], digits=2),
    }]
    for _, row in grouped.iterrows():
        records.append({
            "p": int(row["p"]), "selection": row["selection"], "sampling": row["sampling"],
            "pool": row["pool"], "seeds": int(row["seeds"]),
            "F1": _cell(row["f1"] * 100, base_scores["f1"]),
            "P": _cell(row["precision"] * 100, base_scores["precision"]),
            "R": _cell(row["recall"] * 100, base_scores["recall"]),
        })
    return pd.DataFrame(records, columns=TABLE_COLUMNS)


def series_frame(rows: Sequence[MetricsRow], series: Sequence[str]) -> pd.DataFrame:
    """
    Long-format curve data: one line per attacked row, keyed by the row
    coordinates, with the series label joined from the named fields and the
    baseline F1 repeated as the reference level.
    """
    baseline = next((row for row in rows if row.is_baseline), None)
    if baseline is None:
        raise MetricsError("The report needs a baseline row (p = 0).")
    records = [{
        "p": row.p, "selection": row.selection, "sampling": row.sampling, "pool": row.pool,
        "seed": row.seed,
        "series": "/".join(getattr(row, name) for name in series),
        "f1": row.f1 * 100,
        "baseline_f1": baseline.f1 * 100,
    } for row in rows if not row.is_baseline]
    return pd.DataFrame(records, columns=SERIES_COLUMNS)


def per_type_frame(per_class: Mapping[RowKey, Mapping[str, ClassMetrics]]) -> pd.DataFrame:
    records = []
    for key in sorted(per_class):
        for entity_class, metrics in sorted(per_class[key].items()):
            records.append({
                **dict(zip(COORDINATES + ["seed"], key)),
                "class": entity_class,
                "precision": metrics.precision * 100,
                "recall": metrics.recall * 100,
                "f1": metrics.f1 * 100,
                "support": metrics.support,
            })
    return pd.DataFrame(records, columns=PER_TYPE_COLUMNS)


def _write(frame: pd.DataFrame, path: Path) -> Path:
    frame.to_csv(path, index=False, float_format=BaseConfig.FLOAT_FORMAT, lineterminator="\n")
    logger.info("Wrote %s.", path)
    return path


def emit_report(rows: Sequence[MetricsRow], out_dir: Union[str, Path],
                per_class: Optional[Mapping[RowKey, Mapping[str, ClassMetrics]]] = None
                ) -> Dict[str, Path]:
    """
    Writes the result table, the selection and sampling curve series and,
    when given, the per-type breakdown.

    Args:
        rows (Sequence[MetricsRow]): Sweep rows including the baseline.
        out_dir (Union[str, Path]): Output directory, created if needed.
        per_class (Optional[Mapping]): Per-class metrics keyed by row key.

    Returns:
        Dict[str, Path]: Output name to written path.

    Raises:
        MetricsError: If there are no rows or no baseline row.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table = result_table(rows)
    outputs = {
        "table": _write(table, out_dir / BaseConfig.TABLE_FILE),
        "selection_series": _write(series_frame(rows, ("selection", "sampling")),
                                   out_dir / BaseConfig.SELECTION_SERIES_FILE),
        "sampling_series": _write(series_frame(rows, ("sampling", "pool")),
                                  out_dir / BaseConfig.POOL_SERIES_FILE),
    }
    if per_class:
        outputs["per_type"] = _write(per_type_frame(per_class), out_dir / BaseConfig.PER_TYPE_FILE)
    return outputs
