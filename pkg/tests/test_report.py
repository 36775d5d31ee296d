import pandas as pd
import pytest

from config import BaseConfig
from src.modules.evaluation import (
    PRF,
    ClassMetrics,
    MetricsError,
    baseline_row,
    emit_report,
    metrics_row,
    per_type_frame,
    result_table,
    series_frame,
)

BASELINE = PRF(0.9, 0.8, 0.8)


def _row(p, selection="importance", sampling="similarity", pool="test", seed=0,
         scores=PRF(0.9, 0.45, 0.6)):
    return metrics_row((p, selection, sampling, pool, seed), scores, BASELINE, 0.5, 0.0)


def test_two_line_table(tmp_path):
    rows = [baseline_row(BASELINE), _row(20)]
    table = result_table(rows)
    assert list(table.columns) == ["p", "selection", "sampling", "pool", "seeds", "F1", "P", "R"]
    assert table.to_dict("records") == [
        {"p": 0, "selection": "none", "sampling": "none", "pool": "none", "seeds": 1,
         "F1": "80.00", "P": "90.00", "R": "80.00"},
        {"p": 20, "selection": "importance", "sampling": "similarity", "pool": "test",
         "seeds": 1, "F1": "60.0 (25%)", "P": "90.0 (0%)", "R": "45.0 (44%)"},
    ]

    outputs = emit_report(rows, tmp_path)
    lines = outputs["table"].read_text(encoding="utf-8").splitlines()
    assert len(lines) == 3
    assert lines[2] == "20,importance,similarity,test,1,60.0 (25%),90.0 (0%),45.0 (44%)"
    assert "per_type" not in outputs


def test_seeds_are_averaged():
    rows = [baseline_row(BASELINE),
            _row(40, seed=1, scores=PRF(0.9, 0.4, 0.5)),
            _row(40, seed=2, scores=PRF(0.9, 0.5, 0.7))]
    record = result_table(rows).to_dict("records")[1]
    assert record["seeds"] == 2
    assert record["F1"] == "60.0 (25%)"


def test_missing_baseline():
    with pytest.raises(MetricsError):
        result_table([_row(20)])
    with pytest.raises(MetricsError):
        result_table([])
    with pytest.raises(MetricsError):
        series_frame([_row(20)], ("selection", "sampling"))


def test_one_series_per_combination(tmp_path):
    rows = [baseline_row(BASELINE)]
    for selection in ("importance", "random"):
        for sampling in ("similarity", "random"):
            for p in (20, 40):
                rows.append(_row(p, selection, sampling))
    frame = series_frame(rows, ("selection", "sampling"))
    assert sorted(frame["series"].unique()) == [
        "importance/random", "importance/similarity", "random/random", "random/similarity"]
    assert (frame["baseline_f1"] == 80.0).all()
    assert len(frame) == 8

    emit_report(rows, tmp_path)
    written = pd.read_csv(tmp_path / BaseConfig.SELECTION_SERIES_FILE)
    assert written["series"].nunique() == 4
    assert pd.read_csv(tmp_path / BaseConfig.POOL_SERIES_FILE)["series"].unique().tolist() == [
        "similarity/test", "random/test"]


def test_per_type_frame(tmp_path):
    per_class = {
        (0, "none", "none", "none", 0): {"b": ClassMetrics(1.0, 1.0, 1.0, 3),
                                         "a": ClassMetrics(0.5, 1.0, 2 / 3, 1)},
        (20, "random", "random", "test", 0): {"a": ClassMetrics(0.0, 0.0, 0.0, 1)},
    }
    frame = per_type_frame(per_class)
    assert frame[["p", "class", "support"]].values.tolist() == [[0, "a", 1], [0, "b", 3], [20, "a", 1]]
    assert frame["precision"].tolist() == [50.0, 100.0, 0.0]

    outputs = emit_report([baseline_row(BASELINE), _row(20)], tmp_path, per_class)
    assert outputs["per_type"].name == BaseConfig.PER_TYPE_FILE
