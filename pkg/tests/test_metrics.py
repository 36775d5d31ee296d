import numpy as np
import pytest

from src.modules.evaluation import (
    ClassMetrics,
    MetricsError,
    confusion_counts,
    micro_prf,
    per_class_prf,
    relative_drop,
)
from src.utils.formatting import format_metric, round_half_up


@pytest.mark.parametrize("predictions, gold, expected", [
    ([{"a"}, {"b"}], [{"a"}, {"b"}], (1.0, 1.0, 1.0)),
    ([{"a"}], [{"a", "b"}], (1.0, 0.5, 0.6667)),
    ([{"a", "c"}], [{"a", "b"}], (0.5, 0.5, 0.5)),
    ([set()], [{"a"}], (0.0, 0.0, 0.0)),
    ([{"b"}], [{"a"}], (0.0, 0.0, 0.0)),
    ([{"b", "c"}, {"b"}], [{"a", "b", "c"}, {"a"}], (2 / 3, 0.5, 4 / 7)),
    ([{"a", "b", "c"}], [{"a"}], (1 / 3, 1.0, 0.5)),
    ([{"a"}, set()], [{"a"}, {"b"}], (1.0, 0.5, 2 / 3)),
    ([{"a", "b"}, {"d"}], [{"a", "b"}, {"c"}], (2 / 3, 2 / 3, 2 / 3)),
    ([{"a"}, {"a"}, {"a"}, set()], [{"a"}] * 4, (1.0, 0.75, 6 / 7)),
])
def test_micro_prf_hand_counts(predictions, gold, expected):
    scores = micro_prf(predictions, gold)
    assert scores.precision == pytest.approx(expected[0], abs=1e-4)
    assert scores.recall == pytest.approx(expected[1], abs=1e-4)
    assert scores.f1 == pytest.approx(expected[2], abs=1e-4)


def test_confusion_counts():
    assert confusion_counts([{"b", "c"}, {"b"}], [{"a", "b", "c"}, {"a"}]) == (2, 1, 2)


def test_per_class_prf():
    per_class = per_class_prf([["b", "c"], ["b"]], [{"a", "b", "c"}, {"a"}])
    assert list(per_class) == ["a", "b", "c"]
    assert per_class["a"] == ClassMetrics(0.0, 0.0, 0.0, 2)
    assert per_class["b"].precision == 0.5
    assert per_class["b"].recall == 1.0
    assert per_class["c"] == ClassMetrics(1.0, 1.0, 1.0, 1)


@pytest.mark.parametrize("predictions, gold", [
    ([{"a"}], [{"a"}, {"b"}]),
    ([], []),
    ([{"a"}], [set()]),
])
def test_micro_prf_rejects_bad_batches(predictions, gold):
    with pytest.raises(MetricsError):
        micro_prf(predictions, gold)


def test_micro_prf_matches_sklearn():
    metrics = pytest.importorskip("sklearn.metrics")
    preprocessing = pytest.importorskip("sklearn.preprocessing")
    classes = list("abcdef")
    rng = np.random.default_rng(0)
    for _ in range(100):
        size = int(rng.integers(1, 30))
        gold = [{c for c in classes if rng.random() < 0.3} or {classes[int(rng.integers(6))]}
                for _ in range(size)]
        predictions = [{c for c in classes if rng.random() < 0.3} for _ in range(size)]

        binarizer = preprocessing.MultiLabelBinarizer(classes=classes)
        y_true = binarizer.fit_transform(gold)
        y_pred = binarizer.transform(predictions)
        precision, recall, f1, _ = metrics.precision_recall_fscore_support(
            y_true, y_pred, average="micro", zero_division=0)

        scores = micro_prf(predictions, gold)
        assert scores.precision == pytest.approx(precision, abs=1e-12)
        assert scores.recall == pytest.approx(recall, abs=1e-12)
        assert scores.f1 == pytest.approx(f1, abs=1e-12)


def test_relative_drop():
    assert relative_drop(88.86, 83.4) == pytest.approx(6.14, abs=0.01)
    assert relative_drop(50.0, 50.0) == 0.0
    assert relative_drop(50.0, 60.0) == pytest.approx(-20.0)
    for baseline in (0.0, -1.0):
        with pytest.raises(MetricsError):
            relative_drop(baseline, 1.0)


@pytest.mark.parametrize("baseline, values, drops", [
    (88.86, [83.4, 72.0, 55.3, 39.9, 26.5], [6, 19, 38, 55, 70]),
    (90.24, [78.4, 77.1, 75.2, 65.1, 51.2], [13, 15, 17, 28, 43]),
])
def test_published_drops_are_reproduced(baseline, values, drops):
    assert [round_half_up(relative_drop(baseline, v)) for v in values] == drops


def test_format_metric():
    assert format_metric(26.5, relative_drop(88.86, 26.5)) == "26.5 (70%)"
    assert format_metric(83.4, relative_drop(88.86, 83.4)) == "83.4 (6%)"
    assert format_metric(88.86, digits=2) == "88.86"
    assert format_metric(0.0, 100.0) == "0.0 (100%)"


def test_round_half_up():
    assert round_half_up(6.5) == 7
    assert round_half_up(2.5) == 3
    assert round_half_up(-2.5) == -3
    assert round_half_up(2.675, 2) == 2.68
