from typing import AbstractSet, Dict, Iterable, NamedTuple, Sequence, Tuple

from src.modules import InputError


class MetricsError(InputError):
    pass


class PRF(NamedTuple):
    precision: float
    recall: float
    f1: float


class ClassMetrics(NamedTuple):
    precision: float
    recall: float
    f1: float
    support: int


def _prf(tp: int, fp: int, fn: int) -> PRF:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return PRF(precision, recall, f1)


def _check(predictions: Sequence[Iterable[str]], gold: Sequence[AbstractSet[str]]) -> None:
    if len(predictions) != len(gold):
        raise MetricsError(
            f"predictions and gold expected to be equal length but "
            f"len(predictions)={len(predictions)} and len(gold)={len(gold)}")
    if not gold:
        raise MetricsError("Nothing to evaluate.")
    if any(not g for g in gold):
        raise MetricsError("Every gold class set must be non-empty.")


def confusion_counts(predictions: Sequence[Iterable[str]],
                     gold: Sequence[AbstractSet[str]]) -> Tuple[int, int, int]:
    tp = fp = fn = 0
    for predicted, expected in zip(predictions, gold):
        predicted, expected = set(predicted), set(expected)
        tp += len(predicted & expected)
        fp += len(predicted - expected)
        fn += len(expected - predicted)
    return tp, fp, fn


def micro_prf(predictions: Sequence[Iterable[str]], gold: Sequence[AbstractSet[str]]) -> PRF:
    """
    Micro-averaged precision, recall and F1 over all (column, class) decisions.

    Precision is 0 when nothing is predicted and F1 is 0 when precision and
    recall are both 0.

    Raises:
        MetricsError: On a length mismatch, an empty batch or an empty gold set.
    """
    _check(predictions, gold)
    return _prf(*confusion_counts(predictions, gold))


def per_class_prf(predictions: Sequence[Iterable[str]],
                  gold: Sequence[AbstractSet[str]]) -> Dict[str, ClassMetrics]:
    """Precision, recall, F1 and gold support of every class seen in either side."""
    _check(predictions, gold)
    counts: Dict[str, list] = {}
    for predicted, expected in zip(predictions, gold):
        predicted, expected = set(predicted), set(expected)
        for c in predicted | expected:
            tally = counts.setdefault(c, [0, 0, 0])
            if c in predicted and c in expected:
                tally[0] += 1
            elif c in predicted:
                tally[1] += 1
            else:
                tally[2] += 1
    return {
        c: ClassMetrics(*_prf(tp, fp, fn), support=tp + fn)
        for c, (tp, fp, fn) in sorted(counts.items())
    }


def relative_drop(baseline: float, perturbed: float) -> float:
    """
    Drop of `perturbed` relative to `baseline`, in percent.

    Raises:
        MetricsError: If the baseline is not positive.
    """
    if baseline <= 0:
        raise MetricsError(f"Relative drop needs a positive baseline, got {baseline}.")
    return 100.0 * (baseline - perturbed) / baseline
