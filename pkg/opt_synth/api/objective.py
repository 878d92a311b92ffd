"""
Quantitative objectives over outcome sets and their abstract transformers.

A concrete outcome set is a pair of equally shaped boolean arrays
`(predictions, labels)`. An abstract outcome set replaces `predictions` with a
Boolean `Interval` whose endpoints are boolean arrays, so each prediction is
one of (f, f), (f, t) or (t, t).
"""
import dataclasses
import logging
from typing import Callable, List, Tuple

import numpy as np

from opt_synth.api.interval import (
    Interval,
    bool_not,
    interval_indicator,
)


logger = logging.getLogger(__name__)


def _check_outcomes(predictions, labels):
    predictions = np.asarray(predictions, dtype=bool)
    labels = np.asarray(labels, dtype=bool)
    if predictions.shape != labels.shape:
        raise ValueError(
            f"Predictions and labels differ in shape: {predictions.shape} vs {labels.shape}"
        )
    if labels.size == 0:
        raise ValueError("Objectives are undefined on an empty outcome set.")
    return predictions, labels


def _check_abstract_outcomes(predictions: Interval, labels):
    lo, labels = _check_outcomes(predictions.lo, labels)
    hi, _ = _check_outcomes(predictions.hi, labels)
    assert np.all(lo <= hi)
    return Interval(lo, hi), labels


def _f1_from_counts(tp, fp, num_positive) -> float:
    denominator = tp + fp + num_positive
    if denominator == 0:
        return 0.0
    return 2 * tp / denominator


# Concrete objectives


def accuracy(predictions, labels) -> float:
    """Fraction of outcome pairs whose prediction equals the label.

    Example:
        accuracy([False, False], [False, True]) -> 0.5
    """
    predictions, labels = _check_outcomes(predictions, labels)
    correct = int(np.count_nonzero(predictions == labels))
    return correct / labels.size


def f1(predictions, labels) -> float:
    """F1 computed as `2 TP / (TP + FP + |positives|)`.

    When the dataset has no positive labels and nothing is predicted positive
    the score is defined as 0.
    """
    predictions, labels = _check_outcomes(predictions, labels)
    tp = int(np.count_nonzero(predictions & labels))
    fp = int(np.count_nonzero(predictions & ~labels))
    return _f1_from_counts(tp, fp, int(np.count_nonzero(labels)))


# Abstract objectives


def abstract_accuracy(predictions: Interval, labels) -> Interval:
    """Interval of accuracies over every resolution of undetermined predictions.

    Per pair, correctness is the prediction itself for positive labels and its
    negation for negative labels; both are monotone, so the per-pair
    correctness intervals are summed endpoint-wise and scaled by `1 / |W|`.

    Example:
        abstract_accuracy(Interval([False, False], [False, True]), [False, True])
        -> Interval(0.5, 1.0)
    """
    predictions, labels = _check_abstract_outcomes(predictions, labels)
    negated = bool_not(predictions)
    correct = Interval(
        np.where(labels, predictions.lo, negated.lo),
        np.where(labels, predictions.hi, negated.hi),
    )
    lo = int(np.count_nonzero(correct.lo))
    hi = int(np.count_nonzero(correct.hi))
    return Interval(lo / labels.size, hi / labels.size)


def abstract_tp_fp(predictions: Interval, labels) -> Tuple[Interval, Interval]:
    """Interval bounds on the true-positive and false-positive counts.

    Both counts are monotone increasing in every prediction, so each is the
    endpoint-wise sum of the indicator intervals over its label class.
    """
    predictions, labels = _check_abstract_outcomes(predictions, labels)
    indicators = interval_indicator(predictions)
    tp = Interval(
        int(np.sum(indicators.lo[labels])), int(np.sum(indicators.hi[labels]))
    )
    fp = Interval(
        int(np.sum(indicators.lo[~labels])), int(np.sum(indicators.hi[~labels]))
    )
    return tp, fp


def abstract_f1(predictions: Interval, labels) -> Interval:
    """The tight abstract F1 transformer.

    Writing F1 as `2 / (1 + (FP + |positives|) / TP)` shows it is increasing in
    TP and decreasing in FP, so with `TP in [a1, b1]` and `FP in [a2, b2]`:

        F1 in [2 a1 / (a1 + b2 + P), 2 b1 / (b1 + a2 + P)]

    The result always lies within [0, 1].

    Example:
        TP in [1, 2], FP in [0, 1], P = 2 -> Interval(0.5, 1.0)
    """
    tp, fp = abstract_tp_fp(predictions, labels)
    num_positive = int(np.count_nonzero(labels))
    return Interval(
        _f1_from_counts(tp.lo, fp.hi, num_positive),
        _f1_from_counts(tp.hi, fp.lo, num_positive),
    )


def naive_abstract_f1(predictions: Interval, labels) -> Interval:
    """F1 bounds from plain interval division of `2 TP` by `TP + FP + P`.

    Sound but loose: the upper endpoint can exceed 1.

    Example:
        TP in [1, 2], FP in [0, 1], P = 2 -> Interval(0.4, 4 / 3)
    """
    tp, fp = abstract_tp_fp(predictions, labels)
    num_positive = int(np.count_nonzero(labels))
    denominator_hi = tp.hi + fp.hi + num_positive
    denominator_lo = tp.lo + fp.lo + num_positive
    # A zero denominator forces P = 0 and therefore TP = 0.
    lo = 0.0 if denominator_hi == 0 else 2 * tp.lo / denominator_hi
    hi = 0.0 if denominator_lo == 0 else 2 * tp.hi / denominator_lo
    return Interval(lo, hi)


# Objective registry


@dataclasses.dataclass(frozen=True)
class ObjectiveSpec:
    """A concrete objective paired with a valid abstract transformer."""

    name: str
    concrete: Callable[..., float]
    abstract: Callable[..., Interval]

    def __call__(self, predictions, labels) -> float:
        return self.concrete(predictions, labels)


OBJECTIVE_REGISTRY = {
    "accuracy": ObjectiveSpec("accuracy", accuracy, abstract_accuracy),
    "f1": ObjectiveSpec("f1", f1, abstract_f1),
    "f1_naive": ObjectiveSpec("f1_naive", f1, naive_abstract_f1),
}


def list_objectives() -> List[str]:
    """Returns a list of all the objective names available."""
    return sorted(list(OBJECTIVE_REGISTRY))


def get_objective(objective_name: str) -> ObjectiveSpec:
    try:
        return OBJECTIVE_REGISTRY[objective_name]
    except KeyError:
        logger.warning(f"Available objectives:\n{list_objectives()}")
        raise KeyError(f"Objective `{objective_name}` is missing.")
