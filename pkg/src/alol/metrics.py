"""Pure scoring functions shared by learners, policies, and reports."""

from __future__ import annotations

import enum
from typing import Sequence

import numpy as np

from .errors import AlignmentError, DistributionError


class MetricKind(enum.Enum):
    ACCURACY = "accuracy"
    MACRO_F1 = "macro_f1"
    TOKEN_F1 = "token_f1"
    EXACT_MATCH = "exact_match"


def _as_label_arrays(
    predictions: Sequence, golds: Sequence
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    if len(predictions) != len(golds):
        raise AlignmentError(
            f"{len(predictions)} predictions vs {len(golds)} golds"
        )
    if len(predictions) == 0:
        raise AlignmentError("cannot score an empty batch")
    preds = [np.asarray(p, dtype=np.int64).ravel() for p in predictions]
    gold = [np.asarray(g, dtype=np.int64).ravel() for g in golds]
    for i, (p, g) in enumerate(zip(preds, gold)):
        if p.shape != g.shape:
            raise AlignmentError(
                f"example {i}: prediction has {p.size} slots, gold has {g.size}"
            )
    return preds, gold


def _binary_f1(tp: int, pred_pos: int, gold_pos: int) -> float:
    if pred_pos == 0 and gold_pos == 0:
        return 1.0
    if tp == 0:
        return 0.0
    precision = tp / pred_pos
    recall = tp / gold_pos
    return 2.0 * precision * recall / (precision + recall)


def score(
    predictions: Sequence,
    golds: Sequence,
    kind: MetricKind,
    *,
    class_count: int | None = None,
) -> float:
    """Compare predicted label sequences against gold ones.

    ``predictions`` and ``golds`` are parallel sequences of per-example label
    vectors. Single-label tasks pass length-1 vectors. ``class_count`` fixes
    the class universe for MacroF1; without it the universe is whatever
    labels appear in the batch.
    """
    preds, gold = _as_label_arrays(predictions, golds)
    flat_pred = np.concatenate(preds)
    flat_gold = np.concatenate(gold)

    if kind is MetricKind.ACCURACY:
        return float(np.mean(flat_pred == flat_gold))

    if kind is MetricKind.EXACT_MATCH:
        hits = sum(1 for p, g in zip(preds, gold) if np.array_equal(p, g))
        return hits / len(preds)

    if kind is MetricKind.TOKEN_F1:
        # Class 0 is background; F1 is micro-averaged over the rest.
        tp = int(np.sum((flat_pred == flat_gold) & (flat_gold != 0)))
        return _binary_f1(tp, int(np.sum(flat_pred != 0)), int(np.sum(flat_gold != 0)))

    if kind is MetricKind.MACRO_F1:
        if class_count is not None:
            classes: Sequence[int] = range(class_count)
        else:
            classes = np.union1d(flat_pred, flat_gold).tolist()
        # Classes absent from both prediction and gold contribute 0, which
        # only matters when class_count pins the universe.
        total = 0.0
        for c in classes:
            pred_pos = int(np.sum(flat_pred == c))
            gold_pos = int(np.sum(flat_gold == c))
            if pred_pos == 0 and gold_pos == 0:
                continue
            tp = int(np.sum((flat_pred == c) & (flat_gold == c)))
            total += _binary_f1(tp, pred_pos, gold_pos)
        return total / len(classes)

    raise ValueError(f"unknown metric kind: {kind!r}")


def mean_entropy(distributions: Sequence) -> float:
    """Mean Shannon entropy (natural log) of a batch of distributions."""
    table = np.asarray(distributions, dtype=np.float64)
    if table.ndim != 2 or table.shape[0] == 0 or table.shape[1] == 0:
        raise DistributionError(f"expected a non-empty 2D table, got shape {table.shape}")
    if np.any(table < 0.0):
        raise DistributionError("negative probability mass")
    sums = table.sum(axis=1)
    bad = np.abs(sums - 1.0) > 1e-6
    if np.any(bad):
        row = int(np.argmax(bad))
        raise DistributionError(f"row {row} sums to {sums[row]!r}, not 1")
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(table > 0.0, -table * np.log(table), 0.0)
    value = float(terms.sum(axis=1).mean())
    return max(value, 0.0)
