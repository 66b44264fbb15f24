"""Detector evaluation against binary timestamp labels.

``range_pr_auc`` is an existence-recall variant of range-based PR AUC: a
contiguous anomaly range counts as recalled at a threshold as soon as one of
its timestamps is flagged, while precision stays point-wise.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import LengthMismatchError, NoPositivesError, SingleClassError

RANGE_METRIC_NAME = "range_pr_auc (existence-recall variant)"


@dataclass(frozen=True)
class EvalResult:
    roc_auc: float
    pr_auc: float
    range_pr_auc: float
    n_anomaly_ranges: int

    def to_json(self) -> str:
        d = asdict(self)
        d["n_ranges"] = d.pop("n_anomaly_ranges")
        d["range_metric"] = RANGE_METRIC_NAME
        return json.dumps(d, indent=2)


def _prepare(scores, labels):
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    y = np.asarray(labels).reshape(-1)
    if s.shape != y.shape:
        raise LengthMismatchError(f"{len(s)} scores vs {len(y)} labels")
    if not np.all(np.isin(y, (0, 1))):
        raise SingleClassError("labels must be binary (0/1)")
    return s, y.astype(bool)


def roc_auc(scores, labels) -> float:
    """P(random positive outscores random negative), ties counting one half."""
    s, y = _prepare(scores, labels)
    n_pos, n_neg = int(y.sum()), int((~y).sum())
    if n_pos == 0 or n_neg == 0:
        raise SingleClassError("ROC AUC needs both classes in the labels")
    ranks = rankdata(s)
    return float((ranks[y].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def _threshold_groups(s):
    """Distinct score values in decreasing order and, per timestamp, its group index."""
    values, inverse = np.unique(-s, return_inverse=True)
    return -values, inverse.reshape(-1)


def _step_area(recall, precision):
    prev = np.concatenate([[0.0], recall[:-1]])
    return float(np.sum((recall - prev) * precision))


def pr_auc(scores, labels) -> float:
    """Step-interpolated area under precision-recall (average precision).

    Thresholds sit between distinct score values; tied timestamps enter
    together.
    """
    s, y = _prepare(scores, labels)
    n_pos = int(y.sum())
    if n_pos == 0:
        raise NoPositivesError("PR AUC needs at least one positive label")
    _, group = _threshold_groups(s)
    n_groups = group.max() + 1
    tp = np.cumsum(np.bincount(group, weights=y, minlength=n_groups))
    flagged = np.cumsum(np.bincount(group, minlength=n_groups))
    return _step_area(tp / n_pos, tp / flagged)


def anomaly_ranges(labels) -> list[tuple[int, int]]:
    """Half-open ``(start, stop)`` index ranges of consecutive ones."""
    y = np.asarray(labels).reshape(-1).astype(np.int8)
    edges = np.diff(np.concatenate([[0], y, [0]]))
    return list(zip(np.flatnonzero(edges == 1).tolist(), np.flatnonzero(edges == -1).tolist()))


def range_pr_auc(scores, labels) -> float:
    """PR AUC with existence-based recall over anomaly ranges."""
    s, y = _prepare(scores, labels)
    ranges = anomaly_ranges(y)
    if not ranges:
        raise NoPositivesError("range PR AUC needs at least one anomaly range")
    _, group = _threshold_groups(s)
    n_groups = group.max() + 1
    tp = np.cumsum(np.bincount(group, weights=y, minlength=n_groups))
    flagged = np.cumsum(np.bincount(group, minlength=n_groups))
    # a range is recalled from the first threshold group reaching any of its timestamps
    first_hit = np.array([group[a:b].min() for a, b in ranges])
    recalled = np.cumsum(np.bincount(first_hit, minlength=n_groups))
    return _step_area(recalled / len(ranges), tp / flagged)


def evaluate(scores, labels) -> EvalResult:
    return EvalResult(
        roc_auc=roc_auc(scores, labels),
        pr_auc=pr_auc(scores, labels),
        range_pr_auc=range_pr_auc(scores, labels),
        n_anomaly_ranges=len(anomaly_ranges(labels)),
    )
