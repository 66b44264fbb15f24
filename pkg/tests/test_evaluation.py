import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tada.errors import LengthMismatchError, NoPositivesError, SingleClassError
from tada.evaluation import RANGE_METRIC_NAME, anomaly_ranges, evaluate, pr_auc, range_pr_auc, roc_auc


def test_roc_examples():
    y = np.array([0, 1, 1, 0, 1])
    assert roc_auc(y, y) == 1.0
    assert roc_auc(1 - y, y) == 0.0
    assert roc_auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == 0.75
    assert roc_auc([1, 1, 1, 1], [0, 0, 1, 1]) == 0.5   # ties count one half


def test_pr_examples():
    assert pr_auc([0.9, 0.8, 0.1], [1, 1, 0]) == 1.0
    assert pr_auc([2, 2, 2, 2, 2], [0, 1, 0, 0, 1]) == pytest.approx(0.4, abs=1e-15)
    assert pr_auc([3, 2, 1], [1, 0, 1]) == pytest.approx(5 / 6, abs=1e-15)


def test_range_examples():
    y = np.array([0, 0, 1, 1, 1, 0, 0])
    assert range_pr_auc([0, 0, 5, 6, 7, 0, 0], y) == 1.0
    # one timestamp of each range scored high, no false positives
    y2 = np.array([0, 1, 1, 0, 0, 1, 1, 1, 0, 0])
    assert range_pr_auc([0, 9, 0, 0, 0, 0, 8, 0, 0, 0], y2) == 1.0


def test_two_range_toy():
    # ranges [1, 3) and [6, 8); the detector fires inside range 1 (t=1) and
    # once as a false positive (t=3). Thresholds, high to low:
    #   {5}: flagged {1}, precision 1, range recall 1/2, point recall 1/4
    #   {3}: flagged {1, 3}, precision 1/2, recall unchanged
    #   {0}: everything, precision 4/10, recall 1
    y = np.array([0, 1, 1, 0, 0, 0, 1, 1, 0, 0])
    s = np.array([0, 5, 0, 3, 0, 0, 0, 0, 0, 0])
    assert anomaly_ranges(y) == [(1, 3), (6, 8)]
    assert range_pr_auc(s, y) == pytest.approx(0.5 * 1 + 0.5 * 0.4, abs=1e-15)
    assert pr_auc(s, y) == pytest.approx(0.25 * 1 + 0.75 * 0.4, abs=1e-15)


def test_errors():
    with pytest.raises(SingleClassError):
        roc_auc([1, 2], [1, 1])
    with pytest.raises(NoPositivesError):
        pr_auc([1, 2], [0, 0])
    with pytest.raises(NoPositivesError):
        range_pr_auc([1, 2], [0, 0])
    with pytest.raises(LengthMismatchError):
        evaluate([1, 2, 3], [0, 1])
    with pytest.raises(SingleClassError):
        roc_auc([1, 2], [0, 2])


def test_report_json():
    r = evaluate([0.1, 0.9, 0.2, 0.8], [0, 1, 0, 1])
    doc = json.loads(r.to_json())
    assert doc == {"roc_auc": 1.0, "pr_auc": 1.0, "range_pr_auc": 1.0, "n_ranges": 2, "range_metric": RANGE_METRIC_NAME}


def _case(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(5, 200))
    y = (rng.random(n) < 0.3).astype(int)
    y[rng.integers(n)] = 1
    y[rng.integers(n)] = 0 if y.sum() > 1 else y[0]
    if y.all() or not y.any():
        y[0], y[-1] = 0, 1
    s = np.round(rng.standard_normal(n) + y, int(rng.integers(0, 3)))   # rounding makes ties
    return s, y


@given(st.integers(0, 2**32 - 1))
def test_monotone_invariance(seed):
    s, y = _case(seed)
    base = evaluate(s, y)
    for t in (np.exp(s), 3 * s - 7, s ** 3 + s):
        assert evaluate(t, y) == base


@given(st.integers(0, 2**32 - 1))
def test_roc_complement(seed):
    s, y = _case(seed)
    s = s + np.arange(len(s)) * 1e-9   # break ties
    assert roc_auc(s, y) + roc_auc(-s, y) == pytest.approx(1.0, abs=1e-12)


@given(st.integers(0, 2**32 - 1))
def test_metrics_in_unit_interval(seed):
    r = evaluate(*_case(seed))
    assert all(0 <= v <= 1 for v in (r.roc_auc, r.pr_auc, r.range_pr_auc))


@given(st.integers(0, 2**32 - 1))
def test_unit_length_ranges_reduce_to_pr(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 100))
    y = np.zeros(n, dtype=int)
    y[::3] = rng.random(len(y[::3])) < 0.6
    y[0] = 1
    s = np.round(rng.standard_normal(n), 1)
    assert all(b - a == 1 for a, b in anomaly_ranges(y))
    assert range_pr_auc(s, y) == pr_auc(s, y)
