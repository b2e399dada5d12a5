"""Scoring recovered structure against ground truth.

Labelings are plain integer sequences of equal length. Items carrying the
EXCLUDED marker (or None) are dropped from pair-counting scores before
comparison; callers use this for pruned variables, which are reported
separately rather than scored.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EXCLUDED = -1


def _as_labels(a) -> np.ndarray:
    arr = np.asarray([EXCLUDED if v is None else v for v in a], dtype=np.int64)
    return arr


def _contingency(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)
    return table


def _comb2(x):
    x = np.asarray(x, dtype=float)
    return x * (x - 1.0) / 2.0


def adjusted_rand_index(a, b) -> float:
    """Pair-counting partition agreement, corrected for chance.

    1.0 for identical partitions, expectation 0 for independent random
    partitions. In the degenerate case where the correction denominator
    vanishes (both partitions trivial) the score is 1.0 if the partitions
    coincide and 0.0 otherwise.
    """
    a, b = _as_labels(a), _as_labels(b)
    if a.shape != b.shape:
        raise ValueError(f"labelings differ in length: {a.size} vs {b.size}")
    keep = (a != EXCLUDED) & (b != EXCLUDED)
    a, b = a[keep], b[keep]
    if a.size < 2:
        raise ValueError("need at least 2 scored items")
    table = _contingency(a, b)
    index = _comb2(table).sum()
    sum_a = _comb2(table.sum(axis=1)).sum()
    sum_b = _comb2(table.sum(axis=0)).sum()
    expected = sum_a * sum_b / _comb2(a.size)
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        identical = (np.count_nonzero(table, axis=1) == 1).all() and (
            np.count_nonzero(table, axis=0) == 1
        ).all()
        return 1.0 if identical else 0.0
    return float((index - expected) / (max_index - expected))


def binary_factor_accuracy(pred, truth) -> float:
    """Agreement between two binary labelings, up to a global label flip."""
    pred, truth = _as_labels(pred), _as_labels(truth)
    if pred.shape != truth.shape:
        raise ValueError(f"labelings differ in length: {pred.size} vs {truth.size}")
    for name, arr in (("pred", pred), ("truth", truth)):
        if not np.isin(arr, (0, 1)).all():
            raise ValueError(f"{name} is not binary")
    agree = float(np.mean(pred == truth))
    return max(agree, 1.0 - agree)


@dataclass(frozen=True)
class Confusion:
    """Contingency counts plus a greedy truth-to-prediction alignment."""

    truth_labels: np.ndarray
    pred_labels: np.ndarray
    counts: np.ndarray                # counts[t][p]
    matching: list                    # (truth_label, pred_label) pairs

    def matched_counts(self) -> np.ndarray:
        """Counts with prediction columns reordered by the matching."""
        t_pos = {v: i for i, v in enumerate(self.truth_labels)}
        p_pos = {v: i for i, v in enumerate(self.pred_labels)}
        order = [p_pos[p] for _, p in sorted(self.matching, key=lambda tp: t_pos[tp[0]])]
        rest = [i for i in range(len(self.pred_labels)) if i not in order]
        return self.counts[:, order + rest]


def confusion_matrix(pred, truth) -> Confusion:
    """Counts of (truth, prediction) label pairs with a greedy matching.

    The matching repeatedly pairs the largest remaining cell (ties to the
    lowest label pair) and is for display only; scored metrics never use
    it.
    """
    pred, truth = _as_labels(pred), _as_labels(truth)
    if pred.shape != truth.shape:
        raise ValueError(f"labelings differ in length: {pred.size} vs {truth.size}")
    truth_labels, ti = np.unique(truth, return_inverse=True)
    pred_labels, pi = np.unique(pred, return_inverse=True)
    counts = np.zeros((truth_labels.size, pred_labels.size), dtype=np.int64)
    np.add.at(counts, (ti, pi), 1)

    work = counts.astype(float).copy()
    matching = []
    for _ in range(min(work.shape)):
        t, p = np.unravel_index(np.argmax(work), work.shape)
        matching.append((int(truth_labels[t]), int(pred_labels[p])))
        work[t, :] = -1.0
        work[:, p] = -1.0
    return Confusion(truth_labels, pred_labels, counts, matching)
