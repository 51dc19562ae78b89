"""Evaluation: accuracy, F1, ROC curve/AUC, PR curve/AUC.

Fixed conventions (they matter for reproducing numbers exactly):

* A sample is predicted positive iff its score is >= the threshold, so
  boundary scores count as positive.
* Accuracy and F1 are reported at threshold 0.5.
* F1 is 0 when tp = 0 but fp or fn > 0; the empty case tp = fp = fn = 0
  (no positives anywhere) is defined as 1.
* ROC points sweep all distinct score values high-to-low, with ties
  grouped; trapezoidal area then equals the Mann-Whitney statistic
  P(s+ > s-) + 0.5 P(s+ = s-).
* PR points use the same grouped sweep, ordered from recall 1 (lowest
  threshold) down, with a final (recall 0, precision 1) anchor for the
  empty prediction set; the area is trapezoidal over recall.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class SingleClassError(ValueError):
    """Raised when a metric needs a class that is absent from the labels."""


def _check_pair(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError(f"scores and labels must match, got {scores.shape} vs {labels.shape}")
    if scores.size < 1:
        raise ValueError("need at least one sample")
    return scores, labels


def confusion_at(scores, labels, threshold: float = 0.5) -> tuple[int, int, int, int]:
    """(tp, fp, tn, fn) with positives predicted at score >= threshold."""
    scores, labels = _check_pair(scores, labels)
    pred = scores >= threshold
    pos = labels == 1
    tp = int((pred & pos).sum())
    fp = int((pred & ~pos).sum())
    tn = int((~pred & ~pos).sum())
    fn = int((~pred & pos).sum())
    return tp, fp, tn, fn


def accuracy_f1(confusion: tuple[int, int, int, int]) -> tuple[float, float]:
    """Accuracy and F1 from a confusion tuple, with the zero conventions above."""
    tp, fp, tn, fn = confusion
    total = tp + fp + tn + fn
    if total < 1:
        raise ValueError("empty confusion")
    accuracy = (tp + tn) / total
    if tp == 0:
        f1 = 1.0 if fp == 0 and fn == 0 else 0.0
    else:
        precision = tp / (tp + fp)
        recall = tp / (tp + fn)
        f1 = 2.0 * precision * recall / (precision + recall)
    return accuracy, f1


def _grouped_counts(scores: np.ndarray, labels: np.ndarray):
    """Cumulative (tp, fp) after each distinct score value, high to low."""
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    pos = labels[order] == 1
    # indices where a tie group ends
    boundary = np.nonzero(np.diff(s))[0]
    ends = np.concatenate([boundary, [s.size - 1]])
    cum_tp = np.cumsum(pos)[ends]
    cum_fp = np.cumsum(~pos)[ends]
    thresholds = s[ends]
    return thresholds, cum_tp.astype(np.float64), cum_fp.astype(np.float64)


def _trapezoid(x: np.ndarray, y: np.ndarray) -> float:
    return float(0.5 * np.sum((x[1:] - x[:-1]) * (y[1:] + y[:-1])))


def roc_auc(scores, labels) -> tuple[float, np.ndarray]:
    """ROC AUC by trapezoid over tie-grouped points; returns (auc, points).

    Points are (fpr, tpr) rows from (0,0) to (1,1), monotone in both
    coordinates.
    """
    scores, labels = _check_pair(scores, labels)
    n_pos = int((labels == 1).sum())
    n_neg = labels.size - n_pos
    if n_pos == 0:
        raise SingleClassError("ROC AUC undefined: no positive labels")
    if n_neg == 0:
        raise SingleClassError("ROC AUC undefined: no negative labels")
    _, cum_tp, cum_fp = _grouped_counts(scores, labels)
    fpr = np.concatenate([[0.0], cum_fp / n_neg])
    tpr = np.concatenate([[0.0], cum_tp / n_pos])
    points = np.column_stack([fpr, tpr])
    return _trapezoid(fpr, tpr), points


def pr_auc(scores, labels) -> tuple[float, np.ndarray]:
    """PR AUC by trapezoid over recall; returns (auc, points).

    Points are (recall, precision) rows ordered recall-descending: first
    the lowest threshold (recall 1), last the (0, 1) anchor where nothing
    is predicted positive.
    """
    scores, labels = _check_pair(scores, labels)
    n_pos = int((labels == 1).sum())
    if n_pos == 0:
        raise SingleClassError("PR AUC undefined: no positive labels")
    _, cum_tp, cum_fp = _grouped_counts(scores, labels)
    recall = cum_tp / n_pos
    precision = cum_tp / (cum_tp + cum_fp)
    # low threshold (recall 1) first, then the empty-prediction anchor
    recall = np.concatenate([recall[::-1], [0.0]])
    precision = np.concatenate([precision[::-1], [1.0]])
    points = np.column_stack([recall, precision])
    auc = -_trapezoid(recall, precision)  # recall runs downward
    return auc, points


@dataclass
class EvalReport:
    """One evaluated model: the four headline metrics plus both curves."""

    accuracy: float
    f1: float
    roc_auc: float
    pr_auc: float
    threshold: float
    confusion: tuple[int, int, int, int]
    roc_points: np.ndarray
    pr_points: np.ndarray

    def headline(self) -> dict[str, float]:
        return {
            "accuracy": self.accuracy,
            "f1": self.f1,
            "roc_auc": self.roc_auc,
            "pr_auc": self.pr_auc,
        }


def evaluate(scores, labels, threshold: float = 0.5) -> EvalReport:
    """Compose all four metrics and both curves for one score vector."""
    scores, labels = _check_pair(scores, labels)
    conf = confusion_at(scores, labels, threshold)
    acc, f1 = accuracy_f1(conf)
    roc, roc_points = roc_auc(scores, labels)
    pr, pr_points = pr_auc(scores, labels)
    return EvalReport(
        accuracy=acc,
        f1=f1,
        roc_auc=roc,
        pr_auc=pr,
        threshold=threshold,
        confusion=conf,
        roc_points=roc_points,
        pr_points=pr_points,
    )
