"""Prediction, link-estimation and variable-ranking metrics.

Undefined values (zero denominators, single-class labels) emit an
:class:`UndefinedMetricWarning` and return ``nan``.
"""
import warnings

import numpy as np

from .exceptions import UndefinedMetricWarning

__all__ = ["mspe", "rmspe", "msle", "rmsle", "auc", "pauc", "roc_points"]


def _pair(a, b):
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    return a, b


def _undefined(msg):
    warnings.warn(msg, UndefinedMetricWarning, stacklevel=3)
    return float("nan")


def mspe(y_test, y_hat):
    """Mean squared prediction error (the Brier score for 0/1 responses)."""
    y, yh = _pair(y_test, y_hat)
    return float(np.mean((y - yh) ** 2))


def rmspe(y_test, y_hat, y_bar_train):
    """``sum (y - y_hat)^2 / sum (y - y_bar_train)^2`` with the TRAINING mean."""
    y, yh = _pair(y_test, y_hat)
    den = float(np.sum((y - y_bar_train) ** 2))
    if den == 0:
        return _undefined("rMSPE undefined: test responses all equal the training mean")
    return float(np.sum((y - yh) ** 2)) / den


def msle(eta_true, eta_hat):
    """Mean squared error of the estimated linear predictor."""
    e, eh = _pair(eta_true, eta_hat)
    return float(np.mean((e - eh) ** 2))


def rmsle(eta_true, eta_hat):
    """``sum (eta - eta_hat)^2 / sum eta_hat^2``; the denominator uses estimates."""
    e, eh = _pair(eta_true, eta_hat)
    den = float(np.sum(eh**2))
    if den == 0:
        return _undefined("rMSLE undefined: estimated linear predictor is identically zero")
    return float(np.sum((e - eh) ** 2)) / den


def _tie_groups(labels, scores):
    """Positive and negative counts per distinct score, highest score first."""
    labels = np.asarray(labels).astype(bool).ravel()
    scores = np.asarray(scores, dtype=float).ravel()
    if labels.shape != scores.shape:
        raise ValueError("labels and scores differ in length")
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    lab = labels[order]
    starts = np.flatnonzero(np.r_[True, s[1:] != s[:-1]])
    pos = np.add.reduceat(lab.astype(np.int64), starts)
    size = np.diff(np.r_[starts, s.size])
    return pos, size - pos


def auc(labels, scores):
    """Area under the ROC curve in Mann-Whitney form.

    ``P(score+ > score-) + P(tie) / 2`` computed from integer pair counts over
    tie groups, so the result equals brute-force pair counting exactly.
    """
    pos, neg = _tie_groups(labels, scores)
    P, N = int(pos.sum()), int(neg.sum())
    if P == 0 or N == 0:
        return _undefined("AUC undefined: only one class present")
    # negatives ranked strictly below each group
    below = N - np.cumsum(neg)
    twice_u = int(np.sum(2 * pos * below + pos * neg))
    return twice_u / (2 * P * N)


def roc_points(labels, scores):
    """Vertices of the step ROC (FPR, TPR), with tie groups as diagonal segments."""
    pos, neg = _tie_groups(labels, scores)
    P, N = pos.sum(), neg.sum()
    tp = np.r_[0, np.cumsum(pos)]
    fp = np.r_[0, np.cumsum(neg)]
    return fp / N, tp / P


def pauc(active, scores, n):
    """Partial AUC for variable ranking, rescaled to [0, 1].

    Integrates the ROC of ``scores`` against ``active`` from FPR 0 up to
    ``min(1, (n / 2) / #inactive)`` by the trapezoidal rule, then divides by
    that upper limit.

    Parameters
    ----------
    active : boolean array of shape (p,)
        True for truly nonzero coefficients.
    scores : array of shape (p,)
        Nonnegative importance, e.g. ``|beta_hat|``.
    n : int
        Training sample size; the false-positive budget is ``n / 2``.
    """
    active = np.asarray(active).astype(bool).ravel()
    P = int(active.sum())
    N = active.size - P
    if P == 0 or N == 0:
        return _undefined("pAUC undefined: need active and inactive variables")
    fpr_max = min(1.0, (n / 2.0) / N)
    fpr, tpr = roc_points(active, scores)
    area = 0.0
    for i in range(1, fpr.size):
        x0, x1, y0, y1 = fpr[i - 1], fpr[i], tpr[i - 1], tpr[i]
        if x0 >= fpr_max:
            break
        if x1 > fpr_max:
            y1 = y0 + (y1 - y0) * (fpr_max - x0) / (x1 - x0)
            x1 = fpr_max
        area += 0.5 * (x1 - x0) * (y0 + y1)
    return float(area / fpr_max)
