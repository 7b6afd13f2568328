"""Binary classification metrics with Peak as the positive class."""

import numpy as np

from .data import PEAK


def confusion(y_true, y_pred, positive=PEAK):
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise ValueError(f"length mismatch: {y_true.shape} vs {y_pred.shape}")
    if y_true.size == 0:
        raise ValueError("metrics of an empty prediction are undefined")
    t = y_true == positive
    p = y_pred == positive
    tp = int(np.sum(t & p))
    fp = int(np.sum(~t & p))
    fn = int(np.sum(t & ~p))
    tn = int(np.sum(~t & ~p))
    return tp, fp, fn, tn


def f1_score(y_true, y_pred, positive=PEAK) -> float:
    """``2PR / (P + R)``; 0 when precision and recall are both zero."""
    tp, fp, fn, _ = confusion(y_true, y_pred, positive)
    # 2PR/(P+R) == 2TP/(2TP+FP+FN), and P+R == 0 exactly when TP == 0
    if tp == 0:
        return 0.0
    return 2.0 * tp / (2.0 * tp + fp + fn)


def accuracy(y_true, y_pred) -> float:
    tp, fp, fn, tn = confusion(y_true, y_pred)
    return (tp + tn) / (tp + fp + fn + tn)
