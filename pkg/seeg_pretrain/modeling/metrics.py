import numpy as np
from scipy.stats import rankdata

from seeg_pretrain.exception import ShapeError, UndefinedMetricError


def roc_auc(scores, labels) -> float:
    """
    Area under the ROC curve via the Mann-Whitney U statistic.

    Tied scores receive their mid-rank, so each tied positive/negative pair
    counts one half.

    Raises:
        UndefinedMetricError: when only one class is present.
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    if scores.shape != labels.shape:
        raise ShapeError("scores and labels must have the same length")
    positive = labels == 1
    n_pos = int(positive.sum())
    n_neg = int(labels.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("ROC-AUC needs at least one positive and one negative example")
    ranks = rankdata(scores, method="average")
    u_statistic = ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u_statistic / (n_pos * n_neg))
