"""Hard cluster labels from a factor matrix, and permutation-matched scoring.

A nonnegative factor assigns each row to the column holding its largest
entry.  Because factorization recovers clusters only up to a relabeling,
accuracy against ground truth maximizes the matched count over all
label-to-label assignments (solved exactly with the Hungarian method on
the confusion matrix).
"""

import numpy as np
from scipy.optimize import linear_sum_assignment

from .dense import as_matrix

__all__ = ["assign_labels", "clustering_accuracy"]

_MAX_ALPHABET = 64


def assign_labels(u):
    """Row-wise argmax labels; ties break to the lowest column index."""
    u = as_matrix(u, name="u")
    return np.argmax(u, axis=1)


def clustering_accuracy(pred, truth):
    """Best-matching fraction of agreeing labels, in [0, 1].

    Builds the confusion matrix between the two labelings and maximizes
    the diagonal mass over all one-to-one label matchings, so the score is
    invariant to relabeling on either side.
    """
    pred = np.asarray(pred).ravel()
    truth = np.asarray(truth).ravel()
    if pred.shape[0] != truth.shape[0]:
        raise ValueError(
            f"label vectors differ in length: {pred.shape[0]} vs {truth.shape[0]}"
        )
    if pred.shape[0] == 0:
        raise ValueError("label vectors are empty")

    _, pred_ids = np.unique(pred, return_inverse=True)
    _, truth_ids = np.unique(truth, return_inverse=True)
    np_pred = int(pred_ids.max()) + 1
    np_truth = int(truth_ids.max()) + 1
    if np_pred > _MAX_ALPHABET or np_truth > _MAX_ALPHABET:
        raise ValueError(f"label alphabets are limited to {_MAX_ALPHABET} values")

    confusion = np.zeros((np_pred, np_truth), dtype=np.int64)
    np.add.at(confusion, (pred_ids, truth_ids), 1)
    rows, cols = linear_sum_assignment(confusion, maximize=True)
    matched = int(confusion[rows, cols].sum())
    return matched / pred.shape[0]
