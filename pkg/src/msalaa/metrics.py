"""Clustering evaluation: ACC, NMI, ARI, Precision, Recall, F-score.

ACC and the precision/recall/F family use the optimal cluster-to-class
assignment (Hungarian matching on the contingency table). Precision,
recall and F default to support-weighted averages over the mapped
labels; a pair-counting variant is available via ``pairwise=True``.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

__all__ = [
    "hungarian",
    "contingency_table",
    "accuracy",
    "nmi",
    "ari",
    "precision_recall_f",
    "evaluate_all",
]

METRIC_NAMES = ("acc", "nmi", "ari", "precision", "recall", "f_score")


def _as_labels(labels, name):
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.size < 1:
        raise ValueError(f"{name} must be a non-empty 1-D label vector")
    return labels


def _check_pair(pred, truth):
    pred = _as_labels(pred, "pred")
    truth = _as_labels(truth, "truth")
    if pred.shape != truth.shape:
        raise ValueError(
            f"label vectors differ in length: {pred.size} vs {truth.size}"
        )
    return pred, truth


def hungarian(cost):
    """Minimum-cost assignment for a square cost matrix.

    Returns (columns assigned to rows 0..k-1, total cost).
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ValueError("cost matrix must be square")
    if not np.all(np.isfinite(cost)):
        raise ValueError("cost matrix must be finite")
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(cost.shape[0], dtype=int)
    perm[rows] = cols
    return perm, float(cost[rows, cols].sum())


def contingency_table(pred, truth):
    """Co-occurrence counts; returns (table, pred ids, truth ids)."""
    pred, truth = _check_pair(pred, truth)
    pred_ids, pi = np.unique(pred, return_inverse=True)
    truth_ids, ti = np.unique(truth, return_inverse=True)
    table = np.zeros((pred_ids.size, truth_ids.size), dtype=np.int64)
    np.add.at(table, (pi, ti), 1)
    return table, pred_ids, truth_ids


def _best_map(pred, truth):
    """Hungarian cluster->class map on the zero-padded contingency table.

    Returns (mapped pred labels as truth-id indices, truth index vector,
    number of true classes). Clusters matched to padding keep an
    out-of-range class index and never count as correct.
    """
    table, _, truth_ids = contingency_table(pred, truth)
    r, c = table.shape
    s = max(r, c)
    padded = np.zeros((s, s), dtype=np.float64)
    padded[:r, :c] = table
    # secondary objective breaks ties between equally matched assignments
    # using marginal-normalized counts, so the chosen map (and therefore
    # precision/F) does not depend on the arbitrary ordering of label ids
    rm = padded.sum(axis=1, keepdims=True)
    cm = padded.sum(axis=0, keepdims=True)
    secondary = padded / (rm + cm + 1.0)
    perm, _ = hungarian(-(padded * 1e6 + secondary))
    _, pi = np.unique(pred, return_inverse=True)
    _, ti = np.unique(truth, return_inverse=True)
    mapped = perm[pi]
    return mapped, ti, truth_ids.size


def accuracy(pred, truth):
    """Best labeled accuracy over all cluster-to-class assignments."""
    mapped, ti, _ = _best_map(pred, truth)
    return float(np.mean(mapped == ti))


def nmi(pred, truth):
    """Mutual information normalized by the geometric mean of entropies
    (``average="arithmetic"`` selects the arithmetic-mean variant)."""
    return _nmi(pred, truth, average="geometric")


def _nmi(pred, truth, average="geometric"):
    table, _, _ = contingency_table(pred, truth)
    n = table.sum()
    pij = table / n
    # marginals from integer counts so trivial partitions have exactly
    # zero entropy
    pi = table.sum(axis=1) / n
    pj = table.sum(axis=0) / n
    nz = pij > 0
    mi = float(np.sum(pij[nz] * np.log(pij[nz] / np.outer(pi, pj)[nz])))
    hi = float(-np.sum(pi[pi > 0] * np.log(pi[pi > 0])))
    hj = float(-np.sum(pj[pj > 0] * np.log(pj[pj > 0])))
    if hi == 0.0 and hj == 0.0:
        return 1.0  # both partitions trivial, hence identical
    if hi == 0.0 or hj == 0.0:
        return 0.0
    denom = np.sqrt(hi * hj) if average == "geometric" else (hi + hj) / 2.0
    return float(max(0.0, min(1.0, mi / denom)))


def ari(pred, truth):
    """Adjusted Rand index via the hypergeometric chance correction."""
    pred, truth = _check_pair(pred, truth)
    if pred.size < 2:
        raise ValueError("ARI requires at least 2 samples")
    table, _, _ = contingency_table(pred, truth)
    n = table.sum()

    def comb2(x):
        return x * (x - 1) / 2.0

    sum_ij = float(np.sum(comb2(table.astype(np.float64))))
    a = float(np.sum(comb2(table.sum(axis=1).astype(np.float64))))
    b = float(np.sum(comb2(table.sum(axis=0).astype(np.float64))))
    expected = a * b / comb2(float(n))
    denom = (a + b) / 2.0 - expected
    if denom == 0.0:
        return 1.0  # both partitions in the degenerate agreement case
    return float((sum_ij - expected) / denom)


def precision_recall_f(pred, truth, pairwise=False):
    """Support-weighted precision/recall/F1 over Hungarian-mapped labels.

    ``pairwise=True`` computes the pair-counting variant instead
    (precision/recall over sample pairs placed in the same cluster).
    """
    if pairwise:
        return _pairwise_prf(pred, truth)
    mapped, ti, n_classes = _best_map(pred, truth)
    n = ti.size
    precision = recall = f = 0.0
    for c in range(n_classes):
        support = int(np.sum(ti == c))
        if support == 0:
            continue
        tp = float(np.sum((mapped == c) & (ti == c)))
        pred_c = float(np.sum(mapped == c))
        p = tp / pred_c if pred_c > 0 else 0.0
        r = tp / support
        f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
        w = support / n
        precision += w * p
        recall += w * r
        f += w * f1
    return precision, recall, f


def _pairwise_prf(pred, truth):
    table, _, _ = contingency_table(pred, truth)

    def comb2(x):
        return x * (x - 1) / 2.0

    tp = float(np.sum(comb2(table.astype(np.float64))))
    pairs_pred = float(np.sum(comb2(table.sum(axis=1).astype(np.float64))))
    pairs_truth = float(np.sum(comb2(table.sum(axis=0).astype(np.float64))))
    p = tp / pairs_pred if pairs_pred > 0 else 0.0
    r = tp / pairs_truth if pairs_truth > 0 else 0.0
    f = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f


def evaluate_all(pred, truth, pairwise=False):
    """All six metrics as an ordered dict-like mapping."""
    p, r, f = precision_recall_f(pred, truth, pairwise=pairwise)
    return {
        "acc": accuracy(pred, truth),
        "nmi": nmi(pred, truth),
        "ari": ari(pred, truth),
        "precision": p,
        "recall": r,
        "f_score": f,
    }
