"""Pure-numpy fallback for the tree kernels.

Mirrors the compiled extension exactly: identical scan order, identical
tie-breaking (first column, then lowest threshold), and identical floating
point formulas, so the two backends are interchangeable bit-for-bit on the
integer-count arithmetic that drives split selection.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def best_split(x: np.ndarray, y: np.ndarray):
    """Lowest weighted-Gini split over the columns of x.

    x: (n, k) float64; y: (n,) int64 in {0, 1}. Returns (col, threshold,
    cost); col is -1 when no valid split exists (pure node or constant
    columns). Candidate thresholds are midpoints between consecutive
    distinct sorted values; samples with value <= threshold go left.
    """
    n, k = x.shape
    best_col, best_thr, best_cost = -1, 0.0, np.inf
    total1 = int(y.sum())
    total0 = n - total1
    if n < 2 or total1 == 0 or total0 == 0:
        return best_col, best_thr, best_cost

    for col in range(k):
        order = np.argsort(x[:, col], kind="stable")
        xs = x[order, col]
        ys = y[order]
        nl = np.arange(1, n, dtype=np.int64)
        c1 = np.cumsum(ys)[:-1]
        c0 = nl - c1
        nr = n - nl
        r1 = total1 - c1
        r0 = total0 - c0
        gini_l = 1.0 - (c0 * c0 + c1 * c1) / (nl * nl)
        gini_r = 1.0 - (r0 * r0 + r1 * r1) / (nr * nr)
        cost = (nl * gini_l + nr * gini_r) / n
        cost[xs[1:] == xs[:-1]] = np.inf
        i = int(np.argmin(cost))
        if cost[i] < best_cost:
            best_cost = float(cost[i])
            best_col = col
            best_thr = float((xs[i] + xs[i + 1]) / 2.0)
    return best_col, best_thr, best_cost


def forest_predict(node_feature, node_threshold, node_left, node_right,
                   node_value, roots, x):
    """Mean leaf value over all trees for each row of x.

    Flattened forest arrays: node_feature < 0 marks a leaf whose prediction
    is node_value; internal nodes route row i left iff
    x[i, node_feature] <= node_threshold.
    """
    n = x.shape[0]
    acc = np.zeros(n, dtype=np.float64)
    rows = np.arange(n)
    for root in roots:
        idx = np.full(n, root, dtype=np.int64)
        active = node_feature[idx] >= 0
        while active.any():
            cur = idx[active]
            feats = node_feature[cur]
            go_left = x[rows[active], feats] <= node_threshold[cur]
            idx[active] = np.where(go_left, node_left[cur], node_right[cur])
            active = node_feature[idx] >= 0
        acc += node_value[idx]
    return acc / len(roots)
