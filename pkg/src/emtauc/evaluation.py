"""Pairwise ranking metric, regularized objective, and hardness scoring.

The ranking loss counts positive/negative pairs whose decision values are
misordered, with ties counted as losses. All float comparisons are exact;
no epsilon is applied anywhere.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, DatasetView, as_rate


def _as_weights(w, dim: int) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1 or w.shape[0] != dim:
        raise ValueError(f"weight vector must have shape ({dim},), got {w.shape}")
    return w


def decision_values(w, view: DatasetView) -> tuple[np.ndarray, np.ndarray]:
    """Inner products of ``w`` with the view's instances, split by class.

    Returns (f_pos, f_neg) in view order. Absent features contribute zero.
    """
    w = _as_weights(w, view.base.dim)
    return view.pos_matrix @ w, view.neg_matrix @ w


def pairwise_loss_count(f_pos, f_neg) -> int:
    """Exact number of pairs (i, j) with f_pos[i] <= f_neg[j].

    One sort plus a vectorized binary search; equivalent to enumerating all
    T+ * T- pairs but in O((T+ + T-) log(T+ + T-)).
    """
    f_pos = np.asarray(f_pos, dtype=np.float64)
    f_neg = np.asarray(f_neg, dtype=np.float64)
    if f_pos.size == 0 or f_neg.size == 0:
        raise ValueError("both classes need at least one decision value")
    neg_sorted = np.sort(f_neg)
    below = np.searchsorted(neg_sorted, f_pos, side="left")  # #{j: f_neg[j] < f_pos[i]}
    return int((f_neg.size - below).sum())


def loss_fraction(w, view: DatasetView) -> float:
    f_pos, f_neg = decision_values(w, view)
    return pairwise_loss_count(f_pos, f_neg) / (view.t_pos * view.t_neg)


def auc_metric(w, view: DatasetView) -> float:
    """Fraction of correctly ordered pairs; ties count against it."""
    return 1.0 - loss_fraction(w, view)


def objective(w, view: DatasetView, lam: float) -> float:
    """Minimization target: pairwise loss fraction plus (lam/2) * ||w||^2.

    Routed through ``objective_batch`` so scalar and batched evaluation of
    the same weights agree bit for bit.
    """
    w = _as_weights(w, view.base.dim)
    return float(objective_batch(w[np.newaxis, :], view, lam)[0])


def objective_batch(W, view: DatasetView, lam: float) -> np.ndarray:
    """Vectorized ``objective`` over the rows of ``W`` (shape (k, dim)).

    Column-independent throughout, so evaluating in chunks yields bit-equal
    results to one full batch.
    """
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2 or W.shape[1] != view.base.dim:
        raise ValueError(f"weight batch must have shape (k, {view.base.dim})")
    if view.t_pos == 0 or view.t_neg == 0:
        raise ValueError("both classes need at least one instance in the view")
    f_pos = np.asarray(view.pos_matrix @ W.T)  # (T+, k)
    f_neg = np.asarray(view.neg_matrix @ W.T)  # (T-, k)
    neg_sorted = np.sort(f_neg, axis=0)
    t_neg = view.t_neg
    pairs = view.t_pos * t_neg
    out = np.empty(W.shape[0], dtype=np.float64)
    for col in range(W.shape[0]):
        below = np.searchsorted(neg_sorted[:, col], f_pos[:, col], side="left")
        out[col] = (t_neg - below).sum() / pairs
    out += 0.5 * lam * np.einsum("ij,ij->i", W, W)
    return out


@dataclass(frozen=True)
class HardnessScores:
    """Per-instance misranking counts under a fixed weight vector.

    ``pos_scores[i]`` belongs to instance ``dataset.pos_idx[i]`` and counts
    negatives with decision value >= that positive's (ties hurt positives).
    ``neg_scores[j]`` belongs to ``dataset.neg_idx[j]`` and counts positives
    with decision value strictly below that negative's.
    """

    pos_scores: np.ndarray
    neg_scores: np.ndarray


def hardness_scores(w, ds: Dataset) -> HardnessScores:
    view = ds.full_view()
    f_pos, f_neg = decision_values(w, view)
    neg_sorted = np.sort(f_neg)
    pos_sorted = np.sort(f_pos)
    pos_scores = ds.t_neg - np.searchsorted(neg_sorted, f_pos, side="left")
    neg_scores = np.searchsorted(pos_sorted, f_neg, side="left")
    return HardnessScores(
        pos_scores=pos_scores.astype(np.int64),
        neg_scores=neg_scores.astype(np.int64),
    )


def select_hardest(scores: HardnessScores, ds: Dataset, s) -> DatasetView:
    """View of the max(1, floor(s*T)) hardest instances per class.

    Within a class, higher score wins; ties break toward the lower original
    index. The view lists its indices ascending.
    """
    rate = as_rate(s, "sampling rate")
    if scores.pos_scores.shape[0] != ds.t_pos or scores.neg_scores.shape[0] != ds.t_neg:
        raise ValueError("scores do not match the dataset's class sizes")
    n_pos = max(1, int(rate * ds.t_pos))
    n_neg = max(1, int(rate * ds.t_neg))
    # lexsort: primary key descending score, secondary ascending position
    pos_order = np.lexsort((np.arange(ds.t_pos), -scores.pos_scores))[:n_pos]
    neg_order = np.lexsort((np.arange(ds.t_neg), -scores.neg_scores))[:n_neg]
    chosen = np.concatenate([ds.pos_idx[pos_order], ds.neg_idx[neg_order]])
    return DatasetView(ds, np.sort(chosen))
