"""Retrieval, grounding and classification metrics.

Rankings are by descending score with ties broken by gallery index, so every
metric here is deterministic.
"""

import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

DEFAULT_KS = (1, 5)
DEFAULT_THRESHOLDS = (0.3, 0.5, 0.7)


@dataclass(frozen=True)
class Interval:
    start: float
    end: float

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError(f"interval start {self.start} must be < end {self.end}")

    @property
    def length(self) -> float:
        return self.end - self.start


def _as_interval(x) -> Interval:
    if isinstance(x, Interval):
        return x
    s, e = x
    return Interval(float(s), float(e))


def _check_shapes(scores, rel) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=np.float64)
    c = np.asarray(rel, dtype=np.float64)
    if s.ndim != 2 or s.shape != c.shape:
        raise ValueError(f"score matrix {s.shape} and relevance matrix {c.shape} must be equal-shaped 2-D")
    if np.any((c < 0) | (c > 1)):
        raise ValueError("relevance values must lie in [0, 1]")
    return s, c


def ranking(scores: np.ndarray) -> np.ndarray:
    """Gallery indices by descending score, stable on ties."""
    return np.argsort(-np.asarray(scores, dtype=np.float64), kind="stable")


def average_precision(scores, relevant) -> float:
    """AP of one query given a boolean relevance vector (at least one True)."""
    rel = np.asarray(relevant, dtype=bool)[ranking(scores)]
    hits = np.cumsum(rel)
    ranks = np.flatnonzero(rel) + 1
    return float(np.mean(hits[rel] / ranks))


def mean_average_precision(scores, rel, binarize_at: float = 0.0) -> float:
    """mAP over query rows; item ``j`` is relevant to query ``i`` when ``rel[i, j] > binarize_at``."""
    s, c = _check_shapes(scores, rel)
    aps = []
    skipped = 0
    for row, crow in zip(s, c):
        relevant = crow > binarize_at
        if not relevant.any():
            skipped += 1
            continue
        aps.append(average_precision(row, relevant))
    if skipped:
        warnings.warn(f"mAP: skipped {skipped} query(ies) without relevant items", RuntimeWarning, stacklevel=2)
    if not aps:
        raise ValueError("no query has a relevant item")
    return float(np.mean(aps))


def dcg(gains_in_rank_order) -> float:
    g = np.asarray(gains_in_rank_order, dtype=np.float64)
    return float(np.sum(g / np.log2(np.arange(2, g.size + 2))))


def ndcg(scores, rel) -> float:
    """Mean nDCG over query rows with graded gains ``rel[i, j]``."""
    s, c = _check_shapes(scores, rel)
    vals = []
    skipped = 0
    for row, gains in zip(s, c):
        ideal = dcg(np.sort(gains)[::-1])
        if ideal == 0:
            skipped += 1
            continue
        vals.append(dcg(gains[ranking(row)]) / ideal)
    if skipped:
        warnings.warn(f"nDCG: skipped {skipped} query(ies) with all-zero gains", RuntimeWarning, stacklevel=2)
    if not vals:
        raise ValueError("every query has all-zero gains")
    return float(np.mean(vals))


def retrieval_metrics(sims, rel) -> dict:
    """mAP and nDCG for video->text (rows) and text->video (columns) plus their averages.

    ``sims[i, j]`` scores video ``i`` against text ``j``; ``rel`` is indexed the same way.
    """
    s, c = _check_shapes(sims, rel)
    out = {
        "map_v2t": mean_average_precision(s, c),
        "map_t2v": mean_average_precision(s.T, c.T),
        "ndcg_v2t": ndcg(s, c),
        "ndcg_t2v": ndcg(s.T, c.T),
    }
    out["map_avg"] = 0.5 * (out["map_v2t"] + out["map_t2v"])
    out["ndcg_avg"] = 0.5 * (out["ndcg_v2t"] + out["ndcg_t2v"])
    return out


def iou(a, b) -> float:
    a, b = _as_interval(a), _as_interval(b)
    inter = max(0.0, min(a.end, b.end) - max(a.start, b.start))
    union = a.length + b.length - inter
    return inter / union


def recall_at_k(
    preds: Sequence[Sequence],
    gt: Sequence,
    k_values: Iterable[int] = DEFAULT_KS,
    thresholds: Iterable[float] = DEFAULT_THRESHOLDS,
) -> dict[tuple[int, float], float]:
    """R@K for IoU>=theta: the share of queries with a top-K prediction overlapping ground truth.

    ``preds[q]`` is the ranked (best first) list of intervals for query ``q``.
    """
    if len(preds) != len(gt):
        raise ValueError(f"{len(preds)} prediction lists for {len(gt)} ground-truth intervals")
    if not gt:
        raise ValueError("no queries")
    k_values, thresholds = sorted(k_values), sorted(thresholds)
    # best IoU among the first k predictions, per query and k
    best = np.zeros((len(gt), len(k_values)))
    for q, (ranked, g) in enumerate(zip(preds, gt)):
        ious = [iou(p, g) for p in ranked]
        for ki, k in enumerate(k_values):
            best[q, ki] = max(ious[:k], default=0.0)
    return {
        (k, th): float(np.mean(best[:, ki] >= th)) for ki, k in enumerate(k_values) for th in thresholds
    }


def format_recall_table(table: dict) -> dict[str, float]:
    return {f"R@{k},IoU={th:g}": v for (k, th), v in sorted(table.items())}


def accuracy(predictions, labels) -> float:
    p = np.asarray(predictions)
    y = np.asarray(labels)
    if p.shape != y.shape or p.size == 0:
        raise ValueError("predictions and labels must be non-empty and equal-length")
    return float(np.mean(p == y))
