"""Contrastive objectives over paired video/text embeddings.

Every loss is returned in minimisation form together with its analytic
gradient. With ``S = V T^T / tau`` and a boolean positive mask ``P`` (always
containing the diagonal), the video-to-text term for anchor ``i`` is::

    logsumexp_j S[i, j] - logsumexp_{k in P_i} S[i, k]

and the text-to-video term is the same expression on ``S^T``. Both directions
are averaged over anchors and summed. InfoNCE is the case ``P = I``; EgoNCE
uses action-aware positives over an augmented batch whose second half holds
one scene-negative per base sample.
"""

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DEFAULT_TAU = 0.05
NORM_TOL = 1e-9


@dataclass
class LossResult:
    value: float
    grad_video: np.ndarray | None = None
    grad_text: np.ndarray | None = None
    v2t: float = 0.0
    t2v: float = 0.0
    grad_sims: np.ndarray | None = None


def l2_normalize(x: np.ndarray, axis: int = -1) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return x / np.linalg.norm(x, axis=axis, keepdims=True)


@dataclass
class EmbeddingBatch:
    """Row-aligned video/text embeddings; row ``i`` of each is one pair."""

    video: np.ndarray
    text: np.ndarray
    meta: list = field(default_factory=list)

    def __post_init__(self):
        self.video = np.asarray(self.video, dtype=np.float64)
        self.text = np.asarray(self.text, dtype=np.float64)
        _check_pair(self.video, self.text)
        if self.meta and len(self.meta) != len(self.video):
            raise ValueError(f"meta has {len(self.meta)} rows for {len(self.video)} embeddings")

    def __len__(self) -> int:
        return self.video.shape[0]

    def check_normalized(self, tol: float = NORM_TOL) -> None:
        for name, m in (("video", self.video), ("text", self.text)):
            dev = np.abs(np.linalg.norm(m, axis=1) - 1.0)
            if dev.max() > tol:
                raise ValueError(f"{name} rows are not L2-normalised (max deviation {dev.max():.3g})")


@dataclass
class AugmentedBatch:
    """A base batch plus one scene-negative row per base row."""

    base: EmbeddingBatch
    negatives: EmbeddingBatch

    def __post_init__(self):
        if len(self.base) != len(self.negatives):
            raise ValueError("negatives must have exactly one row per base row")

    @property
    def video(self) -> np.ndarray:
        return np.vstack([self.base.video, self.negatives.video])

    @property
    def text(self) -> np.ndarray:
        return np.vstack([self.base.text, self.negatives.text])

    @property
    def meta(self) -> list:
        return list(self.base.meta) + list(self.negatives.meta)

    def __len__(self) -> int:
        return 2 * len(self.base)


def _check_pair(video, text) -> tuple[np.ndarray, np.ndarray]:
    v = np.asarray(video, dtype=np.float64)
    t = np.asarray(text, dtype=np.float64)
    if v.ndim != 2 or t.ndim != 2:
        raise ValueError("embeddings must be 2-D (rows x dim)")
    if v.shape != t.shape:
        raise ValueError(f"video {v.shape} and text {t.shape} embeddings differ in shape")
    if v.shape[0] == 0:
        raise ValueError("empty batch")
    if not (np.all(np.isfinite(v)) and np.all(np.isfinite(t))):
        raise ValueError("non-finite values in embeddings")
    return v, t


def _check_tau(tau: float) -> float:
    tau = float(tau)
    if not (tau > 0 and np.isfinite(tau)):
        raise ValueError(f"temperature must be positive, got {tau}")
    return tau


def _logsumexp_rows(x: np.ndarray) -> np.ndarray:
    # x may hold -inf outside a mask; every row has at least one finite entry
    m = np.max(x, axis=1, keepdims=True)
    return m[:, 0] + np.log(np.sum(np.exp(x - m), axis=1))


def _directional(logits: np.ndarray, mask: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean over rows of ``lse(all) - lse(positives)`` and its gradient w.r.t. logits."""
    n = logits.shape[0]
    lse_all = _logsumexp_rows(logits)
    masked = np.where(mask, logits, -np.inf)
    lse_pos = _logsumexp_rows(masked)
    value = float(np.mean(lse_all - lse_pos))
    p_all = np.exp(logits - lse_all[:, None])
    p_pos = np.where(mask, np.exp(masked - lse_pos[:, None]), 0.0)
    return value, (p_all - p_pos) / n


def _masked_nce(video, text, mask: np.ndarray, tau: float) -> LossResult:
    v, t = _check_pair(video, text)
    tau = _check_tau(tau)
    logits = (v @ t.T) / tau
    v2t, g_rows = _directional(logits, mask)
    t2v, g_cols = _directional(logits.T, mask)
    g = g_rows + g_cols.T
    return LossResult(
        value=v2t + t2v,
        grad_video=(g @ t) / tau,
        grad_text=(g.T @ v) / tau,
        v2t=v2t,
        t2v=t2v,
    )


def info_nce(video, text, tau: float = DEFAULT_TAU) -> LossResult:
    """Symmetric InfoNCE where only the matched row is positive."""
    v, _ = _check_pair(video, text)
    return _masked_nce(video, text, np.eye(v.shape[0], dtype=bool), tau)


def positive_mask(positives, n: int) -> np.ndarray:
    """Boolean ``n x n`` mask from index sets (or an existing mask), diagonal forced on."""
    if isinstance(positives, np.ndarray) and positives.ndim == 2:
        if positives.shape != (n, n):
            raise ValueError(f"positive mask has shape {positives.shape}, expected {(n, n)}")
        mask = positives.astype(bool, copy=True)
    else:
        positives = list(positives)
        if len(positives) != n:
            raise ValueError(f"{len(positives)} positive sets for {n} anchors")
        mask = np.zeros((n, n), dtype=bool)
        for i, ks in enumerate(positives):
            mask[i, list(ks)] = True
    np.fill_diagonal(mask, True)
    return mask


def ego_nce(video, text, positives, tau: float = DEFAULT_TAU) -> LossResult:
    """Symmetric EgoNCE over all rows given.

    For an augmented batch pass the stacked matrices (base rows first, then
    their negatives); the denominator then spans the whole augmented batch and
    every row, negatives included, is an anchor. ``positives`` is either a
    sequence of index sets or a boolean mask; each row is always its own
    positive.
    """
    v, _ = _check_pair(video, text)
    return _masked_nce(video, text, positive_mask(positives, v.shape[0]), tau)


def build_positive_sets(tags: Sequence, mode: str = "noun_verb") -> list[frozenset[int]]:
    """Rows sharing tags with row ``i`` (``i`` itself always included).

    ``mode`` selects the sharing rule: ``"noun_verb"`` needs at least one
    common noun group and one common verb group; ``"noun"`` or ``"verb"`` use
    one part of speech only.
    """
    from ..taxonomy import tag_matrices

    n = len(tags)
    if n == 0:
        return []
    nouns, verbs = tag_matrices(tags)
    shared_n = nouns @ nouns.T
    shared_v = verbs @ verbs.T
    if mode == "noun_verb":
        pos = (shared_n * shared_v) > 0
    elif mode == "noun":
        pos = shared_n > 0
    elif mode == "verb":
        pos = shared_v > 0
    else:
        raise ValueError(f"unknown positive mode {mode!r}; expected noun_verb, noun or verb")
    np.fill_diagonal(pos, True)
    return [frozenset(np.flatnonzero(row).tolist()) for row in pos]


def mimm_loss(
    sims,
    correlations,
    margin: float = 0.2,
    threshold: float = 0.1,
) -> LossResult:
    """Multi-instance max-margin loss on a square similarity matrix.

    ``sims[i, j]`` is the similarity of video ``i`` and text ``j``. For anchor
    ``i`` the positives are ``{j : c_ij > threshold}`` and the negatives are
    the rest of the batch; each (i, j, k) triple contributes
    ``max(0, margin + s_ik - s_ij)`` for video anchors and the transposed term
    for text anchors. The sum (not mean) is returned with ``grad_sims``.
    """
    s = np.asarray(sims, dtype=np.float64)
    c = np.asarray(correlations, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError(f"similarity matrix must be square, got shape {s.shape}")
    if c.shape != s.shape:
        raise ValueError(f"correlation shape {c.shape} does not match similarities {s.shape}")
    if not np.all(np.isfinite(s)):
        raise ValueError("non-finite similarities")
    pos = c > threshold
    grad = np.zeros_like(s)
    totals = []
    for sm, flip in ((s, False), (s.T, True)):
        total = 0.0
        g = np.zeros_like(s)
        for i in range(s.shape[0]):
            p = pos[i]
            if not p.any() or p.all():
                continue
            row = sm[i]
            # hinge[j, k] for positive j, negative k
            h = margin + row[~p][None, :] - row[p][:, None]
            active = h > 0
            total += float(np.sum(np.where(active, h, 0.0)))
            g[i, ~p] += active.sum(axis=0)
            g[i, p] -= active.sum(axis=1)
        totals.append(total)
        grad += g.T if flip else g
    return LossResult(value=totals[0] + totals[1], v2t=totals[0], t2v=totals[1], grad_sims=grad)


def mimm_loss_embeddings(
    video, text, correlations, margin: float = 0.2, threshold: float = 0.1
) -> LossResult:
    """:func:`mimm_loss` on ``V T^T`` with gradients for both embedding matrices."""
    v, t = _check_pair(video, text)
    res = mimm_loss(v @ t.T, correlations, margin, threshold)
    res.grad_video = res.grad_sims @ t
    res.grad_text = res.grad_sims.T @ v
    return res
