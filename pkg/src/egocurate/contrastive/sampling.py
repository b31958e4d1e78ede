"""Scene-aware negative sampling and batch assembly.

Each base sample ``i`` gets a hard negative ``i'``: another narration of the
same video, by default one within a minute of it. Three negative variants are
available:

``"random"``   any other pair of the corpus
``"video"``    any other pair of the same video
``"window"``   another pair of the same video within ``window_sec``

Degenerate inputs fall back along window -> nearest in video -> corpus random,
and the fallback taken is reported per anchor.
"""

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .losses import build_positive_sets

DEFAULT_WINDOW_SEC = 60.0


class NegativeVariant(str, enum.Enum):
    RANDOM = "random"
    VIDEO = "video"
    WINDOW = "window"

    @classmethod
    def parse(cls, value) -> "NegativeVariant":
        aliases = {"d": cls.RANDOM, "e": cls.VIDEO, "f": cls.WINDOW}
        if isinstance(value, NegativeVariant):
            return value
        v = str(value).strip().lower()
        if v in aliases:
            return aliases[v]
        try:
            return cls(v)
        except ValueError:
            raise ValueError(f"unknown negative variant {value!r}") from None


@dataclass
class SceneNegatives:
    indices: np.ndarray
    # None when the variant's rule applied; otherwise "nearest" or "corpus_random"
    fallback: list


def as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _video_index(pairs) -> tuple[dict, np.ndarray]:
    by_video: dict[str, list[int]] = {}
    for i, p in enumerate(pairs):
        by_video.setdefault(p.video_uid, []).append(i)
    times = np.array([p.narration_timestamp for p in pairs], dtype=np.float64)
    return {k: np.array(v, dtype=np.int64) for k, v in by_video.items()}, times


def _corpus_random(rng, n: int, exclude: int) -> int:
    if n < 2:
        raise ValueError("corpus needs at least two pairs to draw a negative")
    j = int(rng.integers(n - 1))
    return j + (j >= exclude)


def sample_scene_negatives(
    pairs: Sequence,
    anchors: Sequence[int],
    variant="window",
    window_sec: float = DEFAULT_WINDOW_SEC,
    rng=None,
) -> SceneNegatives:
    """Draw one negative corpus index per anchor index."""
    variant = NegativeVariant.parse(variant)
    rng = as_rng(rng)
    n = len(pairs)
    by_video, times = _video_index(pairs)
    out = np.empty(len(anchors), dtype=np.int64)
    fallback = []
    for a, i in enumerate(anchors):
        i = int(i)
        if variant is NegativeVariant.RANDOM:
            out[a] = _corpus_random(rng, n, i)
            fallback.append(None)
            continue
        same = by_video[pairs[i].video_uid]
        others = same[same != i]
        if others.size == 0:
            out[a] = _corpus_random(rng, n, i)
            fallback.append("corpus_random")
            continue
        if variant is NegativeVariant.VIDEO:
            out[a] = others[rng.integers(others.size)]
            fallback.append(None)
            continue
        gaps = np.abs(times[others] - times[i])
        near = others[gaps <= window_sec]
        if near.size:
            out[a] = near[rng.integers(near.size)]
            fallback.append(None)
        else:
            # argmin returns the first minimum, i.e. the lowest corpus index among ties
            out[a] = others[int(np.argmin(gaps))]
            fallback.append("nearest")
    return SceneNegatives(out, fallback)


@dataclass
class BatchDraw:
    anchors: np.ndarray
    negatives: np.ndarray | None
    positives: list
    fallback: list

    @property
    def rows(self) -> np.ndarray:
        """Corpus indices of every row of the (possibly augmented) batch."""
        if self.negatives is None:
            return self.anchors
        return np.concatenate([self.anchors, self.negatives])

    def to_dict(self) -> dict:
        return {
            "anchors": self.anchors.tolist(),
            "negatives": None if self.negatives is None else self.negatives.tolist(),
            "positives": [sorted(p) for p in self.positives],
            "fallback": self.fallback,
        }


def sample_batch(
    pairs: Sequence,
    batch_size: int,
    rng=None,
    negatives="window",
    positives: str | None = "noun_verb",
    window_sec: float = DEFAULT_WINDOW_SEC,
) -> BatchDraw:
    """Draw a batch of anchors, optionally augment it and build positive sets.

    ``negatives=None`` disables augmentation; ``positives=None`` keeps only the
    matched row positive (plain InfoNCE). Positive sets index rows of the
    augmented batch, so they may point at negatives too.
    """
    rng = as_rng(rng)
    n = len(pairs)
    if batch_size < 1 or batch_size > n:
        raise ValueError(f"batch size {batch_size} out of range for a corpus of {n}")
    anchors = np.sort(rng.choice(n, size=batch_size, replace=False))
    neg = None
    fallback = [None] * batch_size
    if negatives is not None:
        drawn = sample_scene_negatives(pairs, anchors, negatives, window_sec, rng)
        neg, fallback = drawn.indices, drawn.fallback
    rows = anchors if neg is None else np.concatenate([anchors, neg])
    if positives is None:
        pos = [frozenset([r]) for r in range(len(rows))]
    else:
        pos = build_positive_sets([pairs[r].tags for r in rows], mode=positives)
    return BatchDraw(anchors, neg, pos, fallback)
