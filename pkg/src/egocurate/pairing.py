"""Turn timestamped narrations into clip-text pairs.

Each narration carries a single timestamp, so the clip boundaries have to be
invented. Six strategies are supported; ``Strategy.F`` is the contextual
variable-length window::

    [t_i - beta / (2 alpha), t_i + beta / (2 alpha)]

where ``beta`` is the mean gap between consecutive narrations of the stream
and ``alpha`` is a corpus-wide scale (4.9 s by default).
"""

import enum
import math
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Optional, Sequence

from .ingest import NarrationRecord

if TYPE_CHECKING:
    from .taxonomy import TagVector

DEFAULT_ALPHA = 4.9
MIN_BETA = 0.1  # floor for degenerate streams whose timestamps all coincide
SEGMENT_LEN = 600.0


class Strategy(str, enum.Enum):
    A = "a"  # [t, t + alpha]
    B = "b"  # [t - alpha/2, t + alpha/2]
    C = "c"  # [t_prev, t_next]
    D = "d"  # [t - beta/2, t + beta/2]
    E = "e"  # [t - beta/4, t + beta/4]
    F = "f"  # [t - beta/(2 alpha), t + beta/(2 alpha)]

    @classmethod
    def parse(cls, value) -> "Strategy":
        if isinstance(value, Strategy):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"unknown pairing strategy {value!r}; expected one of a-f") from None


class BetaUndefinedError(ValueError):
    pass


@dataclass(frozen=True)
class PairingConfig:
    strategy: Strategy = Strategy.F
    alpha: float = DEFAULT_ALPHA
    clamp_to_video: bool = True

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy.parse(self.strategy))
        if not (self.alpha > 0):
            raise ValueError(f"alpha must be positive, got {self.alpha}")


@dataclass(frozen=True)
class ClipTextPair:
    video_uid: str
    t_start: float
    t_end: float
    text: str
    narration_timestamp: float
    beta_video: float
    strategy: Strategy = Strategy.F
    # filled in by the tagging stage
    tags: Optional["TagVector"] = None

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    def to_dict(self) -> dict:
        d = {
            "video_uid": self.video_uid,
            "t_start": self.t_start,
            "t_end": self.t_end,
            "narration_timestamp": self.narration_timestamp,
            "beta": self.beta_video,
            "strategy": self.strategy.value,
            "text": self.text,
        }
        if self.tags is not None:
            d.update(self.tags.to_dict())
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ClipTextPair":
        tags = None
        if "noun_ids" in d:
            from .taxonomy import TagVector

            tags = TagVector.from_dict(d)
        return cls(
            video_uid=str(d["video_uid"]),
            t_start=float(d["t_start"]),
            t_end=float(d["t_end"]),
            text=d["text"],
            narration_timestamp=float(d["narration_timestamp"]),
            beta_video=float(d["beta"]),
            strategy=Strategy.parse(d.get("strategy", "f")),
            tags=tags,
        )

    def with_tags(self, tags) -> "ClipTextPair":
        return replace(self, tags=tags)


@dataclass(frozen=True)
class SegmentLocator:
    segment_index: int
    local_start: float
    local_end: float
    segment_len: float = SEGMENT_LEN


def compute_beta(timestamps: Sequence[float]) -> float:
    """Mean gap between consecutive timestamps of one narration stream."""
    if len(timestamps) < 2:
        raise BetaUndefinedError(f"beta undefined for a stream of {len(timestamps)} narration(s)")
    gaps = [b - a for a, b in zip(timestamps[:-1], timestamps[1:])]
    if any(g < 0 for g in gaps):
        raise ValueError("timestamps must be non-decreasing")
    # telescoping sum: exact for uniform streams up to one rounding
    return (timestamps[-1] - timestamps[0]) / len(gaps)


def stream_beta(timestamps: Sequence[float], alpha: float = DEFAULT_ALPHA) -> float:
    """``compute_beta`` with the fallbacks used for pairing.

    A single-narration stream borrows ``alpha`` (a ``beta/alpha`` = 1 s clip),
    and a stream of coincident timestamps is floored at ``MIN_BETA``.
    """
    try:
        beta = compute_beta(timestamps)
    except BetaUndefinedError:
        return alpha
    return max(beta, MIN_BETA)


def raw_interval(
    strategy: Strategy,
    times: Sequence[float],
    i: int,
    beta: float,
    alpha: float,
) -> tuple[float, float]:
    """Unclamped interval for narration ``i`` of a time-sorted stream."""
    t = times[i]
    if strategy is Strategy.A:
        return t, t + alpha
    if strategy is Strategy.B:
        return t - alpha / 2, t + alpha / 2
    if strategy is Strategy.C:
        lo = times[i - 1] if i > 0 else t
        hi = times[i + 1] if i + 1 < len(times) else t
        if hi <= lo:
            return t - MIN_BETA / 2, t + MIN_BETA / 2
        return lo, hi
    if strategy is Strategy.D:
        return t - beta / 2, t + beta / 2
    if strategy is Strategy.E:
        return t - beta / 4, t + beta / 4
    if strategy is Strategy.F:
        half = beta / (2 * alpha)
        return t - half, t + half
    raise ValueError(f"unknown pairing strategy {strategy!r}")


def clamp_interval(start: float, end: float, duration: float | None) -> tuple[float, float]:
    """Clip ``[start, end]`` to ``[0, duration]`` keeping it non-empty."""
    upper = math.inf if duration is None else duration
    s, e = max(0.0, start), min(upper, end)
    if e <= s:
        # the window fell entirely outside the video; keep a MIN_BETA sliver at the edge
        if s >= upper:
            s, e = max(0.0, upper - MIN_BETA), upper
        else:
            e = min(upper, s + MIN_BETA)
    return s, e


def pair_clips(
    records: Sequence[NarrationRecord],
    config: PairingConfig = PairingConfig(),
    duration: float | None = None,
) -> list[ClipTextPair]:
    """Pair every narration of one time-sorted stream with a clip.

    ``duration`` bounds the clamp; when it is ``None`` only the lower bound at
    zero is enforced.
    """
    if not records:
        return []
    times = [r.timestamp_sec for r in records]
    if any(b < a for a, b in zip(times[:-1], times[1:])):
        raise ValueError("records must be sorted by timestamp")
    strategy = Strategy.parse(config.strategy)
    beta = stream_beta(times, config.alpha)
    out = []
    for i, r in enumerate(records):
        s, e = raw_interval(strategy, times, i, beta, config.alpha)
        if config.clamp_to_video:
            s, e = clamp_interval(s, e, duration)
        out.append(
            ClipTextPair(
                video_uid=r.video_uid,
                t_start=s,
                t_end=e,
                text=r.text,
                narration_timestamp=r.timestamp_sec,
                beta_video=beta,
                strategy=strategy,
            )
        )
    return out


def locate_segment(pair: ClipTextPair, segment_len: float = SEGMENT_LEN) -> SegmentLocator:
    """Find the fixed-length storage segment holding a clip.

    The segment is chosen by the clip midpoint; a clip straddling a boundary is
    clamped into that segment.
    """
    mid = 0.5 * (pair.t_start + pair.t_end)
    idx = int(math.floor(mid / segment_len))
    offset = idx * segment_len
    lo = min(max(pair.t_start - offset, 0.0), segment_len)
    hi = min(max(pair.t_end - offset, 0.0), segment_len)
    return SegmentLocator(idx, lo, hi, segment_len)
