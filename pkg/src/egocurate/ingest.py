"""Narration parsing and the noise filters applied before pairing.

Narrations arrive as line-delimited JSON (or CSV with the same header)::

    {"video_uid": "a", "annotator_id": "1", "timestamp_sec": 3.70, "text": "#C C puts the scrapper down."}

Parsing never aborts on a bad line; the line number and reason are collected in
``ParseResult.errors`` so the caller can report them.
"""

import csv
import io
import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

UNSURE_TAG = "#unsure"
WEARER_TAGS = ("#c", "#o")
MIN_CONTENT_WORDS = 3
MAX_ASPECT_RATIO = 2.0

# accepted spellings for each field
_ALIASES = {
    "video_uid": ("video_uid", "vid", "video"),
    "annotator_id": ("annotator_id", "annotator", "ann"),
    "timestamp_sec": ("timestamp_sec", "t", "timestamp"),
    "text": ("text", "narration"),
}
DEFAULT_ANNOTATOR = "0"

_WORD = re.compile(r"\w")


@dataclass(frozen=True)
class NarrationRecord:
    video_uid: str
    annotator_id: str
    timestamp_sec: float
    text: str

    def to_dict(self) -> dict:
        return {
            "video_uid": self.video_uid,
            "annotator_id": self.annotator_id,
            "timestamp_sec": self.timestamp_sec,
            "text": self.text,
        }


@dataclass(frozen=True)
class VideoMeta:
    video_uid: str
    duration_sec: float
    width_px: int
    height_px: int
    is_stereo: bool = False
    # set by filter_videos for stereo sources: downstream readers keep the left half
    halve_width: bool = False

    def __post_init__(self):
        if not (self.duration_sec > 0):
            raise ValueError(f"video {self.video_uid!r}: duration_sec must be > 0, got {self.duration_sec}")
        if self.width_px <= 0 or self.height_px <= 0:
            raise ValueError(
                f"video {self.video_uid!r}: zero or negative frame size {self.width_px}x{self.height_px}"
            )

    @property
    def effective_width(self) -> int:
        return self.width_px // 2 if self.is_stereo else self.width_px

    @property
    def aspect_ratio(self) -> float:
        return self.effective_width / self.height_px

    @classmethod
    def from_dict(cls, d: dict) -> "VideoMeta":
        return cls(
            video_uid=str(d["video_uid"]),
            duration_sec=float(d["duration_sec"]),
            width_px=int(d["width_px"]),
            height_px=int(d["height_px"]),
            is_stereo=_as_bool(d.get("is_stereo", False)),
            halve_width=_as_bool(d.get("halve_width", False)),
        )

    def to_dict(self) -> dict:
        return {
            "video_uid": self.video_uid,
            "duration_sec": self.duration_sec,
            "width_px": self.width_px,
            "height_px": self.height_px,
            "is_stereo": self.is_stereo,
            "halve_width": self.halve_width,
        }


@dataclass(frozen=True)
class RecordError:
    line_no: int
    reason: str
    raw: str = ""

    def to_dict(self) -> dict:
        return {"line_no": self.line_no, "reason": self.reason, "raw": self.raw}


@dataclass
class FilterReport:
    """Per-rule drop counts for one category ("videos" or "narrations")."""

    category: str
    input_total: int = 0
    retained: int = 0
    dropped: dict[str, int] = field(default_factory=dict)
    flagged: dict[str, int] = field(default_factory=dict)

    @property
    def dropped_total(self) -> int:
        return sum(self.dropped.values())

    def reconciles(self) -> bool:
        return self.retained + self.dropped_total == self.input_total

    def to_dict(self) -> dict:
        return {
            "category": self.category,
            "input_total": self.input_total,
            "retained": self.retained,
            "dropped": dict(sorted(self.dropped.items())),
            "flagged": dict(sorted(self.flagged.items())),
        }


@dataclass
class ParseResult:
    groups: dict[tuple[str, str], list[NarrationRecord]]
    errors: list[RecordError]

    def records(self) -> list[NarrationRecord]:
        return [r for key in self.groups for r in self.groups[key]]

    def __len__(self) -> int:
        return sum(len(g) for g in self.groups.values())


def _as_bool(v) -> bool:
    if isinstance(v, str):
        return v.strip().lower() in ("1", "true", "yes", "y")
    return bool(v)


def _pick(row: dict, name: str):
    for key in _ALIASES[name]:
        if key in row and row[key] not in (None, ""):
            return row[key]
    return None


def _record_from_row(row: dict) -> NarrationRecord:
    vid = _pick(row, "video_uid")
    ts = _pick(row, "timestamp_sec")
    text = _pick(row, "text")
    if vid is None:
        raise ValueError("missing video_uid")
    if ts is None:
        raise ValueError("missing timestamp")
    if text is None or not str(text).strip():
        raise ValueError("empty text")
    try:
        ts = float(ts)
    except (TypeError, ValueError):
        raise ValueError(f"timestamp is not a number: {ts!r}") from None
    if not math.isfinite(ts):
        raise ValueError(f"non-finite timestamp {ts!r}")
    if ts < 0:
        raise ValueError(f"negative timestamp {ts}")
    ann = _pick(row, "annotator_id")
    return NarrationRecord(
        video_uid=str(vid),
        annotator_id=DEFAULT_ANNOTATOR if ann is None else str(ann),
        timestamp_sec=ts,
        text=str(text).strip(),
    )


def _rows(lines: Iterable[str], fmt: str):
    """Yield (line_no, row-or-None, raw, error) tuples."""
    if fmt == "jsonl":
        for no, line in enumerate(lines, start=1):
            raw = line.rstrip("\n")
            if not raw.strip():
                continue
            try:
                row = json.loads(raw)
            except json.JSONDecodeError as e:
                yield no, None, raw, f"invalid JSON: {e.msg}"
                continue
            if not isinstance(row, dict):
                yield no, None, raw, "record is not a JSON object"
                continue
            yield no, row, raw, None
    elif fmt == "csv":
        reader = csv.DictReader(io.StringIO("".join(lines)))
        for row in reader:
            raw = ",".join("" if v is None else str(v) for v in row.values())
            if None in row:
                yield reader.line_num, None, raw, "too many columns"
                continue
            yield reader.line_num, row, raw, None
    else:
        raise ValueError(f"unknown narration format {fmt!r}; expected 'jsonl' or 'csv'")


def parse_narrations(lines: Iterable[str], fmt: str = "jsonl") -> ParseResult:
    """Parse narration lines into per-(video, annotator) streams sorted by time.

    Bad lines (malformed JSON, missing fields, negative timestamps) are reported
    in ``errors`` with their 1-based line number and skipped. Equal timestamps
    keep their input order.
    """
    groups: dict[tuple[str, str], list[NarrationRecord]] = {}
    errors: list[RecordError] = []
    for no, row, raw, err in _rows(lines, fmt):
        if err is None:
            try:
                rec = _record_from_row(row)
            except ValueError as e:
                err = str(e)
        if err is not None:
            errors.append(RecordError(no, err, raw))
            continue
        groups.setdefault((rec.video_uid, rec.annotator_id), []).append(rec)
    out = {}
    for key in sorted(groups):
        # sorted() is stable, so ties keep input order
        out[key] = sorted(groups[key], key=lambda r: r.timestamp_sec)
    return ParseResult(out, errors)


def read_narrations(path) -> ParseResult:
    fmt = "csv" if str(path).lower().endswith(".csv") else "jsonl"
    with open(path, encoding="utf-8", newline="") as f:
        return parse_narrations(f.readlines(), fmt=fmt)


def read_video_meta(path) -> list[VideoMeta]:
    """Read video metadata from .jsonl or .csv. Invalid sizes raise ValueError."""
    with open(path, encoding="utf-8", newline="") as f:
        if str(path).lower().endswith(".csv"):
            rows = list(csv.DictReader(f))
        else:
            rows = [json.loads(line) for line in f if line.strip()]
    return [VideoMeta.from_dict(r) for r in rows]


def filter_videos(
    metas: Sequence[VideoMeta], exclude: Iterable[str] = ()
) -> tuple[list[VideoMeta], FilterReport]:
    """Drop over-wide videos and mark stereo ones for half-width reading.

    The aspect-ratio test is applied to the effective (halved) width of stereo
    videos, since those are kept at half size before any other check.
    ``exclude`` is an optional set of video ids to drop outright, e.g. the
    validation/test splits of a downstream benchmark.
    """
    exclude = set(exclude)
    report = FilterReport("videos", input_total=len(metas))
    dropped: Counter = Counter()
    kept = []
    for m in metas:
        if m.video_uid in exclude:
            dropped["excluded"] += 1
            continue
        if m.is_stereo:
            m = replace(m, halve_width=True)
            report.flagged["stereo_halved"] = report.flagged.get("stereo_halved", 0) + 1
        if m.aspect_ratio > MAX_ASPECT_RATIO:
            dropped["aspect_ratio"] += 1
            continue
        kept.append(m)
    report.retained = len(kept)
    report.dropped = dict(dropped)
    return kept, report


def content_words(text: str) -> list[str]:
    """Tokens of a narration that count towards the minimum-length rule.

    A leading ``#C``/``#O`` tag and the subject token right after it are not
    content; tokens made only of punctuation are ignored.
    """
    tokens = text.split()
    if tokens and tokens[0].lower() in WEARER_TAGS:
        tokens = tokens[2:]
    return [t for t in tokens if _WORD.search(t)]


def is_unsure(text: str) -> bool:
    return UNSURE_TAG in text.lower()


def filter_narrations(
    records: Sequence[NarrationRecord],
    videos: dict[str, VideoMeta] | None = None,
) -> tuple[list[NarrationRecord], FilterReport]:
    """Remove unsure and too-short narrations, preserving order.

    When ``videos`` is given, narrations of videos that are not in it and
    narrations stamped after the end of their video are dropped as well.
    Each dropped record is charged to the first rule it fails.
    """
    report = FilterReport("narrations", input_total=len(records))
    dropped: Counter = Counter()
    kept = []
    for r in records:
        if videos is not None:
            meta = videos.get(r.video_uid)
            if meta is None:
                dropped["video_dropped"] += 1
                continue
            if r.timestamp_sec > meta.duration_sec:
                dropped["beyond_duration"] += 1
                continue
        if is_unsure(r.text):
            dropped["unsure"] += 1
            continue
        if len(content_words(r.text)) < MIN_CONTENT_WORDS:
            dropped["too_short"] += 1
            continue
        kept.append(r)
    report.retained = len(kept)
    report.dropped = dict(dropped)
    return kept, report


def group_streams(records: Iterable[NarrationRecord]) -> dict[tuple[str, str], list[NarrationRecord]]:
    """Group records by (video_uid, annotator_id) in key order, time-sorted within a stream."""
    groups: dict[tuple[str, str], list[NarrationRecord]] = {}
    for r in records:
        groups.setdefault((r.video_uid, r.annotator_id), []).append(r)
    return {k: sorted(groups[k], key=lambda r: r.timestamp_sec) for k in sorted(groups)}
