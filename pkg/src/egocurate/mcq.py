"""Five-way multiple-choice questions built from tagged clip-text pairs.

Two settings:

* ``inter``: the answer clip plus four distractors, each from a different video.
* ``intra``: five contiguous clips of one video; the query is one of them.

Within a question no two options may share a dedup tag, the (first verb,
first noun) of the narration.
"""

import enum
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

N_OPTIONS = 5


class Setting(str, enum.Enum):
    INTER = "inter"
    INTRA = "intra"


@dataclass(frozen=True)
class McqOption:
    video_uid: str
    t_start: float
    t_end: float
    text: str

    def to_dict(self) -> dict:
        return {"video_uid": self.video_uid, "t_start": self.t_start, "t_end": self.t_end, "text": self.text}


@dataclass(frozen=True)
class McqQuestion:
    query_text: str
    options: tuple[McqOption, ...]
    answer_index: int
    setting: Setting
    # corpus indices of the options; absent for questions read back from disk
    option_ids: tuple[int, ...] | None = None

    def to_dict(self) -> dict:
        return {
            "query": self.query_text,
            "options": [o.to_dict() for o in self.options],
            "answer": self.answer_index,
            "setting": self.setting.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "McqQuestion":
        opts = tuple(
            McqOption(o["video_uid"], float(o["t_start"]), float(o["t_end"]), o["text"]) for o in d["options"]
        )
        return cls(d["query"], opts, int(d["answer"]), Setting(d["setting"]))


@dataclass
class McqBuildResult:
    questions: list[McqQuestion]
    warnings: list[str] = field(default_factory=list)


def dedup_tag(pair) -> tuple:
    if pair.tags is None:
        raise ValueError(f"pair of video {pair.video_uid!r} has no tags; run the tagging stage first")
    return pair.tags.dedup_tag


def _option(pair) -> McqOption:
    return McqOption(pair.video_uid, pair.t_start, pair.t_end, pair.text)


def video_order(pairs: Sequence) -> dict[str, list[int]]:
    """Corpus indices per video in narration order (ties by corpus index)."""
    by_video: dict[str, list[int]] = {}
    for i, p in enumerate(pairs):
        by_video.setdefault(p.video_uid, []).append(i)
    return {
        v: sorted(ix, key=lambda i: (pairs[i].narration_timestamp, i)) for v, ix in sorted(by_video.items())
    }


def select_annotator(streams: dict, policy: str = "random", rng=None) -> dict:
    """Keep one annotator stream per video.

    ``streams`` maps ``(video_uid, annotator_id)`` to records. ``policy`` is
    ``"random"`` (seeded), ``"first"`` (lowest annotator id) or ``"all"``.
    """
    if policy == "all":
        return dict(streams)
    by_video: dict[str, list] = {}
    for key in sorted(streams):
        by_video.setdefault(key[0], []).append(key)
    rng = np.random.default_rng(rng)
    keep = {}
    for vid in sorted(by_video):
        keys = by_video[vid]
        if policy == "first":
            k = keys[0]
        elif policy == "random":
            k = keys[int(rng.integers(len(keys)))]
        else:
            raise ValueError(f"unknown annotator policy {policy!r}")
        keep[k] = streams[k]
    return keep


def _make_question(pairs, ids: list[int], answer: int, setting: Setting) -> McqQuestion:
    return McqQuestion(
        query_text=pairs[ids[answer]].text,
        options=tuple(_option(pairs[i]) for i in ids),
        answer_index=answer,
        setting=setting,
        option_ids=tuple(int(i) for i in ids),
    )


def _inter(pairs, order, count, rng, max_resample, max_attempts, notes):
    videos = list(order)
    if len(videos) < N_OPTIONS:
        notes.append(f"inter setting needs {N_OPTIONS} videos, corpus has {len(videos)}")
        return []
    out = []
    attempts = 0
    while len(out) < count and attempts < max_attempts:
        attempts += 1
        anchor = int(rng.integers(len(pairs)))
        chosen = [anchor]
        used = {pairs[anchor].video_uid}
        tags = {dedup_tag(pairs[anchor])}
        for _ in range(N_OPTIONS - 1):
            free = [v for v in videos if v not in used]
            for _ in range(max_resample):
                vid = free[int(rng.integers(len(free)))]
                cand = order[vid][int(rng.integers(len(order[vid])))]
                tag = dedup_tag(pairs[cand])
                if tag not in tags:
                    chosen.append(cand)
                    used.add(vid)
                    tags.add(tag)
                    break
            else:
                break
        if len(chosen) < N_OPTIONS:
            continue
        perm = rng.permutation(N_OPTIONS)
        ids = [chosen[p] for p in perm]
        out.append(_make_question(pairs, ids, int(np.flatnonzero(perm == 0)[0]), Setting.INTER))
    return out


def _intra(pairs, order, count, rng, max_resample, max_attempts, notes):
    eligible = [v for v, ix in order.items() if len(ix) >= N_OPTIONS]
    skipped = len(order) - len(eligible)
    if skipped:
        notes.append(f"{skipped} video(s) with fewer than {N_OPTIONS} narrations skipped for intra questions")
    if not eligible:
        notes.append("no video has enough narrations for the intra setting")
        return []
    out = []
    attempts = 0
    while len(out) < count and attempts < max_attempts:
        attempts += 1
        ix = order[eligible[int(rng.integers(len(eligible)))]]
        n_windows = len(ix) - N_OPTIONS + 1
        start = int(rng.integers(n_windows))
        window = None
        # slide forward (wrapping) until the five tags are pairwise distinct
        for step in range(min(max_resample, n_windows)):
            cand = ix[(start + step) % n_windows :][:N_OPTIONS]
            if len({dedup_tag(pairs[i]) for i in cand}) == N_OPTIONS:
                window = cand
                break
        if window is None:
            continue
        answer = int(rng.integers(N_OPTIONS))
        out.append(_make_question(pairs, list(window), answer, Setting.INTRA))
    return out


def build_mcq(
    pairs: Sequence,
    setting,
    count: int,
    seed=0,
    max_resample: int = 50,
    max_attempts: int | None = None,
) -> McqBuildResult:
    """Generate up to ``count`` questions; the result is a pure function of the inputs.

    ``max_resample`` bounds redraws of a single distractor (inter) or window
    slides (intra). If the corpus cannot supply ``count`` valid questions
    within ``max_attempts`` question attempts, the questions found so far are
    returned along with a warning.
    """
    setting = Setting(setting)
    rng = np.random.default_rng(seed)
    if max_attempts is None:
        max_attempts = max(10 * count, 100)
    order = video_order(pairs)
    notes: list[str] = []
    build = _inter if setting is Setting.INTER else _intra
    qs = build(pairs, order, count, rng, max_resample, max_attempts, notes) if pairs else []
    if len(qs) < count:
        msg = f"built {len(qs)} of {count} requested {setting.value} questions"
        notes.append(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return McqBuildResult(qs, notes)


def validate_mcq(questions: Sequence[McqQuestion], pairs: Sequence) -> list[str]:
    """Return a description of every invariant violated (empty when all hold)."""
    problems = []
    order = video_order(pairs)
    position = {i: (v, k) for v, ix in order.items() for k, i in enumerate(ix)}
    for qn, q in enumerate(questions):
        where = f"question {qn}"
        if len(q.options) != N_OPTIONS:
            problems.append(f"{where}: {len(q.options)} options")
            continue
        if not 0 <= q.answer_index < N_OPTIONS:
            problems.append(f"{where}: answer index {q.answer_index} out of range")
            continue
        if q.options[q.answer_index].text != q.query_text:
            problems.append(f"{where}: answer option does not carry the query narration")
        vids = [o.video_uid for o in q.options]
        if q.setting is Setting.INTER and len(set(vids)) != N_OPTIONS:
            problems.append(f"{where}: inter options share a video")
        if q.option_ids is None:
            problems.append(f"{where}: no corpus ids to validate against")
            continue
        if any(_option(pairs[i]) != o for i, o in zip(q.option_ids, q.options)):
            problems.append(f"{where}: options do not match corpus entries")
        tags = [dedup_tag(pairs[i]) for i in q.option_ids]
        if len(set(tags)) != N_OPTIONS:
            problems.append(f"{where}: dedup tag collision {tags}")
        if q.setting is Setting.INTRA:
            if len(set(vids)) != 1:
                problems.append(f"{where}: intra options span several videos")
            else:
                ks = sorted(position[i][1] for i in q.option_ids)
                if ks != list(range(ks[0], ks[0] + N_OPTIONS)):
                    problems.append(f"{where}: intra options are not contiguous")
    return problems


def predict(scores) -> int:
    s = np.asarray(scores, dtype=np.float64)
    if s.shape != (N_OPTIONS,):
        raise ValueError(f"expected {N_OPTIONS} option scores, got shape {s.shape}")
    # np.argmax returns the first maximum: lowest index wins ties
    return int(np.argmax(s))


def score_mcq(questions: Sequence[McqQuestion], scores: Sequence[Sequence[float]]) -> float:
    """Fraction of questions whose highest-scored option is the answer."""
    if len(questions) != len(scores):
        raise ValueError(f"{len(scores)} score rows for {len(questions)} questions")
    if not questions:
        raise ValueError("no questions to score")
    hits = [predict(s) == q.answer_index for q, s in zip(questions, scores)]
    return float(np.mean(hits))
