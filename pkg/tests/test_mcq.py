import json

import numpy as np
import pytest

from egocurate.ingest import NarrationRecord
from egocurate.mcq import (
    McqQuestion,
    Setting,
    build_mcq,
    predict,
    score_mcq,
    select_annotator,
    validate_mcq,
)

from corpora import synthetic_corpus, tagged

CORPUS = synthetic_corpus(seed=1, n_videos=12, per_video=30)


@pytest.mark.parametrize("setting", ["inter", "intra"])
def test_questions_valid_and_deterministic(setting):
    res = build_mcq(CORPUS, setting, 200, seed=7)
    assert len(res.questions) == 200 and res.warnings == []
    assert validate_mcq(res.questions, CORPUS) == []
    again = build_mcq(CORPUS, setting, 200, seed=7)
    assert [q.to_dict() for q in again.questions] == [q.to_dict() for q in res.questions]
    other = build_mcq(CORPUS, setting, 200, seed=8)
    assert [q.to_dict() for q in other.questions] != [q.to_dict() for q in res.questions]


@pytest.mark.parametrize("setting", ["inter", "intra"])
def test_answer_positions_spread(setting):
    qs = build_mcq(CORPUS, setting, 500, seed=3).questions
    counts = np.bincount([q.answer_index for q in qs], minlength=5)
    assert counts.min() > 60


def test_unique_tags_always_work():
    verbs = ["take", "put", "open", "close", "cut", "wash"]
    nouns = ["cup", "knife", "fridge", "onion", "pan", "spoon"]
    pairs = [tagged("v", float(k), f"#C C {verbs[k]}s the {nouns[k]}") for k in range(6)]
    res = build_mcq(pairs, "intra", 20, seed=0)
    assert len(res.questions) == 20 and validate_mcq(res.questions, pairs) == []


def test_synonym_collision_resampled_away():
    pairs = [tagged("v0", 1.0, "#C C takes the phone"), tagged("v1", 1.0, "#C C picks the cellphone")]
    for k, text in enumerate(["opens the fridge", "cuts the onion", "washes the cup", "stirs the pan"]):
        pairs.append(tagged(f"w{k}", 1.0, f"#C C {text}"))
    qs = build_mcq(pairs, "inter", 50, seed=0).questions
    assert len(qs) == 50
    for q in qs:
        assert not {0, 1} <= set(q.option_ids)
    assert validate_mcq(qs, pairs) == []


def test_short_video_skipped_for_intra():
    short = [tagged("short", float(k), f"#C C {v}s the cup") for k, v in enumerate(["take", "put", "open", "close"])]
    long_ = [
        tagged("long", float(k), f"#C C {v}s the {n}")
        for k, (v, n) in enumerate(zip(["take", "put", "open", "close", "cut", "wash"], ["cup", "pan", "fridge", "book", "onion", "spoon"]))
    ]
    qs = build_mcq(short + long_, "intra", 30, seed=0).questions
    assert len(qs) == 30
    assert {o.video_uid for q in qs for o in q.options} == {"long"}


def test_partial_output_with_warning():
    pairs = [tagged(f"v{k}", 1.0, "#C C takes the cup") for k in range(5)]
    with pytest.warns(RuntimeWarning):
        res = build_mcq(pairs, "inter", 10, seed=0)
    assert res.questions == [] and res.warnings


def test_missing_tags_rejected():
    from egocurate.pairing import ClipTextPair

    bare = [ClipTextPair(f"v{k}", 0.0, 1.0, "x", 0.5, 1.0) for k in range(6)]
    with pytest.raises(ValueError):
        build_mcq(bare, "inter", 1)


def test_validator_catches_problems():
    q = build_mcq(CORPUS, "intra", 1, seed=0).questions[0]
    broken = McqQuestion(q.query_text, q.options[:4], q.answer_index % 4, q.setting, q.option_ids[:4])
    assert validate_mcq([broken], CORPUS)
    ids = list(q.option_ids)
    ids[0] = ids[0] + 7 if ids[0] + 7 < len(CORPUS) else ids[0] - 7
    shuffled = McqQuestion(q.query_text, tuple(_opt(CORPUS[i]) for i in ids), q.answer_index, q.setting, tuple(ids))
    assert validate_mcq([shuffled], CORPUS)


def _opt(p):
    from egocurate.mcq import McqOption

    return McqOption(p.video_uid, p.t_start, p.t_end, p.text)


def test_serialised_shape():
    q = build_mcq(CORPUS, "inter", 1, seed=0).questions[0]
    d = json.loads(json.dumps(q.to_dict()))
    assert set(d) == {"query", "options", "answer", "setting"}
    assert set(d["options"][0]) == {"video_uid", "t_start", "t_end", "text"}
    back = McqQuestion.from_dict(d)
    assert back.options == q.options and back.setting is Setting.INTER


class TestScoring:
    def test_perfect(self):
        qs = build_mcq(CORPUS, "inter", 50, seed=1).questions
        scores = [np.eye(5)[q.answer_index] for q in qs]
        assert score_mcq(qs, scores) == 1.0

    def test_tie_goes_to_lowest_index(self):
        assert predict([1.0, 0.2, 0.3, 1.0, 0.0]) == 0

    def test_wrong_score_count(self):
        with pytest.raises(ValueError):
            predict([1.0, 2.0])

    def test_random_scores_near_chance(self):
        rng = np.random.default_rng(0)
        qs = build_mcq(CORPUS, "inter", 2000, seed=2).questions
        acc = score_mcq(qs, rng.random((len(qs), 5)))
        assert acc == pytest.approx(0.2, abs=0.03)


def test_select_annotator():
    streams = {
        ("a", "1"): [NarrationRecord("a", "1", 0.0, "x")],
        ("a", "2"): [NarrationRecord("a", "2", 0.0, "y")],
        ("b", "1"): [NarrationRecord("b", "1", 0.0, "z")],
    }
    assert list(select_annotator(streams, "first")) == [("a", "1"), ("b", "1")]
    assert len(select_annotator(streams, "all")) == 3
    picks = {tuple(select_annotator(streams, "random", s)) for s in range(30)}
    assert len(picks) == 2
    assert select_annotator(streams, "random", 5) == select_annotator(streams, "random", 5)
    with pytest.raises(ValueError):
        select_annotator(streams, "longest")
