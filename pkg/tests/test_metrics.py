import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from egocurate.metrics import (
    Interval,
    accuracy,
    average_precision,
    format_recall_table,
    iou,
    mean_average_precision,
    ndcg,
    recall_at_k,
    retrieval_metrics,
)

from oracles import ap_by_prefixes, exhaustive_recall


class TestAveragePrecision:
    def test_top_hit(self):
        assert average_precision([0.9, 0.5, 0.1], [True, False, False]) == 1.0

    def test_ranks_one_and_three(self):
        ap = mean_average_precision([[0.9, 0.5, 0.1]], [[1.0, 0.0, 1.0]])
        assert abs(ap - (1 + 2 / 3) / 2) <= 1e-9
        assert ap == pytest.approx(0.8333, abs=1e-4)

    def test_uniform_over_permutations(self):
        # every ordering of one relevant item among five, enumerated exactly
        aps = [
            average_precision(np.array(perm, dtype=float), [True, False, False, False, False])
            for perm in itertools.permutations(range(5))
        ]
        harmonic = sum(1 / r for r in range(1, 6))
        assert np.mean(aps) == pytest.approx(harmonic / 5, abs=1e-12)

    def test_ties_broken_by_index(self):
        assert average_precision([0.5, 0.5], [False, True]) == 0.5
        assert average_precision([0.5, 0.5], [True, False]) == 1.0

    def test_skip_warning(self):
        with pytest.warns(RuntimeWarning):
            v = mean_average_precision([[1.0, 0.0], [0.3, 0.2]], [[0.0, 1.0], [0.0, 0.0]])
        assert v == 0.5

    def test_binarize_threshold(self):
        assert mean_average_precision([[0.9, 0.1]], [[0.05, 0.5]], binarize_at=0.1) == 0.5

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            mean_average_precision(np.zeros((2, 3)), np.zeros((3, 2)))


@given(st.lists(st.tuples(st.floats(-5, 5), st.booleans()), min_size=1, max_size=6))
@settings(max_examples=300, deadline=None)
def test_ap_matches_prefix_enumeration(items):
    scores = [s for s, _ in items]
    rel = [r for _, r in items]
    if not any(rel):
        rel[0] = True
    order = sorted(range(len(scores)), key=lambda j: (-scores[j], j))
    assert average_precision(scores, rel) == pytest.approx(ap_by_prefixes([rel[j] for j in order]), abs=1e-12)


class TestNdcg:
    def test_ideal(self):
        gains = np.array([[0.2, 1.0, 0.0, 0.5]])
        assert ndcg(gains, gains) == pytest.approx(1.0, abs=1e-12)

    def test_worst_first(self):
        assert ndcg([[0.0, 1.0]], [[1.0, 0.0]]) == pytest.approx(1 / math.log2(3), abs=1e-12)
        assert ndcg([[0.0, 1.0]], [[1.0, 0.0]]) == pytest.approx(0.6309, abs=1e-4)

    def test_equal_gains(self):
        assert ndcg([[0.1, 0.9, 0.5]], [[0.4, 0.4, 0.4]]) == 1.0

    def test_all_zero_skipped(self):
        with pytest.warns(RuntimeWarning):
            assert ndcg([[1.0, 0.0], [1.0, 0.0]], [[1.0, 0.0], [0.0, 0.0]]) == 1.0


matrices = st.integers(0, 10**6).map(lambda s: np.random.default_rng(s))


@given(matrices, st.sampled_from([np.exp, lambda x: 3 * x - 1, np.arctan, lambda x: x**3]))
@settings(max_examples=100, deadline=None)
def test_monotone_invariance_and_bounds(rng, transform):
    scores = rng.normal(size=(4, 6))
    rel = rng.random((4, 6)) * (rng.random((4, 6)) < 0.6)
    rel[:, 0] = np.maximum(rel[:, 0], 0.5)
    m, n = mean_average_precision(scores, rel), ndcg(scores, rel)
    assert 0.0 <= m <= 1.0 and 0.0 <= n <= 1.0 + 1e-12
    assert mean_average_precision(transform(scores), rel) == m
    assert ndcg(transform(scores), rel) == n


def test_retrieval_directions():
    sims = np.array([[0.9, 0.1, 0.3], [0.2, 0.8, 0.1], [0.7, 0.6, 0.5]])
    rel = np.eye(3)
    out = retrieval_metrics(sims, rel)
    assert out["map_v2t"] == pytest.approx((1 + 1 + 1 / 3) / 3)
    assert out["map_t2v"] == pytest.approx((1 + 1 + 1) / 3)
    assert out["map_avg"] == pytest.approx(0.5 * (out["map_v2t"] + out["map_t2v"]))
    assert set(out) == {"map_v2t", "map_t2v", "map_avg", "ndcg_v2t", "ndcg_t2v", "ndcg_avg"}


class TestIou:
    def test_examples(self):
        assert iou((1, 3), (1, 3)) == 1.0
        assert iou((2, 6), (4, 8)) == pytest.approx(1 / 3)
        assert iou((0, 1), (2, 3)) == 0.0

    def test_invalid(self):
        with pytest.raises(ValueError):
            Interval(2.0, 2.0)


class TestRecall:
    def test_iou_example(self):
        t = recall_at_k([[(2, 6)]], [(4, 8)], k_values=[1], thresholds=[0.3, 0.5])
        assert t == {(1, 0.3): 1.0, (1, 0.5): 0.0}

    def test_perfect(self):
        gt = [(0, 1), (3, 5)]
        t = recall_at_k([[g] for g in gt], gt)
        assert set(t.values()) == {1.0}

    def test_rank_window(self):
        preds = [[(10, 11), (12, 13), (14, 15), (0, 1)]]
        t = recall_at_k(preds, [(0, 1)], k_values=[1, 5], thresholds=[0.5])
        assert t == {(1, 0.5): 0.0, (5, 0.5): 1.0}

    def test_empty_is_miss(self):
        t = recall_at_k([[], [(0, 1)]], [(0, 1), (0, 1)], k_values=[1], thresholds=[0.5])
        assert t[(1, 0.5)] == 0.5

    def test_table_labels(self):
        t = format_recall_table(recall_at_k([[(0, 1)]], [(0, 1)]))
        assert list(t) == [
            "R@1,IoU=0.3", "R@1,IoU=0.5", "R@1,IoU=0.7", "R@5,IoU=0.3", "R@5,IoU=0.5", "R@5,IoU=0.7",
        ]


def ten_query_fixture(seed=0):
    rng = np.random.default_rng(seed)
    gts, preds = [], []
    for _ in range(10):
        s = float(rng.uniform(0, 50))
        gts.append((s, s + float(rng.uniform(1, 10))))
        ranked = []
        for _ in range(int(rng.integers(0, 8))):
            a = s + float(rng.normal(0, 4))
            ranked.append((a, a + float(rng.uniform(0.5, 10))))
        preds.append(ranked)
    return preds, gts


@pytest.mark.parametrize("seed", range(5))
def test_recall_matches_exhaustive(seed):
    preds, gts = ten_query_fixture(seed)
    ks, ths = [1, 3, 5], [0.1, 0.3, 0.5, 0.7]
    table = recall_at_k(preds, gts, ks, ths)
    for k in ks:
        for th in ths:
            assert table[(k, th)] == exhaustive_recall(preds, gts, k, th)
    for k in ks:
        vals = [table[(k, th)] for th in ths]
        assert vals == sorted(vals, reverse=True)
    for th in ths:
        vals = [table[(k, th)] for k in ks]
        assert vals == sorted(vals)


def test_accuracy():
    assert accuracy([1, 2, 3], [1, 0, 3]) == pytest.approx(2 / 3)
    with pytest.raises(ValueError):
        accuracy([], [])
