"""Slow reference implementations written directly from the definitions.

These share no code with the package and are only used to check it.
"""

import itertools
import math

import numpy as np


def naive_nce(video, text, positives, tau):
    """Double-loop symmetric NCE: returns (value, v2t, t2v)."""
    n = len(video)
    sims = [[math.fsum(a * b for a, b in zip(video[i], text[j])) for j in range(n)] for i in range(n)]
    v2t = []
    t2v = []
    for i in range(n):
        den = math.fsum(math.exp(sims[i][j] / tau) for j in range(n))
        num = math.fsum(math.exp(sims[i][k] / tau) for k in positives[i])
        v2t.append(math.log(den) - math.log(num))
        den = math.fsum(math.exp(sims[j][i] / tau) for j in range(n))
        num = math.fsum(math.exp(sims[k][i] / tau) for k in positives[i])
        t2v.append(math.log(den) - math.log(num))
    a, b = math.fsum(v2t) / n, math.fsum(t2v) / n
    return a + b, a, b


def naive_mimm(sims, corr, margin=0.2, threshold=0.1):
    """Triple-loop max-margin sum over both directions."""
    n = len(sims)
    total = 0.0
    for i, j, k in itertools.product(range(n), repeat=3):
        if corr[i][j] > threshold and not corr[i][k] > threshold:
            total += max(0.0, margin + sims[i][k] - sims[i][j])
            total += max(0.0, margin + sims[k][i] - sims[j][i])
    return total


def mimm_kink_distance(sims, corr, margin=0.2, threshold=0.1):
    """Smallest |hinge argument| over all triples (large means far from a kink)."""
    n = len(sims)
    best = math.inf
    for i, j, k in itertools.product(range(n), repeat=3):
        if corr[i][j] > threshold and not corr[i][k] > threshold:
            best = min(best, abs(margin + sims[i][k] - sims[i][j]), abs(margin + sims[k][i] - sims[j][i]))
    return best


def ap_by_prefixes(order_relevance):
    """AP from the definition: average of precision@r over every prefix ending on a hit."""
    rel = list(order_relevance)
    precisions = []
    for r in range(1, len(rel) + 1):
        if rel[r - 1]:
            precisions.append(sum(rel[:r]) / r)
    return sum(precisions) / len(precisions)


def exhaustive_recall(preds, gts, k, theta):
    def overlap(a, b):
        inter = max(0.0, min(a[1], b[1]) - max(a[0], b[0]))
        return inter / ((a[1] - a[0]) + (b[1] - b[0]) - inter)

    hits = 0
    for ranked, g in zip(preds, gts):
        if any(overlap(p, g) >= theta for p in ranked[:k]):
            hits += 1
    return hits / len(gts)


def random_batch(rng, n, d):
    v = rng.standard_normal((n, d))
    t = rng.standard_normal((n, d))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    t /= np.linalg.norm(t, axis=1, keepdims=True)
    return v, t


def random_positive_sets(rng, n, p=0.3):
    return [set(np.flatnonzero(rng.random(n) < p).tolist()) | {i} for i in range(n)]
