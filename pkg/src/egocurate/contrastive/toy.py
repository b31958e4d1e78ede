"""A desk-scale stand-in for video-language pretraining.

Synthetic "videos" are scenes in which actions (verb, noun) happen one after
another. A clip's video feature is a strong scene vector plus weaker verb and
noun vectors plus noise; the text feature is a bag of surface words, where
each verb and noun has several synonymous spellings. Two linear maps project
both modalities into a common L2-normalised space and are fitted by gradient
descent on InfoNCE or EgoNCE, one random minibatch per step (EgoNCE adds a
scene-negative per sampled row). Held-out videos of the same scenes are turned
into intra/inter multiple-choice questions to score the learned space.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from ..ingest import NarrationRecord
from ..mcq import build_mcq
from ..pairing import PairingConfig, pair_clips
from ..taxonomy import Taxonomy, tag_narration, tokenize
from .losses import build_positive_sets, ego_nce, info_nce, positive_mask
from .sampling import sample_scene_negatives


class ToyTrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class ToyConfig:
    n_scenes: int = 6
    train_videos_per_scene: int = 3
    test_videos_per_scene: int = 3
    narrations_per_video: int = 24
    n_verbs: int = 8
    n_nouns: int = 16
    verbs_per_scene: int = 5
    nouns_per_scene: int = 4
    synonyms: int = 2
    video_dim: int = 32
    embed_dim: int = 16
    scene_scale: float = 3.0
    noise: float = 0.5
    mean_gap_sec: float = 4.0
    steps: int = 300
    lr: float = 0.05
    tau: float = 0.05
    batch_size: int | None = 32  # None trains on the whole corpus each step
    window_sec: float = 60.0
    # EgoNCE ablation switches: positives "noun_verb" | "noun" | "verb" | None,
    # negatives "window" | "video" | "random" | None
    positives: str | None = "noun_verb"
    negatives: str | None = "window"
    mcq_questions: int = 300


@dataclass
class ToyCorpus:
    pairs: list
    video_x: np.ndarray
    text_x: np.ndarray


@dataclass
class ToyWorld:
    taxonomy: Taxonomy
    vocab: dict[str, int]
    scene_vecs: np.ndarray
    verb_vecs: np.ndarray
    noun_vecs: np.ndarray
    scene_verbs: list
    scene_nouns: list
    train: ToyCorpus = None
    test: ToyCorpus = None


@dataclass
class ToyResult:
    seed: int
    objective: str
    intra_acc: float
    inter_acc: float
    losses: list = field(default_factory=list)


def _surface(kind: str, g: int, s: int) -> str:
    return f"{kind}{g}x{s}"


def make_world(cfg: ToyConfig, seed: int) -> ToyWorld:
    rng = np.random.default_rng(seed)
    tax = Taxonomy.from_dict(
        {
            "nouns": {f"n{g}": [_surface("n", g, s) for s in range(cfg.synonyms)] for g in range(cfg.n_nouns)},
            "verbs": {f"v{g}": [_surface("v", g, s) for s in range(cfg.synonyms)] for g in range(cfg.n_verbs)},
        }
    )
    words = [_surface(k, g, s) for k, n in (("v", cfg.n_verbs), ("n", cfg.n_nouns)) for g in range(n) for s in range(cfg.synonyms)]
    unit = lambda m: m / np.linalg.norm(m, axis=1, keepdims=True)
    world = ToyWorld(
        taxonomy=tax,
        vocab={w: i for i, w in enumerate(words)},
        scene_vecs=unit(rng.standard_normal((cfg.n_scenes, cfg.video_dim))),
        verb_vecs=unit(rng.standard_normal((cfg.n_verbs, cfg.video_dim))),
        noun_vecs=unit(rng.standard_normal((cfg.n_nouns, cfg.video_dim))),
        scene_verbs=[np.sort(rng.choice(cfg.n_verbs, cfg.verbs_per_scene, replace=False)) for _ in range(cfg.n_scenes)],
        scene_nouns=[np.sort(rng.choice(cfg.n_nouns, cfg.nouns_per_scene, replace=False)) for _ in range(cfg.n_scenes)],
    )
    world.train = _make_corpus(cfg, world, rng, cfg.train_videos_per_scene, "train")
    world.test = _make_corpus(cfg, world, rng, cfg.test_videos_per_scene, "test")
    return world


def _make_corpus(cfg: ToyConfig, world: ToyWorld, rng, videos_per_scene: int, split: str) -> ToyCorpus:
    pairs, vx, tx = [], [], []
    for s in range(cfg.n_scenes):
        for k in range(videos_per_scene):
            uid = f"{split}-s{s}-v{k}"
            t = np.cumsum(rng.exponential(cfg.mean_gap_sec, cfg.narrations_per_video))
            records, actions = [], []
            for ti in t:
                verb = int(rng.choice(world.scene_verbs[s]))
                noun = int(rng.choice(world.scene_nouns[s]))
                text = (
                    f"#C C {_surface('v', verb, int(rng.integers(cfg.synonyms)))} "
                    f"the {_surface('n', noun, int(rng.integers(cfg.synonyms)))}"
                )
                records.append(NarrationRecord(uid, "0", round(float(ti), 3), text))
                actions.append((verb, noun))
            for p, (verb, noun) in zip(pair_clips(records, PairingConfig(), float(t[-1]) + 1.0), actions):
                pairs.append(p.with_tags(tag_narration(p.text, world.taxonomy)))
                feat = (
                    cfg.scene_scale * world.scene_vecs[s]
                    + world.verb_vecs[verb]
                    + world.noun_vecs[noun]
                    + cfg.noise * rng.standard_normal(cfg.video_dim)
                )
                vx.append(feat)
                bag = np.zeros(len(world.vocab))
                for w in tokenize(p.text):
                    if w in world.vocab:
                        bag[world.vocab[w]] = 1.0
                tx.append(bag)
    return ToyCorpus(pairs, np.array(vx), np.array(tx))


def _embed(x: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    z = x @ w
    norm = np.linalg.norm(z, axis=1, keepdims=True)
    return z / norm, z, norm


def _backprop(x, y, norm, g_y) -> np.ndarray:
    # d/dz of z/|z| applied to the upstream gradient
    g_z = (g_y - y * np.sum(y * g_y, axis=1, keepdims=True)) / norm
    return x.T @ g_z


def _objective_step(objective, corpus, rows, neg, w_v, w_t, cfg, positive_sets):
    idx = rows if neg is None else np.concatenate([rows, neg])
    xv, xt = corpus.video_x[idx], corpus.text_x[idx]
    v, _, nv = _embed(xv, w_v)
    t, _, nt = _embed(xt, w_t)
    if objective == "infonce":
        res = info_nce(v, t, cfg.tau)
    else:
        res = ego_nce(v, t, positive_sets, cfg.tau)
    return res.value, _backprop(xv, v, nv, res.grad_video), _backprop(xt, t, nt, res.grad_text)


def train_linear(cfg: ToyConfig, world: ToyWorld, objective: str, seed: int):
    """Fit the two projection matrices; returns (w_video, w_text, loss trace)."""
    if objective not in ("infonce", "egonce"):
        raise ValueError(f"unknown objective {objective!r}; expected infonce or egonce")
    rng = np.random.default_rng([seed, 1])
    corpus = world.train
    n = len(corpus.pairs)
    w_v = rng.standard_normal((cfg.video_dim, cfg.embed_dim)) / np.sqrt(cfg.video_dim)
    w_t = rng.standard_normal((corpus.text_x.shape[1], cfg.embed_dim)) / np.sqrt(corpus.text_x.shape[1])
    trace = []
    for step in range(cfg.steps):
        if cfg.batch_size is None:
            rows = np.arange(n)
        else:
            rows = np.sort(rng.choice(n, size=cfg.batch_size, replace=False))
        neg, mask = None, None
        if objective == "egonce":
            if cfg.negatives is not None:
                neg = sample_scene_negatives(corpus.pairs, rows, cfg.negatives, cfg.window_sec, rng).indices
            idx = rows if neg is None else np.concatenate([rows, neg])
            if cfg.positives is None:
                mask = np.eye(idx.size, dtype=bool)
            else:
                mask = positive_mask(build_positive_sets([corpus.pairs[i].tags for i in idx], cfg.positives), idx.size)
        with np.errstate(over="ignore", invalid="ignore"):
            value, g_v, g_t = _objective_step(objective, corpus, rows, neg, w_v, w_t, cfg, mask)
            w_v -= cfg.lr * g_v
            w_t -= cfg.lr * g_t
        # overflowing weights can leave a finite loss on zeroed embeddings, so check them too
        if not all(np.all(np.isfinite(a)) for a in (value, g_v, g_t, w_v, w_t)):
            raise ToyTrainingError(f"{objective} diverged at iteration {step}")
        trace.append(float(value))
    return w_v, w_t, trace


def evaluate(cfg: ToyConfig, world: ToyWorld, w_v: np.ndarray, w_t: np.ndarray, seed: int) -> dict[str, float]:
    """Intra/inter MCQ accuracy of the projections on held-out videos."""
    corpus = world.test
    v, _, _ = _embed(corpus.video_x, w_v)
    t, _, _ = _embed(corpus.text_x, w_t)
    out = {}
    for setting in ("intra", "inter"):
        qs = build_mcq(corpus.pairs, setting, cfg.mcq_questions, seed=[seed, 2]).questions
        hits = 0
        for q in qs:
            ids = np.array(q.option_ids)
            scores = v[ids] @ t[ids[q.answer_index]]
            hits += int(np.argmax(scores)) == q.answer_index
        out[setting] = hits / len(qs)
    return out


def train_toy(cfg: ToyConfig = ToyConfig(), objective: str = "egonce", seeds=(0, 1, 2, 3, 4)) -> list[ToyResult]:
    """Train and evaluate once per seed; each seed fixes both the world and the fit."""
    results = []
    for seed in seeds:
        world = make_world(cfg, seed)
        w_v, w_t, trace = train_linear(cfg, world, objective, seed)
        acc = evaluate(cfg, world, w_v, w_t, seed)
        results.append(ToyResult(int(seed), objective, acc["intra"], acc["inter"], trace))
    return results


def untrained(cfg: ToyConfig) -> ToyConfig:
    return replace(cfg, steps=0)
