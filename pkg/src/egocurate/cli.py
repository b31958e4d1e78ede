"""``egocurate`` command line.

Every subcommand prints a JSON summary on stdout. Failures exit non-zero and
print ``{"error": ..., "message": ..., "command": ...}`` on stderr.
``EGOCURATE_THREADS`` caps the BLAS thread pool.
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._io import dumps, iter_jsonl, read_json, read_jsonl, write_json, write_jsonl


def _out(obj) -> None:
    print(dumps(obj))


def _load_pairs(path):
    from .pairing import ClipTextPair

    return [ClipTextPair.from_dict(d) for d in iter_jsonl(path)]


def cmd_filter(args) -> int:
    from .ingest import filter_narrations, filter_videos, read_narrations, read_video_meta
    from .pipeline import _read_exclude

    out = Path(args.out)
    parsed = read_narrations(args.narrations)
    videos = None
    report = {"parse_errors": len(parsed.errors)}
    if args.meta:
        kept_v, vrep = filter_videos(read_video_meta(args.meta), _read_exclude(args.exclude))
        videos = {m.video_uid: m for m in kept_v}
        write_jsonl(out / "videos.filtered.jsonl", (m.to_dict() for m in kept_v))
        report["videos"] = vrep.to_dict()
    kept, nrep = filter_narrations(parsed.records(), videos)
    report["narrations"] = nrep.to_dict()
    write_jsonl(out / "narrations.filtered.jsonl", (r.to_dict() for r in kept))
    write_jsonl(out / "rejected.jsonl", (e.to_dict() for e in parsed.errors))
    write_json(out / "filter_report.json", report)
    _out(report)
    return 0


def cmd_pair(args) -> int:
    from .ingest import group_streams, read_narrations, read_video_meta
    from .pairing import PairingConfig, pair_clips

    cfg = PairingConfig(strategy=args.strategy, alpha=args.alpha, clamp_to_video=not args.no_clamp)
    durations = {m.video_uid: m.duration_sec for m in read_video_meta(args.meta)} if args.meta else {}
    streams = group_streams(read_narrations(args.input).records())
    pairs = [p for (vid, _), recs in streams.items() for p in pair_clips(recs, cfg, durations.get(vid))]
    n = write_jsonl(args.output, (p.to_dict() for p in pairs))
    _out({"pairs": n, "streams": len(streams), "strategy": cfg.strategy.value, "alpha": cfg.alpha})
    return 0


def cmd_tag(args) -> int:
    from .taxonomy import Taxonomy, tag_narration

    tax = Taxonomy.load(args.taxonomy)
    rows = []
    for d in iter_jsonl(args.input):
        d = {k: v for k, v in d.items() if k not in ("noun_ids", "verb_ids", "first_noun", "first_verb", "k_nouns", "k_verbs")}
        d.update(tag_narration(d["text"], tax).to_dict())
        rows.append(d)
    n = write_jsonl(args.output, rows)
    _out({"tagged": n, "k_nouns": tax.n_nouns, "k_verbs": tax.n_verbs})
    return 0


def cmd_mcq_build(args) -> int:
    from .mcq import build_mcq

    pairs = _load_pairs(args.input)
    res = build_mcq(pairs, args.setting, args.count, args.seed, args.max_resample)
    write_json(args.output, [q.to_dict() for q in res.questions])
    _out({"questions": len(res.questions), "setting": args.setting, "warnings": res.warnings})
    return 0


def _read_score_rows(path, key: str) -> list:
    rows = []
    for d in iter_jsonl(path) if str(path).endswith(".jsonl") else read_json(path):
        rows.append(d[key] if isinstance(d, dict) else d)
    return rows


def cmd_mcq_score(args) -> int:
    from .mcq import McqQuestion, score_mcq

    qs = [McqQuestion.from_dict(d) for d in read_json(args.questions)]
    scores = _read_score_rows(args.scores, "scores")
    result = {"accuracy": score_mcq(qs, scores), "questions": len(qs)}
    for setting in sorted({q.setting.value for q in qs}):
        idx = [i for i, q in enumerate(qs) if q.setting.value == setting]
        result[f"accuracy_{setting}"] = score_mcq([qs[i] for i in idx], [scores[i] for i in idx])
    if args.out:
        write_json(args.out, result)
    _out(result)
    return 0


def cmd_sample_batch(args) -> int:
    from .contrastive import sample_batch

    pairs = _load_pairs(args.input)
    positives = None if args.positives == "none" else args.positives
    negatives = None if args.negatives == "none" else args.negatives
    draw = sample_batch(pairs, args.batch_size, args.seed, negatives, positives, args.window)
    write_json(args.output, draw.to_dict())
    _out({"rows": len(draw.rows), "fallbacks": sum(f is not None for f in draw.fallback)})
    return 0


def cmd_loss_check(args) -> int:
    """Self-check of the objectives on random batches, or on given embeddings."""
    from .contrastive import ego_nce, gradient_check, info_nce, l2_normalize, mimm_loss

    rng = np.random.default_rng(args.seed)
    if args.embeddings:
        from .embeddings import load_embeddings

        _, v, t = load_embeddings(args.embeddings)
        if args.batch:
            draw = read_json(args.batch)
            rows = draw["anchors"] + (draw["negatives"] or [])
            v, t, positives = v[rows], t[rows], draw["positives"]
            n = len(draw["anchors"])
        else:
            positives, n = [{i} for i in range(len(v))], len(v)
        res = {
            "info_nce": info_nce(v[:n], t[:n], args.tau).value,
            "ego_nce": ego_nce(v, t, positives, args.tau).value,
        }
        _out(res)
        return 0
    worst = {"info_nce": 0.0, "ego_nce": 0.0, "mimm": 0.0, "reduction": 0.0}
    for _ in range(args.trials):
        n = int(rng.integers(2, args.n + 1))
        v = l2_normalize(rng.standard_normal((n, args.d)))
        t = l2_normalize(rng.standard_normal((n, args.d)))
        pos = [set(np.flatnonzero(rng.random(n) < 0.3).tolist()) | {i} for i in range(n)]
        worst["info_nce"] = max(worst["info_nce"], gradient_check(lambda a, b: info_nce(a, b, args.tau), [v, t]))
        worst["ego_nce"] = max(worst["ego_nce"], gradient_check(lambda a, b: ego_nce(a, b, pos, args.tau), [v, t]))
        corr = (rng.random((n, n)) < 0.3).astype(float)
        np.fill_diagonal(corr, 1.0)
        worst["mimm"] = max(worst["mimm"], gradient_check(lambda s: mimm_loss(s, corr), [v @ t.T]))
        gap = abs(ego_nce(v, t, [{i} for i in range(n)], args.tau).value - info_nce(v, t, args.tau).value)
        worst["reduction"] = max(worst["reduction"], gap)
    ok = max(worst["info_nce"], worst["ego_nce"], worst["mimm"]) <= 1e-6 and worst["reduction"] <= 1e-12
    _out({"max_grad_rel_err": worst, "trials": args.trials, "ok": ok})
    return 0 if ok else 1


def cmd_train_toy(args) -> int:
    from dataclasses import replace

    from .contrastive.toy import ToyConfig, train_toy

    cfg = ToyConfig()
    if args.steps is not None:
        cfg = replace(cfg, steps=args.steps)
    seeds = list(range(args.seed0, args.seed0 + args.seeds))
    res = train_toy(cfg, args.objective, seeds)
    _out(
        {
            "objective": args.objective,
            "per_seed": [{"seed": r.seed, "intra": r.intra_acc, "inter": r.inter_acc} for r in res],
            "mean_intra": float(np.mean([r.intra_acc for r in res])),
            "mean_inter": float(np.mean([r.inter_acc for r in res])),
        }
    )
    return 0


def cmd_eval_retrieval(args) -> int:
    from .metrics import retrieval_metrics

    scores = np.array(_read_score_rows(args.scores, "scores"), dtype=float)
    rel = np.array(_read_score_rows(args.rel, "rel"), dtype=float)
    result = retrieval_metrics(scores, rel)
    if args.out:
        write_json(args.out, result)
    _out(result)
    return 0


def cmd_eval_grounding(args) -> int:
    from .metrics import format_recall_table, recall_at_k

    preds = read_jsonl(args.preds)
    gts = read_jsonl(args.gt)
    if preds and "query_id" in preds[0]:
        by_id = {p["query_id"]: p["intervals"] for p in preds}
        ranked = [by_id.get(g["query_id"], []) for g in gts]
    else:
        ranked = [p["intervals"] for p in preds]
    gt = [g["interval"] for g in gts]
    result = format_recall_table(recall_at_k(ranked, gt, args.k, args.iou))
    if args.out:
        write_json(args.out, result)
    _out(result)
    return 0


def cmd_gen_fixture(args) -> int:
    from .fixtures import write_fixture

    paths = write_fixture(args.out, seed=args.seed, malformed_lines=args.malformed)
    _out({k: str(v) for k, v in paths.items()})
    return 0


def cmd_run(args) -> int:
    from .fixtures import bundled_fixture
    from .pipeline import PipelineConfig, run_pipeline

    config = args.config or bundled_fixture()["narrations"].parent / "pipeline.toml"
    cfg = PipelineConfig.from_toml(config, out=args.out, seed=args.seed, strategy=args.strategy)
    out = run_pipeline(cfg, force=args.force)
    manifest = read_json(out / "manifest.json")
    _out({"out": str(out), "status": manifest["status"], "config_hash": manifest["config_hash"]})
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="egocurate", description="Egocentric video-language data curation tools.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("filter", help="parse and filter narrations / video metadata")
    s.add_argument("--narrations", required=True)
    s.add_argument("--meta")
    s.add_argument("--exclude", help="file of video ids to drop, one per line")
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_filter)

    s = sub.add_parser("pair", help="create clip-text pairs")
    s.add_argument("--strategy", default="f", help="a-f (default f)")
    s.add_argument("--alpha", type=float, default=4.9)
    s.add_argument("--meta", help="video metadata, used to clamp clips to the video length")
    s.add_argument("--no-clamp", action="store_true")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out", dest="output", required=True)
    s.set_defaults(func=cmd_pair)

    s = sub.add_parser("tag", help="add noun/verb tags to pairs")
    s.add_argument("--taxonomy", required=True)
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out", dest="output", required=True)
    s.set_defaults(func=cmd_tag)

    mcq = sub.add_parser("mcq", help="multiple-choice benchmark").add_subparsers(dest="mcq_command", required=True)
    s = mcq.add_parser("build")
    s.add_argument("--in", dest="input", required=True, help="tagged pairs .jsonl")
    s.add_argument("--setting", choices=["inter", "intra"], required=True)
    s.add_argument("--count", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-resample", type=int, default=50)
    s.add_argument("--out", dest="output", default="mcq.json")
    s.set_defaults(func=cmd_mcq_build)
    s = mcq.add_parser("score")
    s.add_argument("--questions", required=True)
    s.add_argument("--scores", required=True, help='.jsonl of {"scores": [5 floats]} per question')
    s.add_argument("--out")
    s.set_defaults(func=cmd_mcq_score)

    s = sub.add_parser("sample-batch", help="draw an EgoNCE batch with scene negatives and positive sets")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--batch-size", type=int, default=16)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--negatives", default="window", choices=["window", "video", "random", "none"])
    s.add_argument("--positives", default="noun_verb", choices=["noun_verb", "noun", "verb", "none"])
    s.add_argument("--window", type=float, default=60.0)
    s.add_argument("--out", dest="output", default="batch.json")
    s.set_defaults(func=cmd_sample_batch)

    s = sub.add_parser("loss-check", help="gradient and reduction checks of the objectives")
    s.add_argument("--trials", type=int, default=20)
    s.add_argument("--n", type=int, default=8)
    s.add_argument("--d", type=int, default=16)
    s.add_argument("--tau", type=float, default=0.05)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--embeddings", help="evaluate the losses on an embedding file instead")
    s.add_argument("--batch", help="batch.json from sample-batch (with --embeddings)")
    s.set_defaults(func=cmd_loss_check)

    s = sub.add_parser("train-toy", help="train linear encoders on the synthetic scene/action task")
    s.add_argument("--objective", choices=["infonce", "egonce"], default="egonce")
    s.add_argument("--seeds", type=int, default=5, help="number of seeds")
    s.add_argument("--seed0", type=int, default=0, help="first seed")
    s.add_argument("--steps", type=int)
    s.set_defaults(func=cmd_train_toy)

    ev = sub.add_parser("eval", help="evaluation metrics").add_subparsers(dest="eval_command", required=True)
    s = ev.add_parser("retrieval")
    s.add_argument("--scores", required=True, help='.jsonl rows {"scores": [...]}')
    s.add_argument("--rel", required=True, help='.jsonl rows {"rel": [...]}')
    s.add_argument("--out")
    s.set_defaults(func=cmd_eval_retrieval)
    s = ev.add_parser("grounding")
    s.add_argument("--preds", required=True, help='.jsonl rows {"query_id", "intervals": [[s, e], ...]}')
    s.add_argument("--gt", required=True, help='.jsonl rows {"query_id", "interval": [s, e]}')
    s.add_argument("--k", type=int, nargs="+", default=[1, 5])
    s.add_argument("--iou", type=float, nargs="+", default=[0.3, 0.5, 0.7])
    s.add_argument("--out")
    s.set_defaults(func=cmd_eval_grounding)
    s = ev.add_parser("mcq")
    s.add_argument("--questions", required=True)
    s.add_argument("--scores", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_mcq_score)

    s = sub.add_parser("gen-fixture", help="write the synthetic fixture")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=7)
    s.add_argument("--malformed", type=int, default=1, help="number of unparseable lines to include")
    s.set_defaults(func=cmd_gen_fixture)

    s = sub.add_parser("run", help="run the whole pipeline from a TOML config")
    s.add_argument("--config", help="defaults to the bundled fixture config")
    s.add_argument("--out")
    s.add_argument("--seed", type=int)
    s.add_argument("--strategy")
    s.add_argument("--force", action="store_true", help="re-run even if the config hash is unchanged")
    s.set_defaults(func=cmd_run)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    threads = os.environ.get("EGOCURATE_THREADS")
    try:
        if threads:
            from threadpoolctl import threadpool_limits

            with threadpool_limits(int(threads)):
                return args.func(args)
        return args.func(args)
    except Exception as e:  # noqa: BLE001 - every failure becomes a JSON error record
        err = {"error": type(e).__name__, "message": str(e), "command": args.command}
        stage = getattr(e, "stage", None)
        if stage:
            err["stage"] = stage
        print(json.dumps(err, sort_keys=True), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
