"""End-to-end pipeline: filter -> pair -> tag -> MCQ / batch sampling -> loss check.

Every stage writes plain JSON/JSONL into one artifact directory, and a
``manifest.json`` records the configuration hash, library versions and the
number of records each file holds. Randomness comes from a single seed split
into named per-stage streams, so a stage re-run in isolation draws the same
numbers.

Configuration is TOML::

    seed = 7

    [paths]
    narrations = "narrations.jsonl"
    meta = "meta.jsonl"
    taxonomy = "taxonomy.json"
    out = "artifacts"

    [pairing]
    strategy = "f"
    alpha = 4.9
"""

import dataclasses
import hashlib
import logging
import platform
import sys
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from ._io import count_lines, dumps, read_json, write_json, write_jsonl
from .contrastive import ego_nce, gradient_check, info_nce, l2_normalize, sample_batch
from .ingest import filter_narrations, filter_videos, group_streams, read_narrations, read_video_meta
from .mcq import build_mcq, select_annotator
from .pairing import PairingConfig, Strategy, pair_clips
from .taxonomy import Taxonomy, tag_narration

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)

MANIFEST = "manifest.json"


class PipelineError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class PipelineConfig:
    narrations: str
    meta: str
    taxonomy: str
    out: str = "artifacts"
    exclude: str | None = None
    seed: int = 7
    strategy: str = "f"
    alpha: float = 4.9
    # Table-4 style switches for the sampled batch
    negatives: str | None = "window"
    window_sec: float = 60.0
    positives: str | None = "noun_verb"
    batch_size: int = 16
    tau: float = 0.05
    mcq_settings: list = field(default_factory=lambda: ["inter", "intra"])
    mcq_count: int = 50
    mcq_max_resample: int = 50
    annotator_policy: str = "random"
    embed_dim: int = 16

    def __post_init__(self):
        if not (0 <= int(self.seed) < 2**64):
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        self.seed = int(self.seed)
        self.strategy = Strategy.parse(self.strategy).value

    @classmethod
    def from_toml(cls, path, **overrides) -> "PipelineConfig":
        """Load a TOML config; relative paths resolve against the file's directory.

        ``overrides`` (e.g. from CLI flags) win over file values; ``None``
        values are ignored.
        """
        path = Path(path)
        with open(path, "rb") as f:
            raw = tomllib.load(f)
        flat: dict = {}
        for key, value in raw.items():
            if isinstance(value, dict):
                for k, v in value.items():
                    flat[_SECTION_KEYS.get((key, k), k)] = v
            else:
                flat[key] = value
        for key in ("narrations", "meta", "taxonomy", "out", "exclude"):
            if flat.get(key) is not None and not Path(flat[key]).is_absolute():
                flat[key] = str((path.parent / flat[key]).resolve())
        flat.update({k: v for k, v in overrides.items() if v is not None})
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(flat) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**flat)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


# [mcq] settings/count/... map onto prefixed field names
_SECTION_KEYS = {
    ("mcq", "settings"): "mcq_settings",
    ("mcq", "count"): "mcq_count",
    ("mcq", "max_resample"): "mcq_max_resample",
    ("mcq", "annotator"): "annotator_policy",
}


def stage_rng(seed: int, stage: str) -> np.random.Generator:
    """Independent generator for a named stage, derived from the global seed."""
    return np.random.default_rng([seed, zlib.crc32(stage.encode())])


def _file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def config_hash(cfg: PipelineConfig) -> str:
    """Hash of the configuration and the contents of every input file."""
    inputs = {k: _file_digest(getattr(cfg, k)) for k in ("narrations", "meta", "taxonomy", "exclude") if getattr(cfg, k)}
    settings = {k: v for k, v in cfg.to_dict().items() if k not in ("narrations", "meta", "taxonomy", "exclude", "out")}
    return hashlib.sha256(dumps({"settings": settings, "inputs": inputs}).encode()).hexdigest()


def _versions() -> dict:
    return {
        "egocurate": __version__,
        "numpy": np.__version__,
        "python": platform.python_version(),
    }


class _Run:
    """Bookkeeping for one pipeline invocation."""

    def __init__(self, cfg: PipelineConfig, out: Path, digest: str):
        self.cfg = cfg
        self.out = out
        # the output location is left out so that runs into different directories compare equal
        self.manifest = {
            "config": {k: v for k, v in cfg.to_dict().items() if k != "out"},
            "config_hash": digest,
            "versions": _versions(),
            "stages": {},
            "files": {},
            "status": "running",
        }

    def stage(self, name: str):
        return _Stage(self, name)

    def jsonl(self, name: str, rows) -> int:
        n = write_jsonl(self.out / name, rows)
        self.manifest["files"][name] = n
        return n

    def json(self, name: str, obj, records: int | None = None) -> None:
        write_json(self.out / name, obj)
        if records is not None:
            self.manifest["files"][name] = records

    def save(self) -> None:
        write_json(self.out / MANIFEST, self.manifest)


class _Stage:
    def __init__(self, run: _Run, name: str):
        self.run, self.name = run, name
        self.info: dict = {}

    def __enter__(self):
        log.info("stage %s", self.name)
        return self.info

    def __exit__(self, exc_type, exc, tb):
        entry = {"status": "ok" if exc is None else "failed", **self.info}
        if exc is not None:
            entry["error"] = f"{exc_type.__name__}: {exc}"
            self.run.manifest["status"] = "failed"
            self.run.manifest["failed_stage"] = self.name
        self.run.manifest["stages"][self.name] = entry
        self.run.save()
        if exc is not None and not isinstance(exc, PipelineError):
            raise PipelineError(self.name, exc) from exc
        return False


def _read_exclude(path) -> set[str]:
    if not path:
        return set()
    with open(path, encoding="utf-8") as f:
        return {line.strip() for line in f if line.strip() and not line.startswith("#")}


def run_pipeline(cfg: PipelineConfig, force: bool = False) -> Path:
    """Run every stage and return the artifact directory.

    If the directory already holds a successful run with the same config hash
    the call is a no-op unless ``force`` is set.
    """
    out = Path(cfg.out)
    digest = config_hash(cfg)
    manifest_path = out / MANIFEST
    if manifest_path.exists() and not force:
        prev = read_json(manifest_path)
        if prev.get("config_hash") == digest and prev.get("status") == "ok":
            log.info("artifacts in %s are up to date (config %s)", out, digest[:12])
            return out
    out.mkdir(parents=True, exist_ok=True)
    run = _Run(cfg, out, digest)

    with run.stage("filter") as info:
        parsed = read_narrations(cfg.narrations)
        metas = read_video_meta(cfg.meta)
        kept_videos, video_report = filter_videos(metas, _read_exclude(cfg.exclude))
        videos = {m.video_uid: m for m in kept_videos}
        kept, narration_report = filter_narrations(parsed.records(), videos)
        run.jsonl("narrations.filtered.jsonl", (r.to_dict() for r in kept))
        run.jsonl("videos.filtered.jsonl", (m.to_dict() for m in kept_videos))
        run.jsonl("rejected.jsonl", (e.to_dict() for e in parsed.errors))
        run.json(
            "filter_report.json",
            {"parse_errors": len(parsed.errors), "videos": video_report.to_dict(), "narrations": narration_report.to_dict()},
        )
        run.manifest["rejected_records"] = len(parsed.errors)
        info.update(records=len(kept), rejected=len(parsed.errors))

    streams = group_streams(kept)

    with run.stage("pair") as info:
        pcfg = PairingConfig(strategy=cfg.strategy, alpha=cfg.alpha)
        stream_pairs = {
            key: pair_clips(recs, pcfg, videos[key[0]].duration_sec) for key, recs in streams.items()
        }
        pairs = [p for key in stream_pairs for p in stream_pairs[key]]
        info["records"] = run.jsonl("pairs.jsonl", (p.to_dict() for p in pairs))

    with run.stage("sweep") as info:
        lengths = {}
        for strat in Strategy:
            swept = [
                p
                for key, recs in streams.items()
                for p in pair_clips(recs, PairingConfig(strat, cfg.alpha), videos[key[0]].duration_sec)
            ]
            run.jsonl(f"sweep/pairs_{strat.value}.jsonl", (p.to_dict() for p in swept))
            d = np.array([p.duration for p in swept]) if swept else np.zeros(1)
            lengths[strat.value] = {"mean": float(d.mean()), "std": float(d.std()), "count": len(swept)}
        run.json("sweep/clip_lengths.json", lengths)
        info["strategies"] = len(lengths)

    with run.stage("tag") as info:
        tax = Taxonomy.load(cfg.taxonomy)
        tagged_streams = {
            key: [p.with_tags(tag_narration(p.text, tax)) for p in ps] for key, ps in stream_pairs.items()
        }
        tagged = [p for key in tagged_streams for p in tagged_streams[key]]
        info["records"] = run.jsonl("tagged.jsonl", (p.to_dict() for p in tagged))

    with run.stage("mcq") as info:
        chosen = select_annotator(tagged_streams, cfg.annotator_policy, stage_rng(cfg.seed, "mcq.annotator"))
        corpus = [p for key in chosen for p in chosen[key]]
        notes = {}
        for setting in cfg.mcq_settings:
            res = build_mcq(
                corpus, setting, cfg.mcq_count, stage_rng(cfg.seed, f"mcq.{setting}"), cfg.mcq_max_resample
            )
            run.json(f"mcq_{setting}.json", [q.to_dict() for q in res.questions], records=len(res.questions))
            info[f"{setting}_questions"] = len(res.questions)
            notes[setting] = res.warnings
        run.manifest["mcq_warnings"] = notes

    with run.stage("sample") as info:
        draw = sample_batch(
            tagged,
            min(cfg.batch_size, len(tagged)),
            stage_rng(cfg.seed, "sample"),
            negatives=cfg.negatives,
            positives=cfg.positives,
            window_sec=cfg.window_sec,
        )
        run.json("batch.json", draw.to_dict(), records=len(draw.rows))
        info["rows"] = len(draw.rows)

    with run.stage("loss") as info:
        # stand-in embeddings: a fixed random encoder evaluated on the sampled rows
        rng = stage_rng(cfg.seed, "loss")
        m = len(draw.rows)
        v = l2_normalize(rng.standard_normal((m, cfg.embed_dim)))
        t = l2_normalize(v + 0.5 * rng.standard_normal((m, cfg.embed_dim)))
        n = len(draw.anchors)
        base_info = info_nce(v[:n], t[:n], cfg.tau)
        ego = ego_nce(v, t, draw.positives, cfg.tau)
        singleton = ego_nce(v[:n], t[:n], [{i} for i in range(n)], cfg.tau)
        report = {
            "info_nce": base_info.value,
            "ego_nce": ego.value,
            "reduction_gap": abs(singleton.value - base_info.value),
            "grad_err_info_nce": gradient_check(lambda a, b: info_nce(a, b, cfg.tau), [v[:n], t[:n]]),
            "grad_err_ego_nce": gradient_check(lambda a, b: ego_nce(a, b, draw.positives, cfg.tau), [v, t]),
            "positive_pairs": int(sum(len(p) - 1 for p in draw.positives)),
        }
        run.json("loss_check.json", report)
        info.update(report)

    run.manifest["status"] = "ok"
    run.save()
    return out


def verify_manifest(out) -> list[str]:
    """Compare manifest record counts with the files on disk; returns mismatches."""
    out = Path(out)
    manifest = read_json(out / MANIFEST)
    problems = []
    for name, n in manifest["files"].items():
        path = out / name
        if name.endswith(".jsonl"):
            actual = count_lines(path)
        else:
            obj = read_json(path)
            actual = len(obj["anchors"]) + len(obj["negatives"] or []) if name == "batch.json" else len(obj)
        if actual != n:
            problems.append(f"{name}: manifest says {n}, file has {actual}")
    return problems
