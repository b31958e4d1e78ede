import filecmp
import json
from pathlib import Path

import numpy as np
import pytest

from egocurate._io import read_json, read_jsonl
from egocurate.fixtures import bundled_fixture, generate_fixture, write_fixture
from egocurate.pipeline import PipelineConfig, PipelineError, config_hash, run_pipeline, stage_rng, verify_manifest

FIXTURE_DIR = bundled_fixture()["narrations"].parent


def config(out, **kw):
    return PipelineConfig.from_toml(FIXTURE_DIR / "pipeline.toml", out=str(out), **kw)


@pytest.fixture(scope="module")
def artifacts(tmp_path_factory):
    return run_pipeline(config(tmp_path_factory.mktemp("run")))


def tree(root):
    return sorted(p.relative_to(root).as_posix() for p in Path(root).rglob("*") if p.is_file())


def test_byte_identical_reruns(artifacts, tmp_path):
    second = run_pipeline(config(tmp_path / "again"))
    names = tree(artifacts)
    assert names == tree(second)
    match, mismatch, errors = filecmp.cmpfiles(artifacts, second, names, shallow=False)
    assert mismatch == [] and errors == []


def test_manifest(artifacts):
    m = read_json(artifacts / "manifest.json")
    assert m["status"] == "ok"
    assert m["rejected_records"] == 1
    assert set(m["stages"]) == {"filter", "pair", "sweep", "tag", "mcq", "sample", "loss"}
    assert verify_manifest(artifacts) == []
    assert set(m["versions"]) == {"egocurate", "numpy", "python"}


def test_filter_report_reconciles(artifacts):
    rep = read_json(artifacts / "filter_report.json")
    for cat in ("videos", "narrations"):
        r = rep[cat]
        assert r["retained"] + sum(r["dropped"].values()) == r["input_total"]
    assert rep["videos"]["dropped"] == {"aspect_ratio": 1}
    assert rep["videos"]["flagged"] == {"stereo_halved": 1}


def test_loss_stage(artifacts):
    rep = read_json(artifacts / "loss_check.json")
    assert rep["reduction_gap"] <= 1e-12
    assert rep["grad_err_info_nce"] <= 1e-6 and rep["grad_err_ego_nce"] <= 1e-6


def test_sweep_lengths(artifacts):
    lengths = read_json(artifacts / "sweep" / "clip_lengths.json")
    for s in "abcdef":
        pairs = read_jsonl(artifacts / "sweep" / f"pairs_{s}.jsonl")
        d = np.array([p["t_end"] - p["t_start"] for p in pairs])
        assert lengths[s]["mean"] == pytest.approx(d.mean(), rel=1e-12)
    # fixed-length strategies barely vary; beta-based ones follow the pace of each video
    assert lengths["a"]["std"] < lengths["d"]["std"]
    assert lengths["f"]["mean"] == pytest.approx(lengths["d"]["mean"] / 4.9, rel=0.05)
    assert lengths["e"]["mean"] == pytest.approx(lengths["d"]["mean"] / 2, rel=0.05)
    assert lengths["f"]["mean"] < lengths["e"]["mean"] < lengths["d"]["mean"] < lengths["c"]["mean"]


def test_noop_unless_forced(tmp_path):
    out = run_pipeline(config(tmp_path / "r"))
    manifest = out / "manifest.json"
    (out / "pairs.jsonl").write_text("")
    run_pipeline(config(tmp_path / "r"))
    assert (out / "pairs.jsonl").read_text() == ""
    run_pipeline(config(tmp_path / "r"), force=True)
    assert (out / "pairs.jsonl").read_text() != ""
    assert verify_manifest(out) == []
    # a changed setting is a different config hash and re-runs
    before = read_json(manifest)["config_hash"]
    run_pipeline(config(tmp_path / "r", strategy="d"))
    assert read_json(manifest)["config_hash"] != before


def test_config_hash_tracks_inputs(tmp_path):
    paths = write_fixture(tmp_path / "fx")
    cfg = PipelineConfig(str(paths["narrations"]), str(paths["meta"]), str(paths["taxonomy"]), out=str(tmp_path / "o"))
    h = config_hash(cfg)
    with open(paths["narrations"], "a") as f:
        f.write('{"video_uid": "kitchen-00", "timestamp_sec": 1.0, "text": "#C C takes the cup"}\n')
    assert config_hash(cfg) != h


def test_stage_failure_names_stage(tmp_path):
    paths = write_fixture(tmp_path / "fx")
    paths["taxonomy"].write_text('{"nouns": {"a": ["x"], "b": ["x"]}}')
    cfg = PipelineConfig(str(paths["narrations"]), str(paths["meta"]), str(paths["taxonomy"]), out=str(tmp_path / "o"))
    with pytest.raises(PipelineError) as e:
        run_pipeline(cfg)
    assert e.value.stage == "tag"
    m = read_json(tmp_path / "o" / "manifest.json")
    assert m["status"] == "failed" and m["failed_stage"] == "tag"
    assert m["stages"]["pair"]["status"] == "ok"


def test_config_validation(tmp_path):
    with pytest.raises(ValueError):
        PipelineConfig("a", "b", "c", seed=-1)
    with pytest.raises(ValueError):
        PipelineConfig("a", "b", "c", seed=2**64)
    with pytest.raises(ValueError):
        PipelineConfig("a", "b", "c", strategy="z")
    bad = tmp_path / "c.toml"
    bad.write_text("colour = 'red'\n")
    with pytest.raises(ValueError, match="unknown config keys"):
        PipelineConfig.from_toml(bad)


def test_overrides_win():
    cfg = config("x", seed=11, strategy="b")
    assert (cfg.seed, cfg.strategy) == (11, "b")
    assert Path(cfg.narrations).is_absolute()


def test_stage_streams_independent():
    a = stage_rng(7, "mcq.inter").random(3)
    assert np.array_equal(a, stage_rng(7, "mcq.inter").random(3))
    assert not np.array_equal(a, stage_rng(7, "sample").random(3))


def test_bundled_fixture_is_seed_seven():
    fx = generate_fixture()
    lines = bundled_fixture()["narrations"].read_text().splitlines()
    assert lines == fx["narrations"]
    meta = [json.loads(l) for l in bundled_fixture()["meta"].read_text().splitlines()]
    assert meta == fx["meta"]
