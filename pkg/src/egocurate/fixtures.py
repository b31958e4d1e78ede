"""Deterministic synthetic inputs for the pipeline: narrations, video metadata
and a small taxonomy.

The generated corpus deliberately contains every kind of noise the filters
handle: ``#unsure`` narrations, two-word narrations, a stereo video, an
over-wide video and (optionally) unparseable lines.
"""

import json
from importlib import resources
from pathlib import Path

import numpy as np

from ._io import write_json, write_jsonl

TAXONOMY = {
    "nouns": {
        "phone": ["phone", "cellphone", "mobile phone"],
        "knife": ["knife"],
        "cup": ["cup", "mug"],
        "fridge": ["fridge", "refrigerator"],
        "napkin": ["napkin", "tissue", "wipe"],
        "onion": ["onion"],
        "pan": ["pan", "frying pan"],
        "spoon": ["spoon"],
        "laptop": ["laptop"],
        "mouse": ["mouse"],
        "keyboard": ["keyboard"],
        "book": ["book", "notebook"],
        "plant": ["plant"],
        "hose": ["hose", "garden hose"],
        "soil": ["soil", "dirt"],
        "bucket": ["bucket", "pail"],
    },
    "verbs": {
        "take": ["take", "pick", "grab", "pick up"],
        "put": ["put", "place", "put down"],
        "open": ["open"],
        "close": ["close", "shut"],
        "cut": ["cut", "slice"],
        "wash": ["wash", "rinse"],
        "wipe": ["wipe"],
        "stir": ["stir"],
        "type": ["type"],
        "move": ["move", "drag"],
        "water": ["water"],
        "dig": ["dig"],
    },
}

# scene -> (verbs, nouns, mean narration gap in seconds)
SCENES = {
    "kitchen": (
        ["take", "put", "open", "close", "cut", "wash", "wipe", "stir"],
        ["knife", "cup", "fridge", "napkin", "onion", "pan", "spoon", "phone"],
        2.5,
    ),
    "office": (
        ["take", "put", "open", "close", "type", "move"],
        ["laptop", "mouse", "keyboard", "book", "phone", "cup"],
        6.0,
    ),
    "garden": (
        ["take", "put", "water", "dig", "move", "wash"],
        ["plant", "hose", "soil", "bucket", "phone"],
        9.0,
    ),
}

FIXTURE_SEED = 7


def _sentence(rng, verb: str, noun: str) -> str:
    v_form = str(rng.choice(TAXONOMY["verbs"][verb]))
    n_form = str(rng.choice(TAXONOMY["nouns"][noun]))
    words = v_form.split()
    # third person singular on the head verb
    head = words[0]
    if head.endswith(("sh", "ch", "s", "x")):
        head += "es"
    else:
        head += "s"
    tail = rng.choice(["", " with the left hand", " on the table", " with both hands"])
    return f"#C C {' '.join([head] + words[1:])} the {n_form}{tail}."


def generate_fixture(
    seed: int = FIXTURE_SEED,
    videos_per_scene: int = 3,
    duration_range: tuple[float, float] = (240.0, 720.0),
    malformed_lines: int = 1,
) -> dict:
    """Build the fixture in memory: ``{"narrations": [...lines], "meta": [...], "taxonomy": {...}}``."""
    rng = np.random.default_rng(seed)
    lines: list[str] = []
    meta: list[dict] = []
    for scene, (verbs, nouns, gap) in SCENES.items():
        for k in range(videos_per_scene):
            uid = f"{scene}-{k:02d}"
            duration = float(np.round(rng.uniform(*duration_range), 2))
            meta.append(
                {"video_uid": uid, "duration_sec": duration, "width_px": 1920, "height_px": 1080, "is_stereo": False}
            )
            for annotator in ("1", "2"):
                t = float(np.round(rng.uniform(0.5, 3.0), 2))
                while t < duration:
                    r = rng.random()
                    if r < 0.04:
                        text = "#C C washes #unsure in sink"
                    elif r < 0.07:
                        text = str(rng.choice(["#C C speaks", "#C C looks", "#C C walks around"]))
                    else:
                        text = _sentence(rng, str(rng.choice(verbs)), str(rng.choice(nouns)))
                    lines.append(
                        json.dumps(
                            {"video_uid": uid, "annotator_id": annotator, "timestamp_sec": t, "text": text},
                            sort_keys=True,
                        )
                    )
                    t = float(np.round(t + rng.exponential(gap) + 0.2, 2))
    # a stereo recording (kept at half width) and an over-wide one (dropped)
    extra = [
        ("stereo-00", 3840, 1080, True, "kitchen"),
        ("wide-00", 2400, 1080, False, "office"),
    ]
    for uid, w, h, stereo, scene in extra:
        verbs, nouns, gap = SCENES[scene]
        meta.append({"video_uid": uid, "duration_sec": 120.0, "width_px": w, "height_px": h, "is_stereo": stereo})
        t = 1.0
        while t < 120.0:
            text = _sentence(rng, str(rng.choice(verbs)), str(rng.choice(nouns)))
            lines.append(
                json.dumps({"video_uid": uid, "annotator_id": "1", "timestamp_sec": t, "text": text}, sort_keys=True)
            )
            t = float(np.round(t + rng.exponential(gap) + 0.2, 2))
    for j in range(malformed_lines):
        pos = int(rng.integers(len(lines) + 1))
        lines.insert(pos, '{"video_uid": "kitchen-00", "timestamp_sec": ')
    return {"narrations": lines, "meta": meta, "taxonomy": TAXONOMY}


def write_fixture(out_dir, seed: int = FIXTURE_SEED, **kwargs) -> dict[str, Path]:
    """Write ``narrations.jsonl``, ``meta.jsonl`` and ``taxonomy.json`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fx = generate_fixture(seed, **kwargs)
    paths = {
        "narrations": out / "narrations.jsonl",
        "meta": out / "meta.jsonl",
        "taxonomy": out / "taxonomy.json",
    }
    paths["narrations"].write_text("\n".join(fx["narrations"]) + "\n", encoding="utf-8")
    write_jsonl(paths["meta"], fx["meta"])
    write_json(paths["taxonomy"], fx["taxonomy"])
    return paths


def bundled_fixture() -> dict[str, Path]:
    """Paths of the fixture shipped with the package (seed 7)."""
    base = Path(str(resources.files("egocurate") / "data" / "fixture"))
    return {
        "narrations": base / "narrations.jsonl",
        "meta": base / "meta.jsonl",
        "taxonomy": base / "taxonomy.json",
    }
