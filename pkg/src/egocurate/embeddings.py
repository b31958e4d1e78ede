"""Embedding matrix I/O.

Two formats are supported:

* ``.jsonl``: one row per pair, ``{"id": ..., "video_vec": [...], "text_vec": [...]}``.
* ``.bin``: little-endian float32, the ``n x d`` video matrix followed by the
  ``n x d`` text matrix, with a sidecar ``<name>.json`` holding ``{"n": n, "d": d}``.
"""

from pathlib import Path

import numpy as np

from ._io import iter_jsonl, read_json, write_json, write_jsonl

_LE_F32 = np.dtype("<f4")


def _sidecar(path: Path) -> Path:
    return path.with_suffix(".json")


def save_embeddings(path, video: np.ndarray, text: np.ndarray, ids=None) -> None:
    path = Path(path)
    video = np.asarray(video, dtype=np.float64)
    text = np.asarray(text, dtype=np.float64)
    if video.shape != text.shape or video.ndim != 2:
        raise ValueError(f"video {video.shape} and text {text.shape} must be equal 2-D shapes")
    n, d = video.shape
    if path.suffix == ".bin":
        path.parent.mkdir(parents=True, exist_ok=True)
        np.concatenate([video, text]).astype(_LE_F32).tofile(path)
        write_json(_sidecar(path), {"n": n, "d": d})
        return
    ids = list(range(n)) if ids is None else list(ids)
    write_jsonl(
        path,
        ({"id": i, "video_vec": v.tolist(), "text_vec": t.tolist()} for i, v, t in zip(ids, video, text)),
    )


def load_embeddings(path) -> tuple[list, np.ndarray, np.ndarray]:
    """Return ``(ids, video, text)``; binary files get ids ``0..n-1``."""
    path = Path(path)
    if path.suffix == ".bin":
        header = read_json(_sidecar(path))
        n, d = int(header["n"]), int(header["d"])
        flat = np.fromfile(path, dtype=_LE_F32)
        if flat.size != 2 * n * d:
            raise ValueError(f"{path}: expected {2 * n * d} float32 values, found {flat.size}")
        mats = flat.astype(np.float64).reshape(2, n, d)
        return list(range(n)), mats[0], mats[1]
    ids, vs, ts = [], [], []
    for row in iter_jsonl(path):
        ids.append(row["id"])
        vs.append(row["video_vec"])
        ts.append(row["text_vec"])
    if not ids:
        raise ValueError(f"{path}: no embeddings")
    return ids, np.array(vs, dtype=np.float64), np.array(ts, dtype=np.float64)
