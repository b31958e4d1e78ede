"""Small JSON / JSONL helpers shared by every stage.

All writers sort keys and terminate files with a newline so that two runs over
the same inputs produce byte-identical files.
"""

import json
import os
from pathlib import Path
from typing import Any, Iterable, Iterator


def dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, allow_nan=False)


def write_json(path: os.PathLike | str, obj: Any) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False)
        f.write("\n")


def read_json(path: os.PathLike | str) -> Any:
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def write_jsonl(path: os.PathLike | str, rows: Iterable[dict]) -> int:
    """Write one JSON object per line; returns the number of lines written."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with open(path, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(dumps(row))
            f.write("\n")
            n += 1
    return n


def iter_jsonl(path: os.PathLike | str) -> Iterator[dict]:
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                yield json.loads(line)


def read_jsonl(path: os.PathLike | str) -> list[dict]:
    return list(iter_jsonl(path))


def count_lines(path: os.PathLike | str) -> int:
    with open(path, encoding="utf-8") as f:
        return sum(1 for line in f if line.strip())
