"""Dictionary-driven verb/noun tagging.

A :class:`Taxonomy` holds canonical noun and verb groups, each with a list of
synonymous surface forms. A word is a verb or a noun only because the
taxonomy lists it; there is no statistical POS tagging. Regular English
inflections (``take`` -> ``takes``/``taking``, ``knife`` -> ``knifes``) of each
listed form are accepted as well, since narrations are written in the third
person present.

Taxonomy files are JSON::

    {"nouns": {"phone": ["phone", "cellphone"]}, "verbs": {"take": ["take", "pick"]}}
"""

import json
import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

_TOKEN = re.compile(r"[a-z0-9]+")
_VOWELS = set("aeiou")


class TaxonomyError(ValueError):
    pass


class TaxonomyMismatchError(ValueError):
    pass


def tokenize(text: str) -> list[str]:
    """Lowercase word tokens with annotator tags removed.

    ``#C``/``#O`` and the subject token after them are dropped, as is any other
    ``#tag``; punctuation separates tokens.
    """
    raw = text.lower().split()
    if raw and raw[0] in ("#c", "#o"):
        raw = raw[2:]
    out = []
    for tok in raw:
        if tok.startswith("#"):
            continue
        out.extend(_TOKEN.findall(tok))
    return out


def inflections(word: str) -> set[str]:
    forms = {word, word + "s", word + "es", word + "ed", word + "ing"}
    if word.endswith("e"):
        forms |= {word + "d", word[:-1] + "ing"}
    if len(word) > 1 and word.endswith("y") and word[-2] not in _VOWELS:
        forms |= {word[:-1] + "ies", word[:-1] + "ied"}
    if word.endswith("f"):
        forms.add(word[:-1] + "ves")
    if word.endswith("fe"):
        forms.add(word[:-2] + "ves")
    if (
        len(word) >= 3
        and word[-1] not in _VOWELS | set("wxy")
        and word[-2] in _VOWELS
        and word[-3] not in _VOWELS
    ):
        forms |= {word + word[-1] + "ing", word + word[-1] + "ed"}
    return forms


def _compile(groups, inflect_at: int) -> tuple[dict[tuple[str, ...], int], int]:
    """Map token tuples to group index. Listed forms beat inflected ones."""
    explicit: dict[tuple[str, ...], int] = {}
    for gi, (canon, syns) in enumerate(groups):
        for form in [canon, *syns]:
            toks = tuple(tokenize(form))
            if not toks:
                raise TaxonomyError(f"group {canon!r} has an empty surface form {form!r}")
            owner = explicit.get(toks)
            if owner is not None and owner != gi:
                raise TaxonomyError(
                    f"surface form {form!r} appears in groups {groups[owner][0]!r} and {canon!r}"
                )
            explicit[toks] = gi
    table = {}
    for toks, gi in sorted(explicit.items(), key=lambda kv: (kv[1], kv[0])):
        pos = inflect_at if inflect_at >= 0 else len(toks) + inflect_at
        for w in sorted(inflections(toks[pos])):
            table.setdefault(toks[:pos] + (w,) + toks[pos + 1 :], gi)
    table.update(explicit)
    longest = max((len(k) for k in table), default=0)
    return table, longest


def _match(tokens: Sequence[str], table: dict, longest: int) -> list[tuple[int, int]]:
    """Greedy longest match, left to right, non-overlapping: [(position, group)]."""
    hits = []
    i = 0
    while i < len(tokens):
        for span in range(min(longest, len(tokens) - i), 0, -1):
            gi = table.get(tuple(tokens[i : i + span]))
            if gi is not None:
                hits.append((i, gi))
                i += span
                break
        else:
            i += 1
    return hits


@dataclass(frozen=True, eq=False)
class TagVector:
    noun_vec: np.ndarray
    verb_vec: np.ndarray
    first_noun: int | None = None
    first_verb: int | None = None

    @property
    def noun_ids(self) -> list[int]:
        return np.flatnonzero(self.noun_vec).tolist()

    @property
    def verb_ids(self) -> list[int]:
        return np.flatnonzero(self.verb_vec).tolist()

    @property
    def dedup_tag(self) -> tuple[int | None, int | None]:
        """(first verb, first noun); ``None`` marks a missing component."""
        return self.first_verb, self.first_noun

    def __eq__(self, other):
        if not isinstance(other, TagVector):
            return NotImplemented
        return (
            np.array_equal(self.noun_vec, other.noun_vec)
            and np.array_equal(self.verb_vec, other.verb_vec)
            and self.first_noun == other.first_noun
            and self.first_verb == other.first_verb
        )

    def to_dict(self) -> dict:
        return {
            "noun_ids": self.noun_ids,
            "verb_ids": self.verb_ids,
            "first_noun": self.first_noun,
            "first_verb": self.first_verb,
            "k_nouns": int(self.noun_vec.size),
            "k_verbs": int(self.verb_vec.size),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TagVector":
        nv = np.zeros(int(d["k_nouns"]), dtype=np.uint8)
        vv = np.zeros(int(d["k_verbs"]), dtype=np.uint8)
        nv[list(d["noun_ids"])] = 1
        vv[list(d["verb_ids"])] = 1
        return cls(nv, vv, d.get("first_noun"), d.get("first_verb"))

    @classmethod
    def empty(cls, k_nouns: int, k_verbs: int) -> "TagVector":
        return cls(np.zeros(k_nouns, dtype=np.uint8), np.zeros(k_verbs, dtype=np.uint8))


@dataclass(frozen=True)
class Taxonomy:
    noun_groups: list[tuple[str, list[str]]]
    verb_groups: list[tuple[str, list[str]]]
    _nouns: tuple = field(init=False, repr=False, compare=False)
    _verbs: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for kind, groups in (("noun", self.noun_groups), ("verb", self.verb_groups)):
            labels = [g[0] for g in groups]
            if len(set(labels)) != len(labels):
                raise TaxonomyError(f"duplicate canonical {kind} labels")
        # nouns are inflected on their head (last) word, verbs on the first
        object.__setattr__(self, "_nouns", _compile(self.noun_groups, -1))
        object.__setattr__(self, "_verbs", _compile(self.verb_groups, 0))

    @property
    def n_nouns(self) -> int:
        return len(self.noun_groups)

    @property
    def n_verbs(self) -> int:
        return len(self.verb_groups)

    def noun_label(self, idx: int | None) -> str | None:
        return None if idx is None else self.noun_groups[idx][0]

    def verb_label(self, idx: int | None) -> str | None:
        return None if idx is None else self.verb_groups[idx][0]

    @classmethod
    def from_dict(cls, d: dict) -> "Taxonomy":
        return cls(
            noun_groups=[(k, list(v)) for k, v in d.get("nouns", {}).items()],
            verb_groups=[(k, list(v)) for k, v in d.get("verbs", {}).items()],
        )

    @classmethod
    def load(cls, path) -> "Taxonomy":
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))

    def to_dict(self) -> dict:
        return {
            "nouns": {k: list(v) for k, v in self.noun_groups},
            "verbs": {k: list(v) for k, v in self.verb_groups},
        }

    def tag(self, text: str) -> TagVector:
        return tag_narration(text, self)


def tag_narration(text: str, tax: Taxonomy) -> TagVector:
    """Set one bit per matched noun/verb group and record the first of each.

    Nouns and verbs are matched independently, so a form listed in both
    classes (e.g. "wipe") sets a bit in each.
    """
    tokens = tokenize(text)
    noun_hits = _match(tokens, *tax._nouns)
    verb_hits = _match(tokens, *tax._verbs)
    nv = np.zeros(tax.n_nouns, dtype=np.uint8)
    vv = np.zeros(tax.n_verbs, dtype=np.uint8)
    for _, g in noun_hits:
        nv[g] = 1
    for _, g in verb_hits:
        vv[g] = 1
    return TagVector(
        nv,
        vv,
        first_noun=noun_hits[0][1] if noun_hits else None,
        first_verb=verb_hits[0][1] if verb_hits else None,
    )


def positive_score(a: TagVector, b: TagVector) -> int:
    """Shared-noun count times shared-verb count; > 0 iff both overlap."""
    if a.noun_vec.shape != b.noun_vec.shape or a.verb_vec.shape != b.verb_vec.shape:
        raise TaxonomyMismatchError(
            f"tag vectors come from different taxonomies: "
            f"nouns {a.noun_vec.size} vs {b.noun_vec.size}, verbs {a.verb_vec.size} vs {b.verb_vec.size}"
        )
    nouns = int(np.dot(a.noun_vec.astype(np.int64), b.noun_vec))
    verbs = int(np.dot(a.verb_vec.astype(np.int64), b.verb_vec))
    return nouns * verbs


def tag_matrices(tags: Sequence[TagVector]) -> tuple[np.ndarray, np.ndarray]:
    """Stack tag vectors into (rows x K1) noun and (rows x K2) verb int matrices."""
    if not tags:
        return np.zeros((0, 0), dtype=np.int64), np.zeros((0, 0), dtype=np.int64)
    k1 = {t.noun_vec.size for t in tags}
    k2 = {t.verb_vec.size for t in tags}
    if len(k1) > 1 or len(k2) > 1:
        raise TaxonomyMismatchError("tag vectors come from different taxonomies")
    return (
        np.stack([t.noun_vec for t in tags]).astype(np.int64),
        np.stack([t.verb_vec for t in tags]).astype(np.int64),
    )
