"""N-gram profiles and cross-domain n-gram recall.

``ngram_similarity(a, b, n)`` is the share of ``b``'s n-grams that also
occur in ``a``, scaled to 0..100. ``similarity_table`` averages it over
every other domain to give one O2X row per target domain.
"""

from __future__ import annotations

import json
import warnings
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .corpus import Corpus, tokenize

PROFILE_HEADER = "#ngram-profile v1"
LEVEL_NAMES = ("Uni", "Bi", "Tri", "Quad")


class EmptyReferenceWarning(UserWarning):
    """The reference profile has no n-grams at the requested level."""


def ngrams(tokens: Sequence[str], n: int):
    return (tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


@dataclass(frozen=True)
class NgramProfile:
    domain: str
    max_n: int = 4
    levels: dict[int, Counter] = field(default_factory=dict)
    dedomained: bool = True

    def __post_init__(self) -> None:
        levels = {n: Counter(self.levels.get(n, ())) for n in range(1, self.max_n + 1)}
        for n, counter in levels.items():
            for gram, count in counter.items():
                if len(gram) != n or count < 1:
                    raise ValueError(f"bad {n}-gram entry {gram!r}: {count}")
        object.__setattr__(self, "levels", levels)

    def grams(self, n: int) -> Counter:
        if n not in self.levels:
            raise ValueError(f"n must lie in 1..{self.max_n}, got {n}")
        return self.levels[n]


def build_profile(corpus: Corpus, max_n: int = 4, dedomained: bool = True) -> NgramProfile:
    """Count n-grams of every utterance; n-grams never span two utterances."""
    levels = {n: Counter() for n in range(1, max_n + 1)}
    for ex in corpus.examples:
        for utt in ex.utterances:
            toks = tokenize(utt.text).tokens
            for n in range(1, max_n + 1):
                levels[n].update(ngrams(toks, n))
    return NgramProfile(corpus.domain, max_n, levels, dedomained)


def ngram_similarity(a: NgramProfile, b: NgramProfile, n: int, weighted: bool = False) -> float:
    """Recall of ``b``'s n-grams by ``a`` on a 0..100 scale.

    By default n-gram types are counted; ``weighted`` weights each n-gram
    by its count in ``b``. An empty level in ``b`` scores 0 and warns.
    """
    a_n, b_n = a.grams(n), b.grams(n)
    if weighted:
        denom = sum(b_n.values())
        overlap = sum(c for g, c in b_n.items() if g in a_n)
    else:
        denom = len(b_n)
        overlap = sum(1 for g in b_n if g in a_n)
    if denom == 0:
        warnings.warn(f"domain {b.domain!r} has no {n}-grams", EmptyReferenceWarning,
                      stacklevel=2)
        return 0.0
    return 100.0 * overlap / denom


@dataclass(frozen=True)
class SimilarityTable:
    """``scores[domain][n - 1]`` is the O2domain score for n-grams."""

    scores: dict[str, tuple[float, ...]]
    weighted: bool = False
    empty_levels: tuple[tuple[str, int], ...] = ()

    def __post_init__(self) -> None:
        for d, row in self.scores.items():
            if any(not 0.0 <= v <= 100.0 for v in row):
                raise ValueError(f"score out of range for {d!r}: {row}")

    def row(self, domain: str) -> tuple[float, ...]:
        return self.scores[domain]

    def to_json(self) -> dict:
        max_n = max((len(r) for r in self.scores.values()), default=4)
        columns = [LEVEL_NAMES[i] if i < len(LEVEL_NAMES) else f"{i + 1}-gram"
                   for i in range(max_n)]
        rows = [{"domain": f"O2{d}", **{c: round(v, 2) for c, v in zip(columns, row)}}
                for d, row in self.scores.items()]
        return {"version": 1, "mode": "weighted" if self.weighted else "type",
                "columns": columns, "rows": rows,
                "empty_levels": [list(x) for x in self.empty_levels]}


def similarity_table(profiles: Sequence[NgramProfile], weighted: bool = False) -> SimilarityTable:
    if len(profiles) < 2:
        raise ValueError("need at least two domain profiles")
    labels = [p.domain for p in profiles]
    dupes = sorted({d for d in labels if labels.count(d) > 1})
    if dupes:
        raise ValueError(f"duplicate domain labels: {', '.join(dupes)}")
    max_n = min(p.max_n for p in profiles)
    scores: dict[str, tuple[float, ...]] = {}
    empty = []
    for target in profiles:
        row = []
        for n in range(1, max_n + 1):
            if not target.grams(n):
                empty.append((target.domain, n))
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", EmptyReferenceWarning)
                vals = [ngram_similarity(other, target, n, weighted)
                        for other in profiles if other is not target]
            row.append(sum(vals) / len(vals))
        scores[target.domain] = tuple(row)
    return SimilarityTable(scores, weighted, tuple(empty))


def dump_profile(profile: NgramProfile) -> str:
    lines = [f"{PROFILE_HEADER}\t{profile.domain}\t{profile.max_n}\t{int(profile.dedomained)}"]
    for n in range(1, profile.max_n + 1):
        for gram, count in sorted(profile.levels[n].items()):
            lines.append(f"{n}\t{count}\t{' '.join(gram)}")
    return "\n".join(lines) + "\n"


def save_profile(profile: NgramProfile, path: str | Path) -> None:
    Path(path).write_text(dump_profile(profile), encoding="utf-8")


def load_profile(path: str | Path) -> NgramProfile:
    with Path(path).open(encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if header[0] != PROFILE_HEADER or len(header) != 4:
            raise ValueError(f"{path}: not an n-gram profile (bad header)")
        domain, max_n, dedomained = header[1], int(header[2]), bool(int(header[3]))
        levels: dict[int, Counter] = {n: Counter() for n in range(1, max_n + 1)}
        for lineno, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3:
                raise ValueError(f"{path}:line {lineno}: expected 3 tab-separated fields")
            levels[int(parts[0])][tuple(parts[2].split(" "))] = int(parts[1])
    return NgramProfile(domain, max_n, levels, dedomained)


def table_json(table: SimilarityTable) -> str:
    return json.dumps(table.to_json(), ensure_ascii=False, sort_keys=True, indent=2) + "\n"
