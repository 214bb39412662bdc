"""Slow, obviously-correct reference implementations used by the tests.

None of these import the code under test except for plain data types.
"""

from __future__ import annotations

import hashlib
import itertools
import math
import re
from collections import Counter

PH = "$P"
MASK64 = (1 << 64) - 1


# --- de-domaining ---------------------------------------------------------

def placeholder_cells(text: str) -> set[int]:
    cells = set()
    for m in re.finditer(re.escape(PH), text):
        cells.update(range(m.start(), m.end()))
    return cells


def all_matches(text: str, terms) -> list[tuple[int, int]]:
    """Every (start, end) where some term occurs, avoiding placeholder cells."""
    blocked = placeholder_cells(text)
    out = []
    for i in range(len(text)):
        for j in range(i + 1, len(text) + 1):
            if text[i:j] in terms and not blocked & set(range(i, j)):
                out.append((i, j))
    return out


def leftmost_longest(text: str, terms) -> list[tuple[int, int]]:
    """Greedy scan over the full enumeration of candidate matches."""
    cands = all_matches(text, set(terms))
    chosen, pos = [], 0
    while True:
        rest = [c for c in cands if c[0] >= pos]
        if not rest:
            return chosen
        start = min(c[0] for c in rest)
        end = max(c[1] for c in rest if c[0] == start)
        chosen.append((start, end))
        pos = end


CASE_ALPHABET = ["a", "b", "c", " ", "$", "P", "好", "$P"]


def random_dedomain_case(rng):
    """A normalized text of at most 40 chars and a dictionary of at most 8 terms."""
    text = " ".join("".join(rng.choice(CASE_ALPHABET) for _ in range(rng.randint(0, 30))).split())
    text = text.lower().replace("$p", "$P")[:40].strip()
    terms = set()
    for _ in range(rng.randint(0, 8)):
        t = " ".join("".join(rng.choice(CASE_ALPHABET[:-1]) for _ in range(rng.randint(1, 4))).split())
        t = t.lower().replace("$p", "$P")
        if t and PH not in t:
            terms.add(t)
    return text, terms


def dedomain_oracle(text: str, terms) -> tuple[str, list[tuple[int, int, str]]]:
    spans = leftmost_longest(text, terms)
    marked = text
    for s, e in reversed(spans):
        marked = marked[:s] + "\0" + marked[e:]
    marked = re.sub(r"(?<=\S)\0", " \0", marked)
    marked = re.sub(r"\0(?=\S)", "\0 ", marked)
    return marked.replace("\0", PH), [(s, e, text[s:e]) for s, e in spans]


# --- n-grams --------------------------------------------------------------

def sliding_ngrams(utterances, n):
    grams = Counter()
    for toks in utterances:
        for i in range(len(toks)):
            window = toks[i:i + n]
            if len(window) == n:
                grams[tuple(window)] += 1
    return grams


def set_recall(a_utts, b_utts, n) -> float:
    a = set(sliding_ngrams(a_utts, n))
    b = set(sliding_ngrams(b_utts, n))
    return 0.0 if not b else 100.0 * len(a & b) / len(b)


# --- PRNG -----------------------------------------------------------------

class RefSplitMix:
    """Reference SplitMix64 (Steele, Lea and Flood's finalizer constants)."""

    def __init__(self, seed):
        self.x = seed & MASK64

    def next(self):
        self.x = (self.x + 0x9E3779B97F4A7C15) & MASK64
        z = self.x
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def bounded(self, n):
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            v = self.next()
            if v < limit:
                return v % n


def ref_sample(n, k, seed):
    rng = RefSplitMix(seed)
    pool = list(range(n))
    for i in range(k):
        j = i + rng.bounded(n - i)
        pool[i], pool[j] = pool[j], pool[i]
    return sorted(pool[:k])


def ref_subseed(seed, label):
    return int.from_bytes(hashlib.sha256(f"{seed}:{label}".encode()).digest()[:8], "big")


# --- metrics --------------------------------------------------------------

def brute_lcs(a, b) -> int:
    """Longest common subsequence by trying every subsequence of the shorter side."""
    short, long_ = (a, b) if len(a) <= len(b) else (b, a)
    for r in range(len(short), 0, -1):
        for idx in itertools.combinations(range(len(short)), r):
            sub = [short[i] for i in idx]
            it = iter(long_)
            if all(any(x == y for y in it) for x in sub):
                return r
    return 0


def cosine(u, v) -> float:
    dot = sum(x * y for x, y in zip(u, v))
    nu = math.sqrt(sum(x * x for x in u))
    nv = math.sqrt(sum(x * x for x in v))
    return dot / (nu * nv)
