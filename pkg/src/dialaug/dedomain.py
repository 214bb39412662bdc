"""Multi-pattern phrase replacement.

A dictionary is compiled into an Aho-Corasick automaton over characters.
One pass over a text collects, for every start offset, the longest term
beginning there; a greedy left-to-right sweep then picks non-overlapping
leftmost-longest spans and replaces each with a single placeholder.

Existing placeholders act as barriers: no match may start, end or pass
through one, which keeps re-application idempotent.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

from .corpus import PLACEHOLDER, Corpus, DialogueExample, tokenize


@dataclass
class _Node:
    children: dict[str, int] = field(default_factory=dict)
    fail: int = 0
    # length of the term ending exactly here, 0 if none
    term_len: int = 0
    # nearest node on the fail chain (excluding self) that ends a term
    dict_link: int = -1


class Matcher:
    """Compiled automaton recognizing exactly a fixed set of terms.

    Build with :func:`compile_matcher`. Instances are read-only after
    construction and safe to share between threads.
    """

    placeholder = PLACEHOLDER

    def __init__(self, terms: Iterable[str]):
        self._terms = frozenset(t for t in terms if t)
        self._nodes: list[_Node] = [_Node()]
        for term in sorted(self._terms):
            self._insert(term)
        self._link()

    @property
    def terms(self) -> frozenset[str]:
        return self._terms

    def __len__(self) -> int:
        return len(self._terms)

    def _insert(self, term: str) -> None:
        cur = 0
        for ch in term:
            nxt = self._nodes[cur].children.get(ch)
            if nxt is None:
                nxt = len(self._nodes)
                self._nodes.append(_Node())
                self._nodes[cur].children[ch] = nxt
            cur = nxt
        self._nodes[cur].term_len = len(term)

    def _link(self) -> None:
        nodes = self._nodes
        queue: deque[int] = deque()
        for child in nodes[0].children.values():
            nodes[child].fail = 0
            queue.append(child)
        while queue:
            cur = queue.popleft()
            for ch, child in nodes[cur].children.items():
                f = nodes[cur].fail
                while f and ch not in nodes[f].children:
                    f = nodes[f].fail
                target = nodes[f].children.get(ch, 0)
                nodes[child].fail = target if target != child else 0
                fnode = nodes[nodes[child].fail]
                nodes[child].dict_link = nodes[child].fail if fnode.term_len else fnode.dict_link
                queue.append(child)

    def accepts(self, term: str) -> bool:
        """True iff ``term`` is one of the compiled terms."""
        cur = 0
        for ch in term:
            cur = self._nodes[cur].children.get(ch, -1)
            if cur < 0:
                return False
        return bool(term) and self._nodes[cur].term_len == len(term)

    __contains__ = accepts

    def longest_at(self, text: str, lo: int = 0, hi: int | None = None) -> dict[int, int]:
        """Map each start offset in ``text[lo:hi]`` to its longest match length."""
        hi = len(text) if hi is None else hi
        nodes = self._nodes
        best: dict[int, int] = {}
        cur = 0
        for i in range(lo, hi):
            ch = text[i]
            while cur and ch not in nodes[cur].children:
                cur = nodes[cur].fail
            cur = nodes[cur].children.get(ch, 0)
            out = cur if nodes[cur].term_len else nodes[cur].dict_link
            while out > 0:
                length = nodes[out].term_len
                start = i + 1 - length
                if length > best.get(start, 0):
                    best[start] = length
                out = nodes[out].dict_link
        return best

    def find(self, text: str) -> list[ReplacementSpan]:
        """Leftmost-longest non-overlapping matches in ``text``."""
        spans: list[ReplacementSpan] = []
        if not self._terms:
            return spans
        for lo, hi in _segments(text):
            best = self.longest_at(text, lo, hi)
            i = lo
            while i < hi:
                length = best.get(i)
                if length:
                    spans.append(ReplacementSpan(i, i + length, text[i:i + length]))
                    i += length
                else:
                    i += 1
        return spans


def _segments(text: str) -> list[tuple[int, int]]:
    """Maximal ranges of ``text`` not covered by a placeholder."""
    out = []
    start = 0
    idx = text.find(PLACEHOLDER)
    while idx >= 0:
        if idx > start:
            out.append((start, idx))
        start = idx + len(PLACEHOLDER)
        idx = text.find(PLACEHOLDER, start)
    if start < len(text):
        out.append((start, len(text)))
    return out


@dataclass(frozen=True)
class ReplacementSpan:
    start: int
    end: int
    matched_term: str

    def __post_init__(self) -> None:
        if not self.start < self.end:
            raise ValueError("span must satisfy start < end")


@dataclass(frozen=True)
class DedomainReport:
    """Replacement audit trail.

    ``spans[i][j]`` holds the spans replaced in utterance ``j`` of example
    ``i`` (context turns first, response last).
    """

    spans: tuple[tuple[tuple[ReplacementSpan, ...], ...], ...] = ()

    @property
    def match_events(self) -> int:
        return sum(len(u) for ex in self.spans for u in ex)

    @property
    def replaced_tokens(self) -> int:
        return sum(len(tokenize(s.matched_term)) for ex in self.spans for u in ex for s in u)

    @property
    def examples_touched(self) -> int:
        return sum(1 for ex in self.spans if any(ex))

    def totals(self) -> dict[str, int]:
        return {"match_events": self.match_events, "replaced_tokens": self.replaced_tokens,
                "examples_touched": self.examples_touched}

    def merge(self, other: DedomainReport) -> DedomainReport:
        return DedomainReport(self.spans + other.spans)

    def to_json(self) -> dict:
        return {
            "totals": self.totals(),
            "examples": [
                [[[s.start, s.end, s.matched_term] for s in utt] for utt in ex]
                for ex in self.spans
            ],
        }


def compile_matcher(dictionary) -> Matcher:
    """Compile a :class:`~dialaug.dictionary.DomainDictionary` or any
    iterable of normalized terms."""
    terms = getattr(dictionary, "terms", dictionary)
    return Matcher(terms)


def _splice(text: str, spans: list[ReplacementSpan]) -> str:
    out: list[str] = []
    pos = 0
    for span in spans:
        out.append(text[pos:span.start])
        # adjacent matches already got their separator from the previous span
        if span.start > 0 and not text[span.start - 1].isspace() and span.start != pos:
            out.append(" ")
        out.append(PLACEHOLDER)
        if span.end < len(text) and not text[span.end].isspace():
            out.append(" ")
        pos = span.end
    out.append(text[pos:])
    return "".join(out)


def dedomain_text(matcher: Matcher, text: str) -> tuple[str, list[ReplacementSpan]]:
    """Replace every leftmost-longest match with the placeholder.

    Spans are offsets into the input. A space is inserted next to the
    placeholder where the neighbouring character is not already whitespace.
    """
    spans = matcher.find(text)
    if not spans:
        return text, spans
    return _splice(text, spans), spans


def dedomain_example(matcher: Matcher, ex: DialogueExample):
    texts, spans = [], []
    for utt in ex.utterances:
        new, found = dedomain_text(matcher, utt.text)
        texts.append(new)
        spans.append(tuple(found))
    return ex.with_texts(texts), tuple(spans)


def dedomain_corpus(matcher: Matcher, corpus: Corpus) -> tuple[Corpus, DedomainReport]:
    out_examples, report = [], []
    for ex in corpus.examples:
        new_ex, spans = dedomain_example(matcher, ex)
        out_examples.append(new_ex)
        report.append(spans)
    return corpus.replace_examples(out_examples), DedomainReport(tuple(report))
