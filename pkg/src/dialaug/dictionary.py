"""Domain keyword dictionaries: extraction prompts, term ingestion, merging
and coverage statistics."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import PLACEHOLDER, Corpus, normalize_text
from .dedomain import compile_matcher, dedomain_corpus

log = logging.getLogger(__name__)

PROVENANCES = ("llm", "termbank", "manual")
# higher wins on conflict
_PRECEDENCE = {"llm": 0, "termbank": 1, "manual": 2}

PROMPT_TEMPLATES = {
    "zh": "文本是{context}.领域是{domain}. 请输出 {domain}关键词. ",
    "en": "The context is {context}. The domain is {domain}. "
          "Please output keywords related to {domain}",
}


@dataclass(frozen=True)
class DictEntry:
    term: str
    provenance: str = "llm"

    def __post_init__(self) -> None:
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if not self.term or self.term != self.term.strip():
            raise ValueError(f"invalid term {self.term!r}")
        if PLACEHOLDER in self.term or "\n" in self.term:
            raise ValueError(f"term may not contain a newline or {PLACEHOLDER}: {self.term!r}")


@dataclass(frozen=True)
class DomainDictionary:
    domain: str
    entries: Mapping[str, DictEntry] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", dict(self.entries))
        for term, entry in self.entries.items():
            if term != entry.term:
                raise ValueError(f"entry key {term!r} does not match term {entry.term!r}")

    @classmethod
    def from_entries(cls, domain: str, entries: Iterable[DictEntry]) -> DomainDictionary:
        out: dict[str, DictEntry] = {}
        for e in entries:
            prev = out.get(e.term)
            if prev is None or _PRECEDENCE[e.provenance] > _PRECEDENCE[prev.provenance]:
                out[e.term] = e
        return cls(domain, out)

    @property
    def terms(self) -> frozenset[str]:
        return frozenset(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, term: str) -> bool:
        return term in self.entries


@dataclass(frozen=True)
class DictStats:
    keyword_count: int
    coverage: float
    replaced_tokens: int
    match_events: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.coverage <= 1.0:
            raise ValueError("coverage must lie in [0, 1]")

    def to_json(self) -> dict:
        return {"keyword_count": self.keyword_count, "coverage": self.coverage,
                "replaced_tokens": self.replaced_tokens, "match_events": self.match_events}


def emit_extraction_prompts(corpus: Corpus, domain: str, language: str = "zh",
                            templates: Mapping[str, str] = PROMPT_TEMPLATES) -> list[str]:
    """One keyword-extraction prompt per example, context and response
    joined into the context slot."""
    if not domain:
        raise ValueError("domain must be non-empty")
    template = templates[language]
    return [template.format(context=ex.joined_text(), domain=domain) for ex in corpus.examples]


def prompt_records(prompts: Sequence[str]) -> str:
    return "".join(json.dumps({"example_id": i, "prompt": p}, ensure_ascii=False) + "\n"
                   for i, p in enumerate(prompts))


def _clean_term(raw: str) -> str | None:
    term = normalize_text(raw)
    if not term or PLACEHOLDER in term:
        return None
    return term


def ingest_terms(lines: Iterable[str], provenance: str = "llm") -> list[DictEntry]:
    """Normalize raw keyword lines, dropping empties, duplicates and
    anything containing the placeholder. First-seen order is kept."""
    seen: set[str] = set()
    entries: list[DictEntry] = []
    total = 0
    for raw in lines:
        total += 1
        term = _clean_term(raw)
        if term is None or term in seen:
            continue
        seen.add(term)
        entries.append(DictEntry(term, provenance))
    if total > len(entries):
        log.info("ingest_terms dropped %d of %d lines", total - len(entries), total)
    return entries


def merge_dictionaries(dicts: Sequence[DomainDictionary]) -> DomainDictionary:
    """Union of entries; on conflicts manual beats termbank beats llm."""
    if not dicts:
        raise ValueError("nothing to merge")
    domain = dicts[0].domain
    for d in dicts[1:]:
        if d.domain != domain:
            raise ValueError(f"cannot merge dictionaries of domains {domain!r} and {d.domain!r}")
    return DomainDictionary.from_entries(
        domain, (e for d in dicts for e in d.entries.values()))


def dictionary_stats(corpus: Corpus, dictionary: DomainDictionary) -> DictStats:
    """Keyword count, example coverage and replaced-token count.

    An example is covered when any of its utterances contains a match.
    """
    if not corpus.examples:
        raise ValueError("coverage is undefined on an empty corpus")
    _, report = dedomain_corpus(compile_matcher(dictionary), corpus)
    return DictStats(
        keyword_count=len(dictionary),
        coverage=report.examples_touched / len(corpus.examples),
        replaced_tokens=report.replaced_tokens,
        match_events=report.match_events,
    )


def load_dictionary(path: str | Path, domain: str | None = None,
                    provenance: str = "termbank") -> DomainDictionary:
    """Read one term per line with an optional tab-separated provenance
    column; ``#`` lines are comments."""
    path = Path(path)
    entries = []
    header_domain = None
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if line.startswith("# domain:") and header_domain is None:
                header_domain = line.split(":", 1)[1].strip() or None
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            term_raw, _, prov = line.partition("\t")
            prov = prov.strip() or provenance
            if prov not in PROVENANCES:
                raise ValueError(f"{path}:line {lineno}: unknown provenance {prov!r}")
            term = _clean_term(term_raw)
            if term is not None:
                entries.append(DictEntry(term, prov))
    return DomainDictionary.from_entries(domain or header_domain or path.stem, entries)


def dump_dictionary(dictionary: DomainDictionary) -> str:
    lines = [f"# domain: {dictionary.domain}"]
    lines += [f"{t}\t{dictionary.entries[t].provenance}" for t in sorted(dictionary.entries)]
    return "\n".join(lines) + "\n"


def save_dictionary(dictionary: DomainDictionary, path: str | Path) -> None:
    Path(path).write_text(dump_dictionary(dictionary), encoding="utf-8")
