"""Corpus representation, text normalization, tokenization and JSONL I/O.

Every other module goes through :func:`normalize_text` and :func:`tokenize`,
so n-gram statistics, dictionary matching and metrics all agree on what a
token is.
"""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

PLACEHOLDER = "$P"
SPLITS = ("train", "valid", "test")
DEFAULT_MAX_TURNS = 10
DEFAULT_MAX_TOKENS = 50

_CJK_RANGES = (
    (0x2E80, 0x2FDF),  # radicals
    (0x3000, 0x303F),  # CJK symbols and punctuation
    (0x3040, 0x30FF),  # kana
    (0x3100, 0x312F),  # bopomofo
    (0x3130, 0x318F),  # hangul compatibility jamo
    (0x31F0, 0x31FF),
    (0x3400, 0x4DBF),
    (0x4E00, 0x9FFF),
    (0xAC00, 0xD7AF),  # hangul syllables
    (0xF900, 0xFAFF),
    (0x20000, 0x2FA1F),
)


class CorpusFormatError(ValueError):
    """A corpus file line could not be turned into an example."""

    def __init__(self, message: str, *, path: str | Path | None = None,
                 line: int | None = None, field_name: str | None = None):
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        prefix = ":".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.path = path
        self.line = line
        self.field_name = field_name


def is_cjk(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _CJK_RANGES)


def _is_word_char(ch: str) -> bool:
    return (ch.isalnum() or unicodedata.category(ch).startswith("M")) and not is_cjk(ch)


def normalize_text(raw: str) -> str:
    """NFC-normalize, trim, collapse whitespace and lower-case letters.

    Literal placeholder tokens survive unchanged so de-domained text
    normalizes to itself.
    """
    text = " ".join(unicodedata.normalize("NFC", raw).split())
    parts = [unicodedata.normalize("NFC", p.lower()) for p in text.split(PLACEHOLDER)]
    return PLACEHOLDER.join(parts)


@dataclass(frozen=True)
class TokenSeq:
    tokens: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))
        for tok in self.tokens:
            if not tok or tok.isspace():
                raise ValueError(f"invalid token {tok!r}")

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def __getitem__(self, idx):
        return self.tokens[idx]


def token_spans(text: str) -> list[tuple[int, int]]:
    """Character spans ``(start, end)`` of each token in ``text``."""
    spans: list[tuple[int, int]] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif text.startswith(PLACEHOLDER, i):
            spans.append((i, i + len(PLACEHOLDER)))
            i += len(PLACEHOLDER)
        elif _is_word_char(ch) and not unicodedata.category(ch).startswith("M"):
            j = i + 1
            while j < n and _is_word_char(text[j]):
                j += 1
            spans.append((i, j))
            i = j
        else:
            spans.append((i, i + 1))
            i += 1
    return spans


def tokenize(text: str) -> TokenSeq:
    """Split normalized text into CJK characters, alphanumeric runs,
    placeholders and single punctuation characters."""
    return TokenSeq(tuple(text[s:e] for s, e in token_spans(text)))


def truncate_tokens(text: str, max_tokens: int) -> str:
    spans = token_spans(text)
    if len(spans) <= max_tokens:
        return text
    return text[: spans[max_tokens - 1][1]].rstrip()


@dataclass(frozen=True)
class Utterance:
    text: str
    speaker: str | None = None

    def __post_init__(self) -> None:
        text = unicodedata.normalize("NFC", self.text)
        if not text.strip():
            raise ValueError("utterance text is empty")
        object.__setattr__(self, "text", text)


@dataclass(frozen=True)
class DialogueExample:
    """One ``(context, response)`` pair; ``domain`` records provenance."""

    context: tuple[Utterance, ...]
    response: Utterance
    domain: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "context", tuple(self.context))
        if not self.context:
            raise ValueError("context must contain at least one utterance")

    @property
    def utterances(self) -> tuple[Utterance, ...]:
        return self.context + (self.response,)

    def joined_text(self) -> str:
        return " ".join(u.text for u in self.utterances)

    def with_texts(self, texts: Sequence[str]) -> DialogueExample:
        """Copy with every utterance text replaced, speakers kept."""
        utts = [Utterance(t, u.speaker) for t, u in zip(texts, self.utterances, strict=True)]
        return DialogueExample(tuple(utts[:-1]), utts[-1], self.domain)


def make_example(context: Sequence[str], response: str, *,
                 speakers: Sequence[str | None] | None = None,
                 domain: str | None = None,
                 max_turns: int = DEFAULT_MAX_TURNS,
                 max_tokens: int = DEFAULT_MAX_TOKENS) -> DialogueExample:
    """Normalize and truncate raw strings into a :class:`DialogueExample`.

    Only the most recent ``max_turns`` context turns are kept; each
    utterance is cut to ``max_tokens`` tokens.
    """
    if speakers is None:
        speakers = [None] * (len(context) + 1)
    if len(speakers) != len(context) + 1:
        raise ValueError("speakers must have one label per context utterance plus the response")
    texts = [truncate_tokens(normalize_text(t), max_tokens) for t in [*context, response]]
    utts = [Utterance(t, s) for t, s in zip(texts, speakers)]
    ctx = utts[:-1][-max_turns:]
    return DialogueExample(tuple(ctx), utts[-1], domain)


@dataclass(frozen=True)
class Corpus:
    domain: str
    split: str = "train"
    examples: tuple[DialogueExample, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if not self.domain:
            raise ValueError("corpus domain label must be non-empty")
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {self.split!r}")
        object.__setattr__(self, "examples", tuple(self.examples))

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)

    def replace_examples(self, examples: Iterable[DialogueExample]) -> Corpus:
        return Corpus(self.domain, self.split, tuple(examples))


def _record_to_example(obj, *, path, lineno, max_turns, max_tokens) -> DialogueExample:
    if not isinstance(obj, dict):
        raise CorpusFormatError("record is not an object", path=path, line=lineno)
    for name in ("context", "response"):
        if name not in obj:
            raise CorpusFormatError(f"missing required field '{name}'", path=path,
                                    line=lineno, field_name=name)
    context, response = obj["context"], obj["response"]
    if not isinstance(context, list) or not all(isinstance(c, str) for c in context):
        raise CorpusFormatError("field 'context' must be an array of strings", path=path,
                                line=lineno, field_name="context")
    if not isinstance(response, str):
        raise CorpusFormatError("field 'response' must be a string", path=path,
                                line=lineno, field_name="response")
    try:
        return make_example(context, response, speakers=obj.get("speakers"),
                            domain=obj.get("domain"), max_turns=max_turns,
                            max_tokens=max_tokens)
    except ValueError as exc:
        raise CorpusFormatError(str(exc), path=path, line=lineno) from exc


def load_corpus(path: str | Path, domain: str | None = None, split: str = "train", *,
                max_turns: int = DEFAULT_MAX_TURNS,
                max_tokens: int = DEFAULT_MAX_TOKENS) -> Corpus:
    """Read a line-delimited JSON corpus.

    The domain label defaults to the record-level ``domain`` shared by all
    records, falling back to the file stem.
    """
    path = Path(path)
    examples = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"malformed record ({exc.msg})", path=path,
                                        line=lineno) from exc
            examples.append(_record_to_example(obj, path=path, lineno=lineno,
                                               max_turns=max_turns, max_tokens=max_tokens))
    if domain is None:
        labels = {ex.domain for ex in examples}
        domain = labels.pop() if len(labels) == 1 and None not in labels else path.stem
    return Corpus(domain, split, tuple(examples))


def example_to_record(ex: DialogueExample) -> dict:
    record: dict = {"context": [u.text for u in ex.context], "response": ex.response.text}
    if any(u.speaker is not None for u in ex.utterances):
        record["speakers"] = [u.speaker for u in ex.utterances]
    if ex.domain is not None:
        record["domain"] = ex.domain
    return record


def dump_corpus(corpus: Corpus) -> str:
    return "".join(json.dumps(example_to_record(ex), ensure_ascii=False) + "\n"
                   for ex in corpus.examples)


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            fh.write(dump_corpus(corpus))
    except OSError as exc:
        raise OSError(f"cannot write corpus to {path}: {exc}") from exc
