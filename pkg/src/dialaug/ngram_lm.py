"""Count-based n-gram language models for two-stage training.

Stage 1 trains an :class:`NgramLm` on the de-domained mixture of source
domains. Stage 2 counts the raw low-resource target corpus and linearly
interpolates the two, picking the weight on a validation set.

Smoothing is interpolated absolute discounting::

    p(w | h) = max(c(h, w) - d, 0) / c(h) + d * N1+(h .) / c(h) * p(w | h')

where ``h'`` drops the oldest token of ``h``, contexts never seen fall
straight through to ``p(w | h')``, and the recursion bottoms out in the
uniform distribution over the vocabulary (the begin marker excluded,
since it is never predicted).
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import PLACEHOLDER, Corpus, tokenize

BOS, EOS, UNK = "<s>", "</s>", "<unk>"
RESERVED = (BOS, EOS, UNK, PLACEHOLDER)
LM_FORMAT_VERSION = 1


def utterance_tokens(corpus: Corpus) -> Iterable[tuple[str, ...]]:
    for ex in corpus.examples:
        for utt in ex.utterances:
            yield tokenize(utt.text).tokens


@dataclass
class _Context:
    counts: Counter = field(default_factory=Counter)
    total: int = 0

    @property
    def types(self) -> int:
        return len(self.counts)


class NgramLm:
    """Interpolated absolute-discounting model of a fixed order.

    ``tables[k]`` maps each length-``k`` context to its next-token counts.
    """

    def __init__(self, order: int = 3, discount: float = 0.75,
                 vocab: Iterable[str] = (), min_count: int = 1):
        if order < 1:
            raise ValueError("order must be >= 1")
        if not 0.0 < discount < 1.0:
            raise ValueError("discount must lie in (0, 1)")
        self.order = order
        self.discount = discount
        self.min_count = min_count
        self.vocab = frozenset(vocab) | frozenset(RESERVED)
        self.tables: list[dict[tuple[str, ...], _Context]] = [dict() for _ in range(order)]

    @property
    def predict_vocab(self) -> frozenset[str]:
        return self.vocab - {BOS}

    def map_token(self, tok: str) -> str:
        return tok if tok in self.vocab else UNK

    def add_counts(self, sequences: Iterable[Sequence[str]]) -> None:
        pad = (BOS,) * (self.order - 1)
        for toks in sequences:
            seq = pad + tuple(self.map_token(t) for t in toks) + (EOS,)
            for i in range(len(pad), len(seq)):
                w = seq[i]
                for k in range(self.order):
                    ctx = self.tables[k].setdefault(seq[i - k:i], _Context())
                    ctx.counts[w] += 1
                    ctx.total += 1

    def prob(self, token: str, history: Sequence[str] = ()) -> float:
        """Probability of ``token`` after ``history``.

        Histories shorter than ``order - 1`` are padded with the begin
        marker; unknown tokens map to the unknown symbol.
        """
        w = self.map_token(token)
        if w == BOS:
            return 0.0
        hist = tuple(self.map_token(t) for t in history)[-(self.order - 1):] if self.order > 1 else ()
        hist = (BOS,) * (self.order - 1 - len(hist)) + hist
        p = 1.0 / len(self.predict_vocab)
        d = self.discount
        for k in range(self.order):
            ctx = self.tables[k].get(hist[len(hist) - k:] if k else ())
            if ctx is None or ctx.total == 0:
                continue
            p = max(ctx.counts.get(w, 0) - d, 0.0) / ctx.total + d * ctx.types / ctx.total * p
        return p

    def distribution(self, history: Sequence[str] = ()) -> dict[str, float]:
        return {w: self.prob(w, history) for w in self.predict_vocab}

    def to_json(self) -> dict:
        counts = sorted(
            [k, list(ctx), w, c]
            for k, table in enumerate(self.tables)
            for ctx, entry in table.items()
            for w, c in entry.counts.items()
        )
        return {"format": "ngram-lm", "version": LM_FORMAT_VERSION, "order": self.order,
                "discount": self.discount, "min_count": self.min_count,
                "vocab": sorted(self.vocab), "counts": counts}

    @classmethod
    def from_json(cls, obj: dict) -> NgramLm:
        if obj.get("format") != "ngram-lm" or obj.get("version") != LM_FORMAT_VERSION:
            raise ValueError("not a version-1 ngram-lm dump")
        lm = cls(obj["order"], obj["discount"], obj["vocab"], obj.get("min_count", 1))
        for k, ctx, w, c in obj["counts"]:
            entry = lm.tables[k].setdefault(tuple(ctx), _Context())
            entry.counts[w] += c
            entry.total += c
        return lm


def train_lm(corpus: Corpus, order: int = 3, discount: float = 0.75,
             min_count: int = 1, vocab: Iterable[str] = ()) -> NgramLm:
    """Count every utterance with begin/end padding.

    The vocabulary is every token seen at least ``min_count`` times, the
    reserved symbols and anything in ``vocab``. Perplexities are only
    comparable between models sharing a vocabulary, so pass a fixed
    ``vocab`` when comparing models trained on different amounts of data.
    """
    if not corpus.examples:
        raise ValueError("cannot train on an empty corpus")
    seqs = list(utterance_tokens(corpus))
    freq = Counter(t for s in seqs for t in s)
    words = {t for t, c in freq.items() if c >= min_count} | set(vocab)
    lm = NgramLm(order, discount, words, min_count)
    lm.add_counts(seqs)
    return lm


class _Component:
    """One model viewed over a wider vocabulary.

    Words the model does not know share the mass of its ``spread``
    symbols evenly, so the distribution stays normalized over the union.
    Unknown history words are replaced by ``oov_history``.
    """

    def __init__(self, lm: NgramLm, union: frozenset[str], spread: tuple[str, ...],
                 oov_history: str):
        self.lm = lm
        self.outside = union - lm.predict_vocab
        self.spread = spread if self.outside else ()
        self.shared = frozenset(self.outside) | frozenset(self.spread)
        self.oov_history = oov_history

    def prob(self, token: str, history: Sequence[str]) -> float:
        hist = [t if t in self.lm.vocab else self.oov_history for t in history]
        if token not in self.shared:
            return self.lm.prob(token, hist)
        mass = sum(self.lm.prob(s, hist) for s in self.spread)
        return mass / len(self.shared)


class AdaptedLm:
    """``lam * p_target + (1 - lam) * p_base`` over the joint vocabulary.

    With ``placeholder_aware`` the base model reads words it never saw as
    the placeholder and hands its placeholder mass to them: the base was
    trained on text where domain words had been replaced, so the raw
    target's unfamiliar words are most likely such domain words.
    """

    def __init__(self, base: NgramLm, target: NgramLm, lam: float,
                 placeholder_aware: bool = True):
        if not 0.0 <= lam <= 1.0:
            raise ValueError("lambda must lie in [0, 1]")
        self.base, self.target, self.lam = base, target, lam
        self.placeholder_aware = placeholder_aware
        self.vocab = base.vocab | target.vocab
        union = self.vocab - {BOS}
        if placeholder_aware:
            self._base = _Component(base, union, (UNK, PLACEHOLDER), PLACEHOLDER)
        else:
            self._base = _Component(base, union, (UNK,), UNK)
        self._target = _Component(target, union, (UNK,), UNK)
        self.order = max(base.order, target.order)

    @property
    def predict_vocab(self) -> frozenset[str]:
        return self.vocab - {BOS}

    def map_token(self, tok: str) -> str:
        return tok if tok in self.vocab else UNK

    def component_probs(self, token: str, history: Sequence[str]) -> tuple[float, float]:
        w = self.map_token(token)
        hist = [self.map_token(t) for t in history]
        return self._base.prob(w, hist), self._target.prob(w, hist)

    def prob(self, token: str, history: Sequence[str] = ()) -> float:
        if self.map_token(token) == BOS:
            return 0.0
        if self.lam == 0.0:
            return self.component_probs(token, history)[0]
        if self.lam == 1.0:
            return self.component_probs(token, history)[1]
        pb, pt = self.component_probs(token, history)
        return self.lam * pt + (1.0 - self.lam) * pb

    def distribution(self, history: Sequence[str] = ()) -> dict[str, float]:
        return {w: self.prob(w, history) for w in self.predict_vocab}

    def with_lambda(self, lam: float) -> AdaptedLm:
        return AdaptedLm(self.base, self.target, lam, self.placeholder_aware)

    def to_json(self) -> dict:
        return {"format": "adapted-lm", "version": LM_FORMAT_VERSION, "lambda": self.lam,
                "placeholder_aware": self.placeholder_aware,
                "base": self.base.to_json(), "target": self.target.to_json()}

    @classmethod
    def from_json(cls, obj: dict) -> AdaptedLm:
        if obj.get("format") != "adapted-lm" or obj.get("version") != LM_FORMAT_VERSION:
            raise ValueError("not a version-1 adapted-lm dump")
        return cls(NgramLm.from_json(obj["base"]), NgramLm.from_json(obj["target"]),
                   obj["lambda"], obj.get("placeholder_aware", True))


def next_token_prob(lm: NgramLm | AdaptedLm, history: Sequence[str], token: str) -> float:
    return lm.prob(token, tuple(history))


def _scored_positions(corpus: Corpus):
    for toks in utterance_tokens(corpus):
        seq = toks + (EOS,)
        for i, w in enumerate(seq):
            yield seq[:i], w


def log_probs(lm: NgramLm | AdaptedLm, corpus: Corpus) -> np.ndarray:
    return np.array([math.log(lm.prob(w, h)) for h, w in _scored_positions(corpus)])


def perplexity(lm: NgramLm | AdaptedLm, corpus: Corpus) -> float:
    """``exp`` of the mean negative log-probability of every token and
    end-of-utterance marker."""
    if not corpus.examples:
        raise ValueError("perplexity of an empty corpus is undefined")
    return float(math.exp(-log_probs(lm, corpus).mean()))


@dataclass(frozen=True)
class AdaptationResult:
    model: AdaptedLm
    grid: tuple[float, ...]
    valid_ppl: tuple[float, ...]


def adapt_lm(base: NgramLm, target_train: Corpus, target_valid: Corpus,
             lambda_grid: Sequence[float] = tuple(i / 10 for i in range(11)), *,
             order: int | None = None, discount: float | None = None,
             placeholder_aware: bool = True, vocab: Iterable[str] = ()) -> AdaptationResult:
    """Train target counts and choose the interpolation weight with the
    lowest validation perplexity (ties go to the larger weight)."""
    if not lambda_grid:
        raise ValueError("lambda grid is empty")
    if any(not 0.0 <= g <= 1.0 for g in lambda_grid):
        raise ValueError("lambda values must lie in [0, 1]")
    if not target_valid.examples:
        raise ValueError("validation corpus is empty")
    target = train_lm(target_train, order or base.order, discount or base.discount, vocab=vocab)
    probe = AdaptedLm(base, target, 0.0, placeholder_aware)
    pairs = np.array([probe.component_probs(w, h) for h, w in _scored_positions(target_valid)])
    pb, pt = pairs[:, 0], pairs[:, 1]
    grid = tuple(sorted(set(float(g) for g in lambda_grid)))
    ppls = []
    for lam in grid:
        if lam == 0.0:
            mix = pb
        elif lam == 1.0:
            mix = pt
        else:
            mix = lam * pt + (1.0 - lam) * pb
        ppls.append(float(np.exp(-np.log(mix).mean())))
    best = 0
    for i, ppl in enumerate(ppls):
        if ppl <= ppls[best] * (1 + 1e-12):
            best = i
    return AdaptationResult(probe.with_lambda(grid[best]), grid, tuple(ppls))


def load_model(path: str | Path) -> NgramLm | AdaptedLm:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    if obj.get("format") == "adapted-lm":
        return AdaptedLm.from_json(obj)
    return NgramLm.from_json(obj)


def save_model(lm: NgramLm | AdaptedLm, path: str | Path) -> None:
    Path(path).write_text(json.dumps(lm.to_json(), ensure_ascii=False, sort_keys=True) + "\n",
                          encoding="utf-8")
