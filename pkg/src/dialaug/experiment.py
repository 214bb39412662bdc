"""Desk-scale two-stage experiments on synthetic multi-domain corpora.

Used by the acceptance tests and the scripts in ``scripts/``.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass

from .corpus import Corpus
from .dedomain import compile_matcher, dedomain_corpus
from .dictionary import DictEntry, DomainDictionary
from .lowres import SamplePlan, TemplateSpec, mix_corpora, sample_lowres, synthesize_corpora
from .ngram_lm import adapt_lm, perplexity, train_lm, utterance_tokens
from .rng import SplitMix64, derive_seed

DOMAINS = ("film", "music", "travel", "medical", "ecommerce")
_ONSETS = "b d f g h k l m n p r s t v z".split()
_VOWELS = "a e i o u".split()
_SLOTS = ("item", "person", "place")


def _word(rng: SplitMix64, syllables: int, suffix: str = "") -> str:
    return "".join(rng.choice(_ONSETS) + rng.choice(_VOWELS) for _ in range(syllables)) + suffix


def _vocab(rng: SplitMix64, size: int, suffix: str, taken: set[str]) -> list[str]:
    out: list[str] = []
    while len(out) < size:
        w = _word(rng, 1 + rng.below(3), suffix)
        if w not in taken:
            taken.add(w)
            out.append(w)
    return out


def _turn(rng: SplitMix64, words: list[str], lo: int, hi: int, max_slots: int) -> str:
    toks = [rng.choice(words) for _ in range(lo + rng.below(hi - lo + 1))]
    for _ in range(rng.below(max_slots + 1)):
        toks.insert(rng.below(len(toks) + 1), "{" + rng.choice(_SLOTS) + "}")
    return " ".join(toks)


def _template(rng: SplitMix64, words: list[str]) -> str:
    turns = [_turn(rng, words, 4, 8, 2) for _ in range(1 + rng.below(2))]
    turns.append(_turn(rng, words, 4, 8, 1))
    return " | ".join(turns)


def make_template_spec(domains=DOMAINS, shared_fraction: float = 0.8, n_shared: int = 300,
                       n_private: int = 60, shared_words: int = 250, private_words: int = 120,
                       terms_per_slot: int = 40, seed: int = 0) -> TemplateSpec:
    """Random pseudo-word templates and lexicons.

    Private templates of each domain use a word list disjoint from the
    shared one and from every other domain's; lexicon terms (one or two
    words) are unique to their domain.
    """
    rng = SplitMix64(derive_seed(seed, "template-spec"))
    taken: set[str] = set()
    common = _vocab(rng, shared_words, "", taken)
    shared = tuple(_template(rng, common) for _ in range(n_shared))
    private, lexicons = {}, {}
    for i, domain in enumerate(domains):
        own = _vocab(rng, private_words, f"x{i}", taken)
        private[domain] = tuple(_template(rng, own) for _ in range(n_private))
        lex = {}
        for slot in _SLOTS:
            terms = []
            for w in _vocab(rng, terms_per_slot, f"q{i}", taken):
                terms.append(w if rng.below(3) else f"{w} {_vocab(rng, 1, f'q{i}', taken)[0]}")
            lex[slot] = tuple(terms)
        lexicons[domain] = lex
    return TemplateSpec(shared, private, lexicons, shared_fraction)


def lexicon_dictionary(spec: TemplateSpec, domain: str) -> DomainDictionary:
    return DomainDictionary.from_entries(
        domain, (DictEntry(t, "manual") for t in sorted(spec.domain_terms(domain))))


@dataclass(frozen=True)
class TwoStageResult:
    seed: int
    lam: float
    adapted_ppl: float
    target_only_ppl: float

    @property
    def relative_gain(self) -> float:
        return (self.target_only_ppl - self.adapted_ppl) / self.target_only_ppl


@dataclass
class SyntheticWorld:
    """Train/valid/test corpora for every domain plus a trained stage-1 model."""

    spec: TemplateSpec
    target: str
    seed: int
    order: int = 3
    per_domain: int = 2000
    eval_size: int = 300

    def __post_init__(self) -> None:
        self.train = {c.domain: c for c in synthesize_corpora(self.spec, self.per_domain, self.seed)}
        held = {}
        for split in ("valid", "test"):
            sub = TemplateSpec(self.spec.shared_templates,
                               {self.target: self.spec.domain_templates.get(self.target, ())},
                               {self.target: self.spec.lexicons[self.target]},
                               self.spec.shared_fraction)
            held[split] = synthesize_corpora(sub, self.eval_size, self.seed, split)[0]
        self.valid, self.test = held["valid"], held["test"]
        sources = []
        for domain, corpus in self.train.items():
            matcher = compile_matcher(lexicon_dictionary(self.spec, domain))
            sources.append(dedomain_corpus(matcher, corpus)[0])
        self.mixed = mix_corpora(sources, exclude=self.target)
        self.base = train_lm(self.mixed, self.order)

    def lowres_pool(self, size: int, seed: int | None = None) -> Corpus:
        plan = SamplePlan(self.target, size=size, seed=self.seed if seed is None else seed)
        return sample_lowres(self.train[self.target], plan)

    def closed_vocab(self, pool: Corpus) -> frozenset[str]:
        """Base vocabulary plus every token of the low-resource pool; shared by
        all target-side models so their perplexities are comparable."""
        return self.base.vocab | {t for toks in utterance_tokens(pool) for t in toks}

    def run(self, sample: Corpus, vocab=frozenset(),
            lambda_grid=tuple(i / 20 for i in range(21))) -> TwoStageResult:
        adapted = adapt_lm(self.base, sample, self.valid, lambda_grid, vocab=vocab)
        only = train_lm(sample, self.order, vocab=vocab)
        return TwoStageResult(self.seed, adapted.model.lam,
                              perplexity(adapted.model, self.test), perplexity(only, self.test))


def ratio_sweep(world: SyntheticWorld, pool: Corpus, ratios, seed: int) -> list[float]:
    """Adapted test perplexity for each ratio of the low-resource pool."""
    vocab = world.closed_vocab(pool)
    out = []
    for r in ratios:
        sample = sample_lowres(pool, SamplePlan(world.target, ratio=r, seed=seed))
        out.append(world.run(sample, vocab).adapted_ppl)
    return out


def median_curve(curves: list[list[float]]) -> list[float]:
    return [statistics.median(col) for col in zip(*curves)]


def inversions(values: list[float]) -> int:
    """Number of adjacent increases in a sequence expected to be non-increasing."""
    return sum(1 for a, b in zip(values, values[1:]) if b > a)
