"""Low-resource sampling, multi-domain mixing, two-stage manifests and a
template-driven synthetic corpus generator."""

from __future__ import annotations

import hashlib
import json
import math
import re
import warnings
from dataclasses import dataclass, field
from itertools import zip_longest
from pathlib import Path
from typing import Mapping, Sequence

from . import __version__
from .corpus import Corpus, DialogueExample, make_example
from .rng import SplitMix64, derive_seed, sample_indices

DEFAULT_SEED = 12345
MANIFEST_VERSION = 1
_SLOT = re.compile(r"\{(\w+)\}")
TURN_SEP = " | "


@dataclass(frozen=True)
class SamplePlan:
    """Either ``size`` (absolute count) or ``ratio`` of the pool."""

    target_domain: str
    size: int | None = None
    ratio: float | None = None
    seed: int = DEFAULT_SEED

    def __post_init__(self) -> None:
        if (self.size is None) == (self.ratio is None):
            raise ValueError("give exactly one of size or ratio")
        if self.size is not None and self.size < 1:
            raise ValueError("size must be positive")
        if self.ratio is not None and not 0.0 < self.ratio <= 1.0:
            raise ValueError("ratio must lie in (0, 1]")

    def resolve(self, pool_size: int) -> int:
        if self.size is not None:
            if self.size > pool_size:
                raise ValueError(f"sample size {self.size} exceeds corpus size {pool_size}")
            return self.size
        # round half up, at least one example
        return min(pool_size, max(1, math.floor(self.ratio * pool_size + 0.5)))


def sample_lowres(corpus: Corpus, plan: SamplePlan) -> Corpus:
    """Uniform sample without replacement, kept in original order."""
    k = plan.resolve(len(corpus))
    idx = sample_indices(len(corpus), k, plan.seed)
    return corpus.replace_examples(corpus.examples[i] for i in idx)


def mix_corpora(corpora: Sequence[Corpus], exclude: str | None = None,
                label: str | None = None) -> Corpus:
    """Round-robin interleave of every corpus whose domain is not ``exclude``.

    Examples keep (or gain) their source domain as provenance.
    """
    labels = [c.domain for c in corpora]
    if len(set(labels)) != len(labels):
        raise ValueError(f"corpora must carry distinct domain labels, got {labels}")
    if exclude is not None and exclude not in labels:
        warnings.warn(f"excluded domain {exclude!r} matches no corpus", stacklevel=2)
    sources = [c for c in corpora if c.domain != exclude]
    if not sources:
        warnings.warn("mixed corpus is empty", stacklevel=2)
    tagged = [[ex if ex.domain else DialogueExample(ex.context, ex.response, c.domain)
               for ex in c.examples] for c in sources]
    mixed = [ex for group in zip_longest(*tagged) for ex in group if ex is not None]
    split = sources[0].split if sources else "train"
    return Corpus(label or (f"mix-no-{exclude}" if exclude else "mix"), split, tuple(mixed))


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return "sha256:" + h.hexdigest()


@dataclass
class PipelineConfig:
    """Inputs for a two-stage manifest.

    ``stage1_corpora`` maps domain label to the de-domained training file
    of every source domain.
    """

    target_domain: str
    stage1_corpora: dict[str, str]
    target_corpus: str
    mixed_corpus: str
    dictionaries: dict[str, str] = field(default_factory=dict)
    stage1_checkpoint: str = "stage1"
    seeds: dict[str, int] = field(default_factory=lambda: {"sample": DEFAULT_SEED,
                                                           "train": DEFAULT_SEED})
    ratios: list[float] = field(default_factory=lambda: [0.05, 0.1, 0.2, 0.3, 0.4, 1.0])


@dataclass(frozen=True)
class PipelineManifest:
    data: dict

    def to_json(self) -> str:
        return json.dumps(self.data, ensure_ascii=False, sort_keys=True, indent=2) + "\n"

    @property
    def stage1_inputs(self) -> list[dict]:
        return self.data["stage1"]["inputs"]


def _ref(path: str) -> dict:
    if not Path(path).is_file():
        raise FileNotFoundError(f"referenced file does not exist: {path}")
    return {"path": str(path), "digest": file_digest(path)}


def build_manifest(config: PipelineConfig) -> PipelineManifest:
    if config.target_domain in config.stage1_corpora:
        raise ValueError(f"target domain {config.target_domain!r} must not be a stage-1 input")
    inputs = [{"domain": d, **_ref(p)} for d, p in sorted(config.stage1_corpora.items())]
    dicts = [{"domain": d, **_ref(p)} for d, p in sorted(config.dictionaries.items())]
    data = {
        "format": "two-stage-manifest",
        "version": MANIFEST_VERSION,
        "stage1": {"inputs": inputs, "dictionaries": dicts, "mixed": _ref(config.mixed_corpus),
                   "excluded_domain": config.target_domain},
        "stage2": {"target_domain": config.target_domain, "target": _ref(config.target_corpus),
                   "init_from": config.stage1_checkpoint},
        "metadata": {"seeds": dict(sorted(config.seeds.items())),
                     "ratios": list(config.ratios), "tool_version": __version__},
    }
    return PipelineManifest(data)


@dataclass(frozen=True)
class TemplateSpec:
    """Synthetic dialogue generator description.

    A template is a string of turns joined by ``" | "`` (the last turn is
    the response) with ``{slot}`` markers. ``shared_templates`` are used by
    every domain, ``domain_templates`` only by their own domain;
    ``shared_fraction`` is the probability that an example draws from the
    shared pool. Repeated slots within one template get the same filler.
    """

    shared_templates: tuple[str, ...]
    domain_templates: Mapping[str, tuple[str, ...]]
    lexicons: Mapping[str, Mapping[str, tuple[str, ...]]]
    shared_fraction: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 <= self.shared_fraction <= 1.0:
            raise ValueError("shared_fraction must lie in [0, 1]")
        for t in self.templates_all():
            if len(t.split(TURN_SEP)) < 2:
                raise ValueError(f"template needs a context and a response: {t!r}")
        for domain, lex in self.lexicons.items():
            used = {s for t in self.shared_templates for s in _SLOT.findall(t)}
            used |= {s for t in self.domain_templates.get(domain, ()) for s in _SLOT.findall(t)}
            missing = used - set(lex)
            if missing:
                raise ValueError(f"domain {domain!r} lexicon lacks slots {sorted(missing)}")
            if any(not terms for terms in lex.values()):
                raise ValueError(f"domain {domain!r} has an empty slot lexicon")
        for domain in self.domains:
            if not self.shared_templates and not self.domain_templates.get(domain):
                raise ValueError(f"domain {domain!r} has no templates")

    @property
    def domains(self) -> list[str]:
        return list(self.lexicons)

    def templates_all(self):
        yield from self.shared_templates
        for ts in self.domain_templates.values():
            yield from ts

    def domain_terms(self, domain: str) -> set[str]:
        return {t for terms in self.lexicons[domain].values() for t in terms}

    @classmethod
    def from_json(cls, obj: dict) -> TemplateSpec:
        return cls(
            shared_templates=tuple(obj.get("shared_templates", ())),
            domain_templates={d: tuple(ts) for d, ts in obj.get("domain_templates", {}).items()},
            lexicons={d: {s: tuple(v) for s, v in lex.items()}
                      for d, lex in obj["lexicons"].items()},
            shared_fraction=float(obj.get("shared_fraction", 0.5)),
        )

    def to_json(self) -> dict:
        return {
            "shared_templates": list(self.shared_templates),
            "domain_templates": {d: list(ts) for d, ts in self.domain_templates.items()},
            "lexicons": {d: {s: list(v) for s, v in lex.items()}
                         for d, lex in self.lexicons.items()},
            "shared_fraction": self.shared_fraction,
        }


def fill_template(template: str, lexicon: Mapping[str, Sequence[str]], rng: SplitMix64) -> list[str]:
    chosen: dict[str, str] = {}

    def pick(m: re.Match) -> str:
        slot = m.group(1)
        if slot not in chosen:
            chosen[slot] = rng.choice(lexicon[slot])
        return chosen[slot]

    return [_SLOT.sub(pick, turn) for turn in template.split(TURN_SEP)]


def synthesize_corpora(spec: TemplateSpec, per_domain_count: int, seed: int,
                       split: str = "train") -> list[Corpus]:
    """Generate ``per_domain_count`` examples for every domain.

    Each domain draws from its own stream seeded by ``derive_seed(seed,
    "domain/split")`` so domains can be generated independently.
    """
    out = []
    for domain in spec.domains:
        rng = SplitMix64(derive_seed(seed, f"{domain}/{split}"))
        private = spec.domain_templates.get(domain, ())
        examples = []
        for _ in range(per_domain_count):
            use_shared = bool(spec.shared_templates) and (
                not private or rng.random() < spec.shared_fraction)
            template = rng.choice(spec.shared_templates if use_shared else private)
            turns = fill_template(template, spec.lexicons[domain], rng)
            examples.append(make_example(turns[:-1], turns[-1], domain=domain))
        out.append(Corpus(domain, split, tuple(examples)))
    return out
