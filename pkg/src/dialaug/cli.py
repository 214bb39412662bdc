"""Command-line entry point.

Every subcommand reads its options from flags and/or a JSON ``--config``
file (flags win). ``pipeline`` runs a list of such steps from one file.
Relative paths are resolved against ``$DIALAUG_DATA_DIR`` when it is set.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
import traceback
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from . import __version__
from .corpus import Corpus, load_corpus, normalize_text, save_corpus, tokenize
from .dedomain import DedomainReport, compile_matcher, dedomain_corpus
from .dictionary import (
    DomainDictionary,
    dictionary_stats,
    emit_extraction_prompts,
    ingest_terms,
    load_dictionary,
    merge_dictionaries,
    prompt_records,
    save_dictionary,
)
from .lowres import (
    DEFAULT_SEED,
    PipelineConfig,
    SamplePlan,
    TemplateSpec,
    build_manifest,
    file_digest,
    mix_corpora,
    sample_lowres,
    synthesize_corpora,
)
from .experiment import lexicon_dictionary, make_template_spec
from .metrics import EvalPair, evaluate, load_vectors, ppl_from_logprobs
from .ngram_lm import adapt_lm, load_model, perplexity, save_model, train_lm, utterance_tokens
from .report import canonical_json, render_report
from .similarity import build_profile, save_profile, similarity_table

DATA_DIR_ENV = "DIALAUG_DATA_DIR"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Opt:
    name: str
    kind: str = "str"  # str | int | float | bool | list | floats
    role: str = ""  # "in" / "out" for paths
    required: bool = False
    default: Any = None
    help: str = ""


COMMANDS: dict[str, list[Opt]] = {
    "build-dict": [
        Opt("domain", required=True, help="domain label"),
        Opt("llm", "list", "in", help="LLM-extracted keyword files"),
        Opt("termbank", "list", "in", help="term bank exports"),
        Opt("manual", "list", "in", help="hand-curated term files"),
        Opt("output", role="out", help="dictionary file to write"),
        Opt("corpus", role="in", help="corpus to emit extraction prompts for"),
        Opt("prompts", role="out", help="prompt records file to write"),
        Opt("language", default="zh", help="prompt template language (zh or en)"),
    ],
    "dedomain": [
        Opt("input", role="in", required=True),
        Opt("dictionary", "list", "in", required=True),
        Opt("domain"),
        Opt("output", role="out", required=True),
        Opt("report", role="out", required=True),
    ],
    "stats": [
        Opt("input", role="in", required=True),
        Opt("dictionary", "list", "in", required=True),
        Opt("domain"),
        Opt("output", role="out"),
    ],
    "similarity": [
        Opt("inputs", "list", "in", required=True, help="de-domained training corpora"),
        Opt("domains", "list", help="labels for the inputs (default: file stems)"),
        Opt("max_n", "int", default=4),
        Opt("weighted", "bool", default=False),
        Opt("profiles_dir", role="out"),
        Opt("output", role="out"),
        Opt("format", default="json"),
    ],
    "sample": [
        Opt("input", role="in", required=True),
        Opt("output", role="out", required=True),
        Opt("domain"),
        Opt("size", "int"),
        Opt("ratio", "float"),
        Opt("seed", "int", default=DEFAULT_SEED),
    ],
    "mix": [
        Opt("inputs", "list", "in", required=True),
        Opt("exclude"),
        Opt("output", role="out", required=True),
    ],
    "manifest": [
        Opt("target_domain", required=True),
        Opt("stage1", "list", required=True, help="domain=path entries"),
        Opt("target", role="in", required=True),
        Opt("mixed", role="in", required=True),
        Opt("dictionaries", "list", help="domain=path entries"),
        Opt("checkpoint", default="stage1"),
        Opt("ratios", "floats", default=[0.05, 0.1, 0.2, 0.3, 0.4, 1.0]),
        Opt("seed", "int", default=DEFAULT_SEED),
        Opt("output", role="out", required=True),
    ],
    "train-lm": [
        Opt("input", role="in", required=True),
        Opt("output", role="out", required=True),
        Opt("order", "int", default=3),
        Opt("discount", "float", default=0.75),
        Opt("min_count", "int", default=1),
        Opt("vocab_from", "list", "in", help="corpora whose tokens join the vocabulary"),
    ],
    "adapt-lm": [
        Opt("base", role="in", required=True),
        Opt("train", role="in", required=True),
        Opt("valid", role="in", required=True),
        Opt("output", role="out", required=True),
        Opt("lambda_grid", "floats", default=[i / 10 for i in range(11)]),
        Opt("vocab_from", "list", "in"),
        Opt("placeholder_aware", "bool", default=True),
        Opt("report", role="out"),
    ],
    "ppl": [
        Opt("model", role="in", required=True),
        Opt("input", role="in", required=True),
        Opt("output", role="out"),
    ],
    "evaluate": [
        Opt("hypotheses", role="in", required=True, help="one response per line"),
        Opt("references", role="in", required=True, help="one response per line"),
        Opt("vectors", role="in"),
        Opt("logprobs", role="in"),
        Opt("output", role="out"),
        Opt("format", default="json"),
    ],
    "synth": [
        Opt("spec", role="in", help="template spec JSON (default: built-in generator)"),
        Opt("count", "int", default=2000),
        Opt("seed", "int", default=DEFAULT_SEED),
        Opt("split", default="train"),
        Opt("shared_fraction", "float"),
        Opt("output_dir", role="out", required=True),
    ],
}


SUMMARIES = {
    "build-dict": "merge keyword sources into a domain dictionary",
    "dedomain": "replace dictionary terms with $P",
    "stats": "keyword count, coverage and replaced tokens",
    "similarity": "O2X n-gram similarity table",
    "sample": "draw a seeded low-resource subset",
    "mix": "merge stage-1 corpora",
    "manifest": "write the stage-1 / stage-2 data manifest",
    "train-lm": "train a backoff n-gram LM",
    "adapt-lm": "interpolate a base LM with target data",
    "ppl": "perplexity of a model on a corpus",
    "evaluate": "score hypotheses against references",
    "synth": "generate synthetic multi-domain corpora",
}


@dataclass
class RunConfig:
    command: str
    options: dict[str, Any] = field(default_factory=dict)

    def __getitem__(self, key: str):
        return self.options.get(key)


@dataclass
class RunRecord:
    command: str
    config: dict
    inputs: dict[str, str]
    outputs: dict[str, str]
    seconds: float
    tool_version: str = __version__
    result: dict | None = None

    def to_json(self) -> dict:
        return {"command": self.command, "config": self.config, "inputs": self.inputs,
                "outputs": self.outputs, "timings": {"seconds": round(self.seconds, 3)},
                "tool_version": self.tool_version, "result": self.result}


def _coerce(opt: Opt, value):
    if value is None:
        return None
    try:
        if opt.kind == "int":
            if isinstance(value, bool):
                raise ValueError
            return int(value)
        if opt.kind == "float":
            return float(value)
        if opt.kind == "bool":
            if isinstance(value, str):
                if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                    raise ValueError
                return value.lower() in ("true", "1", "yes")
            return bool(value)
        if opt.kind == "list":
            return [str(v) for v in (value if isinstance(value, list) else [value])]
        if opt.kind == "floats":
            return [float(v) for v in (value if isinstance(value, list) else [value])]
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"option '{opt.name}' expects {opt.kind}, got {value!r}") from None


def _resolve(path: str) -> str:
    base = os.environ.get(DATA_DIR_ENV)
    if base and not os.path.isabs(path):
        return os.path.join(base, path)
    return path


def build_config(command: str, file_values: dict, flag_values: dict) -> RunConfig:
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    specs = {o.name: o for o in COMMANDS[command]}
    unknown = sorted(set(file_values) - set(specs))
    if unknown:
        raise ConfigError(f"unknown config key(s) for {command}: {', '.join(unknown)}")
    opts = {}
    for name, opt in specs.items():
        value = flag_values.get(name)
        if value is None:
            value = file_values.get(name)
        value = _coerce(opt, value)
        if value is None:
            value = opt.default
        if opt.required and value in (None, []):
            raise ConfigError(f"missing required option '{name}' for {command}")
        if opt.role and value is not None:
            value = [_resolve(v) for v in value] if isinstance(value, list) else _resolve(value)
        opts[name] = value
    if command == "sample" and opts["size"] is not None and opts["ratio"] is not None:
        raise ConfigError("size and ratio are mutually exclusive")
    if command == "sample" and opts["size"] is None and opts["ratio"] is None:
        raise ConfigError("sample needs size or ratio")
    for name, opt in specs.items():
        if opt.role != "in" or opts[name] is None:
            continue
        for p in opts[name] if isinstance(opts[name], list) else [opts[name]]:
            if not Path(p).exists():
                raise ConfigError(f"input path for '{name}' does not exist: {p}")
    return RunConfig(command, opts)


def _make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dialaug", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, opts in COMMANDS.items():
        p = sub.add_parser(name, help=SUMMARIES[name])
        p.add_argument("--config", help="JSON file with option values")
        p.add_argument("--record", help="write a run record JSON here")
        for o in opts:
            flag = "--" + o.name.replace("_", "-")
            kw: dict[str, Any] = {"dest": o.name, "default": None,
                                  "help": o.help or None}
            if o.kind in ("list", "floats"):
                kw["nargs"] = "+"
            p.add_argument(flag, **kw)
    pipe = sub.add_parser("pipeline", help="run a list of steps from one config file")
    pipe.add_argument("--config", required=True)
    pipe.add_argument("--record")
    return parser


def parse_config(argv: list[str]) -> RunConfig:
    """Parse argv (and the ``--config`` file it names) into a RunConfig."""
    args = _make_parser().parse_args(argv)
    file_values = {}
    if args.config:
        file_values = json.loads(Path(_resolve(args.config)).read_text(encoding="utf-8"))
        if not isinstance(file_values, dict):
            raise ConfigError("config file must hold a JSON object")
    if args.command == "pipeline":
        steps = file_values.get("steps")
        extra = sorted(set(file_values) - {"steps"})
        if extra:
            raise ConfigError(f"unknown config key(s) for pipeline: {', '.join(extra)}")
        if not isinstance(steps, list) or not steps:
            raise ConfigError("pipeline config needs a non-empty 'steps' list")
        return RunConfig("pipeline", {"steps": steps, "record": args.record})
    flags = {k: v for k, v in vars(args).items()
             if k not in ("command", "config", "record") and v is not None}
    cfg = build_config(args.command, file_values, flags)
    cfg.options["record"] = args.record
    return cfg


def _write(path: str, text: str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text, encoding="utf-8")


def _load_dicts(paths: list[str], domain: str | None) -> DomainDictionary:
    dicts = [load_dictionary(p, domain) for p in paths]
    label = domain or dicts[0].domain
    return merge_dictionaries([DomainDictionary(label, d.entries) for d in dicts])


def _kv_pairs(items: list[str] | None) -> dict[str, str]:
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"expected domain=path, got {item!r}")
        out[key] = _resolve(value)
    return out


def _read_lines(path: str) -> list[str]:
    return Path(path).read_text(encoding="utf-8").splitlines()


def _cmd_build_dict(o) -> dict:
    result: dict = {}
    if o["corpus"]:
        if not o["prompts"]:
            raise ConfigError("--corpus requires --prompts")
        prompts = emit_extraction_prompts(load_corpus(o["corpus"]), o["domain"], o["language"])
        _write(o["prompts"], prompt_records(prompts))
        result["prompts"] = len(prompts)
    sources = [(p, prov) for prov in ("llm", "termbank", "manual") for p in (o[prov] or [])]
    if sources:
        if not o["output"]:
            raise ConfigError("building a dictionary requires --output")
        dicts, dropped = [], 0
        for path, prov in sources:
            lines = [ln.partition("\t")[0] for ln in _read_lines(path)
                     if not ln.lstrip().startswith("#")]
            entries = ingest_terms(lines, prov)
            dropped += len(lines) - len(entries)
            dicts.append(DomainDictionary.from_entries(o["domain"], entries))
        merged = merge_dictionaries(dicts)
        save_dictionary(merged, o["output"])
        result.update({"keywords": len(merged), "dropped_lines": dropped})
    if not result:
        raise ConfigError("build-dict needs term files and/or --corpus/--prompts")
    return result


def _cmd_dedomain(o) -> dict:
    corpus = load_corpus(o["input"], o["domain"])
    matcher = compile_matcher(_load_dicts(o["dictionary"], corpus.domain))
    out, report = dedomain_corpus(matcher, corpus)
    save_corpus(out, o["output"])
    _write(o["report"], canonical_json(report.to_json()))
    return report.totals()


def _cmd_stats(o) -> dict:
    corpus = load_corpus(o["input"], o["domain"])
    stats = dictionary_stats(corpus, _load_dicts(o["dictionary"], corpus.domain))
    data = {"domain": corpus.domain, **stats.to_json()}
    if o["output"]:
        _write(o["output"], canonical_json(data))
    return data


def _cmd_similarity(o) -> dict:
    labels = o["domains"] or [None] * len(o["inputs"])
    if len(labels) != len(o["inputs"]):
        raise ConfigError("--domains must give one label per input")
    profiles = [build_profile(load_corpus(p, d), o["max_n"]) for p, d in zip(o["inputs"], labels)]
    if o["profiles_dir"]:
        Path(o["profiles_dir"]).mkdir(parents=True, exist_ok=True)
        for prof in profiles:
            save_profile(prof, Path(o["profiles_dir"]) / f"{prof.domain}.ngrams")
    table = similarity_table(profiles, o["weighted"])
    if o["output"]:
        _write(o["output"], render_report(table, o["format"]))
    return table.to_json()


def _cmd_sample(o) -> dict:
    corpus = load_corpus(o["input"], o["domain"])
    plan = SamplePlan(corpus.domain, size=o["size"], ratio=o["ratio"], seed=o["seed"])
    out = sample_lowres(corpus, plan)
    save_corpus(out, o["output"])
    return {"pool": len(corpus), "sampled": len(out), "seed": o["seed"]}


def _cmd_mix(o) -> dict:
    corpora = [load_corpus(p) for p in o["inputs"]]
    mixed = mix_corpora(corpora, o["exclude"])
    save_corpus(mixed, o["output"])
    return {"examples": len(mixed), "sources": [c.domain for c in corpora
                                                if c.domain != o["exclude"]]}


def _cmd_manifest(o) -> dict:
    stage1 = _kv_pairs(o["stage1"])
    for d, p in stage1.items():
        if not Path(p).exists():
            raise ConfigError(f"stage-1 input for {d!r} does not exist: {p}")
    cfg = PipelineConfig(
        target_domain=o["target_domain"], stage1_corpora=stage1, target_corpus=o["target"],
        mixed_corpus=o["mixed"], dictionaries=_kv_pairs(o["dictionaries"]),
        stage1_checkpoint=o["checkpoint"], seeds={"sample": o["seed"], "train": o["seed"]},
        ratios=o["ratios"])
    manifest = build_manifest(cfg)
    _write(o["output"], manifest.to_json())
    return {"stage1_inputs": len(manifest.stage1_inputs)}


def _vocab_from(paths) -> set[str]:
    return {t for p in paths or [] for toks in utterance_tokens(load_corpus(p)) for t in toks}


def _cmd_train_lm(o) -> dict:
    corpus = load_corpus(o["input"])
    lm = train_lm(corpus, o["order"], o["discount"], o["min_count"], _vocab_from(o["vocab_from"]))
    save_model(lm, o["output"])
    return {"order": lm.order, "vocab_size": len(lm.vocab)}


def _cmd_adapt_lm(o) -> dict:
    base = load_model(o["base"])
    if not hasattr(base, "tables"):
        raise ConfigError("--base must be a plain n-gram model")
    vocab = _vocab_from(o["vocab_from"])
    if vocab:
        vocab |= base.vocab
    res = adapt_lm(base, load_corpus(o["train"]), load_corpus(o["valid"]), o["lambda_grid"],
                   placeholder_aware=o["placeholder_aware"], vocab=vocab)
    save_model(res.model, o["output"])
    data = {"lambda": res.model.lam,
            "grid": [{"lambda": g, "valid_ppl": round(p, 4)} for g, p in zip(res.grid, res.valid_ppl)]}
    if o["report"]:
        _write(o["report"], canonical_json(data))
    return data


def _cmd_ppl(o) -> dict:
    corpus = load_corpus(o["input"])
    lm = load_model(o["model"])
    n = sum(len(t) + 1 for t in utterance_tokens(corpus))
    data = {"model": o["model"], "corpus_digest": file_digest(o["input"]), "N": n,
            "ppl": round(perplexity(lm, corpus), 4)}
    if o["output"]:
        _write(o["output"], canonical_json(data))
    return data


def _cmd_evaluate(o) -> dict:
    hyps, refs = _read_lines(o["hypotheses"]), _read_lines(o["references"])
    if len(hyps) != len(refs):
        raise ConfigError(f"{len(hyps)} hypotheses but {len(refs)} references")
    pairs = [EvalPair(tokenize(normalize_text(h)), tokenize(normalize_text(r)))
             for h, r in zip(hyps, refs)]
    vectors = load_vectors(o["vectors"]) if o["vectors"] else None
    ppl = ppl_from_logprobs(o["logprobs"]) if o["logprobs"] else None
    report = evaluate(pairs, vectors, ppl)
    report = type(report)(report.metrics, report.ppl, {
        **(report.extra or {}),
        "hypotheses_digest": file_digest(o["hypotheses"]),
        "references_digest": file_digest(o["references"]),
        "vectors": "file" if vectors is not None else "one-hot"})
    if o["output"]:
        _write(o["output"], render_report(report, o["format"]))
    return report.to_json()


def _cmd_synth(o) -> dict:
    if o["spec"]:
        spec = TemplateSpec.from_json(json.loads(Path(o["spec"]).read_text(encoding="utf-8")))
    else:
        spec = make_template_spec(seed=o["seed"])
    if o["shared_fraction"] is not None:
        spec = TemplateSpec(spec.shared_templates, spec.domain_templates, spec.lexicons,
                            o["shared_fraction"])
    out_dir = Path(o["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for corpus in synthesize_corpora(spec, o["count"], o["seed"], o["split"]):
        save_corpus(corpus, out_dir / f"{corpus.domain}.{o['split']}.jsonl")
        save_dictionary(lexicon_dictionary(spec, corpus.domain), out_dir / f"{corpus.domain}.dict")
        written.append(corpus.domain)
    return {"domains": written, "per_domain": o["count"]}


HANDLERS: dict[str, Callable[[RunConfig], dict]] = {
    "build-dict": _cmd_build_dict, "dedomain": _cmd_dedomain, "stats": _cmd_stats,
    "similarity": _cmd_similarity, "sample": _cmd_sample, "mix": _cmd_mix,
    "manifest": _cmd_manifest, "train-lm": _cmd_train_lm, "adapt-lm": _cmd_adapt_lm,
    "ppl": _cmd_ppl, "evaluate": _cmd_evaluate, "synth": _cmd_synth,
}


def _paths(config: RunConfig, role: str) -> list[str]:
    out = []
    for o in COMMANDS[config.command]:
        value = config.options.get(o.name)
        if o.role == role and value is not None:
            out += value if isinstance(value, list) else [value]
    return out


def _digests(paths: list[str]) -> dict[str, str]:
    out = {}
    for p in paths:
        path = Path(p)
        if path.is_file():
            out[p] = file_digest(path)
        elif path.is_dir():
            for child in sorted(path.iterdir()):
                if child.is_file():
                    out[str(child)] = file_digest(child)
    return out


def execute(config: RunConfig) -> RunRecord:
    """Run one subcommand (or a whole pipeline) and describe what it did."""
    start = time.perf_counter()
    if config.command == "pipeline":
        records = []
        for i, step in enumerate(config.options["steps"]):
            if not isinstance(step, dict) or "command" not in step:
                raise ConfigError(f"pipeline step {i} needs a 'command'")
            values = {k: v for k, v in step.items() if k != "command"}
            records.append(execute(build_config(step["command"], values, {})).to_json())
        return RunRecord("pipeline", {"steps": config.options["steps"]}, {}, {},
                         time.perf_counter() - start, result={"steps": records})
    inputs = _digests(_paths(config, "in"))
    result = HANDLERS[config.command](config)
    echo = {k: v for k, v in config.options.items() if k != "record"}
    return RunRecord(config.command, echo, inputs, _digests(_paths(config, "out")),
                     time.perf_counter() - start, result=result)


def _error_record(exc: BaseException) -> dict:
    module = "cli"
    for frame, _ in traceback.walk_tb(exc.__traceback__):
        name = frame.f_globals.get("__name__", "")
        if name.startswith("dialaug."):
            module = name.split(".", 1)[1]
    return {"error": {"type": type(exc).__name__, "module": module, "message": str(exc)}}


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        config = parse_config(argv)
        record = execute(config)
    except SystemExit:
        raise
    except ConfigError as exc:
        sys.stderr.write(json.dumps(_error_record(exc), ensure_ascii=False) + "\n")
        return 2
    except Exception as exc:  # noqa: BLE001 - surfaced as a machine-readable record
        sys.stderr.write(json.dumps(_error_record(exc), ensure_ascii=False) + "\n")
        return 1
    if config.options.get("record"):
        _write(config.options["record"], canonical_json(record.to_json()))
    sys.stdout.write(canonical_json(record.result))
    return 0


if __name__ == "__main__":
    sys.exit(main())
