"""Automatic response-quality metrics.

All scores except perplexity are reported on a 0..100 scale. BLEU is the
sentence-level smoothed variant averaged over pairs:

    BLEU-k = BP * exp(mean_{j<=k'} log p_j)

with ``p_j`` the clipped j-gram precision, a zero match count replaced by
``BLEU_EPSILON`` in the numerator, ``k' = min(k, |hyp|)`` (orders the
hypothesis is too short to contain are left out) and the brevity penalty
``BP = exp(1 - |ref| / |hyp|)`` when the hypothesis is shorter than the
reference.
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus import TokenSeq

log = logging.getLogger(__name__)

BLEU_EPSILON = 1e-9
METRIC_KEYS = ("BLEU-1", "BLEU-2", "BLEU-3", "BLEU-4", "Rouge-L", "Dist-1", "Dist-2",
               "Embed-A", "Embed-E", "Embed-G")
REPORT_COLUMNS = METRIC_KEYS + ("AVE", "PPL")


@dataclass(frozen=True)
class EvalPair:
    hypothesis: TokenSeq
    reference: TokenSeq

    def __post_init__(self) -> None:
        if not isinstance(self.hypothesis, TokenSeq):
            object.__setattr__(self, "hypothesis", TokenSeq(tuple(self.hypothesis)))
        if not isinstance(self.reference, TokenSeq):
            object.__setattr__(self, "reference", TokenSeq(tuple(self.reference)))
        if not self.reference.tokens:
            raise ValueError("reference must be non-empty")


@dataclass(frozen=True)
class MetricResult:
    value: float
    flagged: int = 0


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def sentence_bleu(hyp: Sequence[str], ref: Sequence[str], max_n: int = 4) -> list[float]:
    """BLEU-1..max_n of one pair, each on 0..1."""
    if not hyp:
        return [0.0] * max_n
    log_p = []
    for j in range(1, min(max_n, len(hyp)) + 1):
        h, r = _ngram_counts(hyp, j), _ngram_counts(ref, j)
        matched = sum(min(c, r[g]) for g, c in h.items())
        log_p.append(math.log(max(matched, BLEU_EPSILON) / sum(h.values())))
    bp = 1.0 if len(hyp) > len(ref) else math.exp(1.0 - len(ref) / len(hyp))
    out = []
    for k in range(1, max_n + 1):
        used = log_p[:k]
        out.append(bp * math.exp(sum(used) / len(used)))
    return out


def bleu_scores(pairs: Sequence[EvalPair], max_n: int = 4) -> tuple[list[float], int]:
    """Corpus means of BLEU-1..max_n and the number of empty hypotheses."""
    if not pairs:
        raise ValueError("no pairs to score")
    totals = [0.0] * max_n
    flagged = 0
    for p in pairs:
        if not p.hypothesis.tokens:
            flagged += 1
        for i, v in enumerate(sentence_bleu(p.hypothesis.tokens, p.reference.tokens, max_n)):
            totals[i] += v
    return [100.0 * t / len(pairs) for t in totals], flagged


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def rouge_l(pairs: Sequence[EvalPair]) -> MetricResult:
    """Mean LCS F1 (beta = 1) over pairs."""
    if not pairs:
        raise ValueError("no pairs to score")
    total, flagged = 0.0, 0
    for p in pairs:
        hyp, ref = p.hypothesis.tokens, p.reference.tokens
        if not hyp:
            flagged += 1
            continue
        lcs = lcs_length(hyp, ref)
        if lcs:
            prec, rec = lcs / len(hyp), lcs / len(ref)
            total += 2 * prec * rec / (prec + rec)
    return MetricResult(100.0 * total / len(pairs), flagged)


def dist_n(hypotheses: Sequence[TokenSeq], n: int) -> float:
    """Distinct n-grams over total n-grams across all hypotheses."""
    grams: Counter = Counter()
    for h in hypotheses:
        grams.update(_ngram_counts(tuple(h), n))
    total = sum(grams.values())
    if total == 0:
        raise ValueError(f"no {n}-grams in the hypotheses")
    return 100.0 * len(grams) / total


class VectorTable:
    """Token to fixed-dimension vector lookup."""

    def __init__(self, vectors: Mapping[str, np.ndarray] | None = None, dim: int = 300):
        self.dim = dim
        self._vecs: dict[str, np.ndarray] = {}
        for tok, v in (vectors or {}).items():
            self.add(tok, v)

    def add(self, token: str, vec) -> None:
        arr = np.asarray(vec, dtype=np.float64)
        if arr.shape != (self.dim,):
            raise ValueError(f"vector for {token!r} has shape {arr.shape}, expected ({self.dim},)")
        self._vecs[token] = arr

    def __contains__(self, token: str) -> bool:
        return token in self._vecs

    def __getitem__(self, token: str) -> np.ndarray:
        return self._vecs[token]

    def __len__(self) -> int:
        return len(self._vecs)

    def tokens(self) -> list[str]:
        return list(self._vecs)

    def __eq__(self, other) -> bool:
        return (isinstance(other, VectorTable) and self.dim == other.dim
                and self._vecs.keys() == other._vecs.keys()
                and all(np.array_equal(v, other._vecs[k]) for k, v in self._vecs.items()))


def load_vectors(path: str | Path, dim: int | None = None) -> VectorTable:
    """Read a word-vector text file with an optional ``count dim`` header."""
    rows: list[tuple[int, str, list[float]]] = []
    header_dim = None
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            if not line.strip():
                continue
            if lineno == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                header_dim = int(parts[1])
                continue
            try:
                values = [float(x) for x in parts[1:]]
            except ValueError as exc:
                raise ValueError(f"{path}:line {lineno}: non-numeric component") from exc
            rows.append((lineno, parts[0], values))
    width = dim or header_dim or (len(rows[0][2]) if rows else 300)
    table = VectorTable(dim=width)
    for lineno, tok, values in rows:
        if len(values) != width:
            raise ValueError(f"{path}:line {lineno}: expected {width} components, got {len(values)}")
        if tok in table:
            warnings.warn(f"{path}:line {lineno}: duplicate token {tok!r}, keeping the last",
                          stacklevel=2)
        table.add(tok, values)
    return table


def save_vectors(table: VectorTable, path: str | Path) -> None:
    lines = [f"{len(table)} {table.dim}"]
    lines += [tok + " " + " ".join(repr(float(x)) for x in table[tok]) for tok in table.tokens()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _cos(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        return 0.0
    if np.array_equal(u, v):
        return 1.0
    return float(np.dot(u, v) / (nu * nv))


def _extrema(mat: np.ndarray) -> np.ndarray:
    idx = np.abs(mat).argmax(axis=0)
    return mat[idx, np.arange(mat.shape[1])]


def _greedy(a: np.ndarray, b: np.ndarray) -> float:
    an = a / np.maximum(np.linalg.norm(a, axis=1, keepdims=True), 1e-300)
    bn = b / np.maximum(np.linalg.norm(b, axis=1, keepdims=True), 1e-300)
    sims = an @ bn.T
    # identical nonzero rows are exactly 1, not 1 - rounding
    same = (a[:, None, :] == b[None, :, :]).all(axis=-1) & (np.abs(a).sum(axis=1) > 0)[:, None]
    sims[same] = 1.0
    return float((sims.max(axis=1).mean() + sims.max(axis=0).mean()) / 2)


@dataclass(frozen=True)
class EmbeddingScores:
    average: float
    extrema: float
    greedy: float
    flagged: int = 0


def _pair_matrices(p: EvalPair, vectors: VectorTable | None):
    if vectors is None:
        # one-hot vectors over the pair's own tokens: exact-token overlap
        local = {t: i for i, t in enumerate(dict.fromkeys(p.hypothesis.tokens + p.reference.tokens))}
        eye = np.eye(len(local))
        return ([eye[local[t]] for t in p.hypothesis.tokens],
                [eye[local[t]] for t in p.reference.tokens])
    return ([vectors[t] for t in p.hypothesis.tokens if t in vectors],
            [vectors[t] for t in p.reference.tokens if t in vectors])


def embedding_scores(pairs: Sequence[EvalPair], vectors: VectorTable | None,
                     clip_negative: bool = True) -> EmbeddingScores:
    """Embedding Average, Extrema and Greedy over in-vocabulary tokens.

    A pair with one side entirely out of vocabulary scores 0 and is
    flagged. With ``clip_negative`` a negative pair score reports as 0.
    ``vectors=None`` scores with one-hot token vectors.
    """
    if not pairs:
        raise ValueError("no pairs to score")
    sums = np.zeros(3)
    flagged = 0
    for p in pairs:
        hv, rv = _pair_matrices(p, vectors)
        if not hv or not rv:
            flagged += 1
            continue
        h, r = np.vstack(hv), np.vstack(rv)
        if vectors is not None and h.shape[1] != vectors.dim:
            raise ValueError("vector dimension mismatch")
        vals = np.array([_cos(h.mean(axis=0), r.mean(axis=0)),
                         _cos(_extrema(h), _extrema(r)),
                         _greedy(h, r)])
        if clip_negative:
            vals = np.clip(vals, 0.0, None)
        sums += np.minimum(vals, 1.0)
    avg = 100.0 * sums / len(pairs)
    return EmbeddingScores(float(avg[0]), float(avg[1]), float(avg[2]), flagged)


def ppl_from_logprobs(path: str | Path) -> float:
    """Perplexity from line-delimited ``{example_id, token_index, logprob}``
    records of natural-log token probabilities."""
    values = []
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            rec = json.loads(line)
            lp = float(rec["logprob"])
            if lp > 0:
                raise ValueError(f"{path}:line {lineno}: log-probability {lp} > 0")
            values.append(lp)
    if not values:
        raise ValueError(f"{path}: no log-probabilities")
    return float(math.exp(-math.fsum(values) / len(values)))


@dataclass(frozen=True)
class MetricReport:
    metrics: dict[str, float]
    ppl: float | None = None
    extra: dict | None = None

    @property
    def ave(self) -> float:
        return sum(self.metrics[k] for k in METRIC_KEYS) / len(METRIC_KEYS)

    def row(self) -> dict[str, float | None]:
        return {**{k: self.metrics[k] for k in METRIC_KEYS}, "AVE": self.ave, "PPL": self.ppl}

    def to_json(self) -> dict:
        out: dict = {k: round(v, 2) for k, v in self.row().items() if k != "PPL"}
        out["PPL"] = None if self.ppl is None else round(self.ppl, 4)
        if self.extra:
            out["extra"] = self.extra
        return out


def report_aggregate(values: Mapping[str, float], ppl: float | None = None,
                     extra: dict | None = None) -> MetricReport:
    """Collect the ten 0..100 metrics and their unweighted mean."""
    for k in METRIC_KEYS:
        if k not in values:
            raise ValueError(f"missing metric {k!r}")
        if not 0.0 <= values[k] <= 100.0:
            raise ValueError(f"metric {k!r} = {values[k]} outside [0, 100]")
    return MetricReport({k: float(values[k]) for k in METRIC_KEYS}, ppl, extra)


def evaluate(pairs: Sequence[EvalPair], vectors: VectorTable | None = None,
             ppl: float | None = None) -> MetricReport:
    """Full metric suite. Without vectors the embedding metrics are scored
    with one-hot token vectors, i.e. exact-token overlap."""
    bleu, bleu_flag = bleu_scores(pairs)
    rouge = rouge_l(pairs)
    hyps = [p.hypothesis for p in pairs]
    emb = embedding_scores(pairs, vectors)
    values = {"BLEU-1": bleu[0], "BLEU-2": bleu[1], "BLEU-3": bleu[2], "BLEU-4": bleu[3],
              "Rouge-L": rouge.value, "Dist-1": dist_n(hyps, 1), "Dist-2": _dist_or_zero(hyps, 2),
              "Embed-A": emb.average, "Embed-E": emb.extrema, "Embed-G": emb.greedy}
    extra = {"pairs": len(pairs), "empty_hypotheses": bleu_flag,
             "embedding_oov_pairs": emb.flagged}
    return report_aggregate(values, ppl, extra)


def _dist_or_zero(hyps, n):
    try:
        return dist_n(hyps, n)
    except ValueError:
        log.warning("no %d-grams in hypotheses; Dist-%d reported as 0", n, n)
        return 0.0

