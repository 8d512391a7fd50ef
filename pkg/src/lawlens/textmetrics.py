"""n-gram and embedding-based scoring of derived requirement text."""

from __future__ import annotations

import math
import unicodedata
from collections import Counter
from dataclasses import dataclass

from .derivation import RequirementSet
from .errors import ValidationError
from .featurize import _is_cjk


def tokenize(text: str) -> list[str]:
    """NFC-normalize, lowercase, drop punctuation; CJK codepoints become
    single-character tokens, other scripts split on word boundaries."""
    text = unicodedata.normalize("NFC", text)
    tokens: list[str] = []
    buf: list[str] = []
    for ch in text:
        if _is_cjk(ch):
            if buf:
                tokens.append("".join(buf))
                buf = []
            tokens.append(ch)
        elif ch.isalnum():
            buf.append(ch.lower())
        else:
            if buf:
                tokens.append("".join(buf))
                buf = []
    if buf:
        tokens.append("".join(buf))
    return tokens


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def ngram_f1(candidate: list[str], reference: list[str], n: int) -> float:
    """Clipped-count n-gram F1. Both empty -> 1.0; exactly one empty -> 0.0."""
    if n not in (1, 2):
        raise ValidationError(f"n must be 1 or 2, got {n}")
    cand = _ngrams(candidate, n)
    ref = _ngrams(reference, n)
    if not cand and not ref:
        return 1.0
    if not cand or not ref:
        return 0.0
    overlap = sum((cand & ref).values())
    precision = overlap / sum(cand.values())
    recall = overlap / sum(ref.values())
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def semantic_f1(backend, candidate: list[str], reference: list[str]) -> float:
    """Greedy-matching cosine F1 over per-token embeddings."""
    if not candidate and not reference:
        return 1.0
    if not candidate or not reference:
        return 0.0
    cand_vecs = backend.embed(candidate)
    ref_vecs = backend.embed(reference)
    dims = {len(v) for v in cand_vecs} | {len(v) for v in ref_vecs}
    if len(dims) != 1:
        raise ValidationError(f"embedding dimension mismatch: {sorted(dims)}")

    def cosine(a, b):
        num = sum(x * y for x, y in zip(a, b))
        na = math.sqrt(sum(x * x for x in a))
        nb = math.sqrt(sum(x * x for x in b))
        if na == 0 or nb == 0:
            return 0.0
        return num / (na * nb)

    precision = sum(max(cosine(c, r) for r in ref_vecs) for c in cand_vecs) / len(cand_vecs)
    recall = sum(max(cosine(r, c) for c in cand_vecs) for r in ref_vecs) / len(ref_vecs)
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


@dataclass
class ScoreRecord:
    scenario_id: str
    onegram_f1: float
    twogram_f1: float
    semantic_f1: float | None = None

    def to_json(self) -> dict:
        out = {
            "scenario_id": self.scenario_id,
            "onegram_f1": self.onegram_f1,
            "twogram_f1": self.twogram_f1,
        }
        if self.semantic_f1 is not None:
            out["semantic_f1"] = self.semantic_f1
        return out


def _category_text(reqs) -> str:
    # Behavior texts joined in retrieval order; one score per category.
    return " ".join(r.behavior for r in reqs)


def score_requirement_sets(derived: RequirementSet, truth: RequirementSet,
                           scenario_id: str = "",
                           backend=None) -> tuple[ScoreRecord, ScoreRecord]:
    """Score (mandatory, prohibitive) category texts independently."""
    records = []
    for reqs_d, reqs_t in ((derived.mandatory, truth.mandatory),
                           (derived.prohibitive, truth.prohibitive)):
        cand = tokenize(_category_text(reqs_d))
        ref = tokenize(_category_text(reqs_t))
        records.append(ScoreRecord(
            scenario_id=scenario_id,
            onegram_f1=ngram_f1(cand, ref, 1),
            twogram_f1=ngram_f1(cand, ref, 2),
            semantic_f1=semantic_f1(backend, cand, ref) if backend else None,
        ))
    return records[0], records[1]


def aggregate(records: list[ScoreRecord]) -> dict:
    """Distribution summary per metric: mean, median, quartiles, and a
    20-bin histogram over [0, 1]; plot-ready JSON."""
    if not records:
        raise ValidationError("aggregate requires at least one record")
    out: dict = {"count": len(records), "metrics": {}}
    metric_values = {
        "onegram_f1": [r.onegram_f1 for r in records],
        "twogram_f1": [r.twogram_f1 for r in records],
    }
    sem = [r.semantic_f1 for r in records if r.semantic_f1 is not None]
    if sem:
        metric_values["semantic_f1"] = sem
    for name, values in metric_values.items():
        out["metrics"][name] = summarize(values)
    return out


def _quantile(sorted_values: list[float], q: float) -> float:
    # Linear interpolation between closest ranks (numpy default).
    n = len(sorted_values)
    if n == 1:
        return sorted_values[0]
    pos = q * (n - 1)
    lo = int(math.floor(pos))
    hi = int(math.ceil(pos))
    frac = pos - lo
    return sorted_values[lo] * (1 - frac) + sorted_values[hi] * frac


def summarize(values: list[float], bins: int = 20) -> dict:
    vs = sorted(values)
    hist = [0] * bins
    for v in vs:
        idx = min(int(v * bins), bins - 1)
        hist[idx] += 1
    return {
        "mean": sum(vs) / len(vs),
        "median": _quantile(vs, 0.5),
        "q1": _quantile(vs, 0.25),
        "q3": _quantile(vs, 0.75),
        "min": vs[0],
        "max": vs[-1],
        "histogram": {"bins": bins, "lo": 0.0, "hi": 1.0, "counts": hist},
    }
