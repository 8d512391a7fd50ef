"""Subset-condition retrieval: a provision applies iff its key set K is
contained in the ancestor-closed query set Q."""

from __future__ import annotations

import datetime
from collections import defaultdict
from dataclasses import dataclass, field

from .corpus import Corpus
from .errors import ValidationError
from .taxonomy import TagPath, TagSet, Taxonomy


@dataclass
class Query:
    active_tags: TagSet
    closure_cache: TagSet
    date: datetime.date | None = None

    @classmethod
    def build(cls, taxonomy: Taxonomy, active: TagSet,
              date: datetime.date | None = None) -> "Query":
        violated = taxonomy.check_consistency(active)
        if violated:
            groups = "; ".join(
                "{" + ", ".join(str(t) for t in sorted(g)) + "}" for g in violated
            )
            raise ValidationError(
                f"query tags violate exclusion group(s) {groups}"
            )
        return cls(active_tags=active, closure_cache=taxonomy.closure(active),
                   date=date)


@dataclass
class RetrievalIndex:
    corpus: Corpus
    postings: dict[TagPath, set[str]] = field(default_factory=dict)
    key_size: dict[str, int] = field(default_factory=dict)
    empty_key: list[str] = field(default_factory=list)   # always candidates


def build_index(corpus: Corpus) -> RetrievalIndex:
    postings: dict[TagPath, set[str]] = defaultdict(set)
    key_size: dict[str, int] = {}
    empty_key: list[str] = []
    for p in corpus:
        key_size[p.id] = len(p.key_tags)
        if not p.key_tags:
            empty_key.append(p.id)
            continue
        for tag in p.key_tags:
            postings[tag].add(p.id)
    return RetrievalIndex(corpus=corpus, postings=dict(postings),
                          key_size=key_size, empty_key=sorted(empty_key))


def _order(index: RetrievalIndex, ids: set[str]) -> list[str]:
    # Specific provisions (larger K) first, then id for stability.
    return sorted(ids, key=lambda pid: (-index.key_size[pid], pid))


def retrieve(index: RetrievalIndex, query: Query) -> list[str]:
    """Exactly {p : K_p subset of Q}, by per-candidate tag-hit counting."""
    hits: dict[str, int] = defaultdict(int)
    for tag in query.closure_cache:
        for pid in index.postings.get(tag, ()):
            hits[pid] += 1
    matched = {pid for pid, n in hits.items() if n == index.key_size[pid]}
    matched.update(index.empty_key)
    if query.date is not None:
        matched = {pid for pid in matched
                   if index.corpus[pid].in_effect(query.date)}
    return _order(index, matched)


def brute_force_retrieve(corpus: Corpus, query: Query) -> set[str]:
    """Independent oracle: direct subset scan over the whole corpus."""
    q = set(query.closure_cache)
    out = set()
    for p in corpus:
        if query.date is not None and not p.in_effect(query.date):
            continue
        if set(p.key_tags) <= q:
            out.add(p.id)
    return out


@dataclass
class TagSatisfaction:
    tag: TagPath
    satisfied: bool
    via_ancestor: bool   # satisfied only through closure augmentation


@dataclass
class SatisfactionReport:
    provision_id: str
    tags: list[TagSatisfaction]
    retrieved: bool


def explain(index: RetrievalIndex, query: Query,
            provision_id: str) -> SatisfactionReport:
    if provision_id not in index.corpus:
        raise ValidationError(f"unknown provision id {provision_id!r}")
    provision = index.corpus[provision_id]
    active = set(query.active_tags)
    closed = set(query.closure_cache)
    tags = []
    for tag in provision.key_tags.sorted():
        satisfied = tag in closed
        tags.append(TagSatisfaction(
            tag=tag,
            satisfied=satisfied,
            via_ancestor=satisfied and tag not in active,
        ))
    return SatisfactionReport(
        provision_id=provision_id,
        tags=tags,
        retrieved=all(t.satisfied for t in tags),
    )
