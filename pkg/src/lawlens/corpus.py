"""Legal-provision corpus: loading, validation, indexing, fold splits."""

from __future__ import annotations

import datetime
import json
import random
from dataclasses import dataclass, field
from typing import Iterable

from .errors import ParseError, ValidationError
from .taxonomy import TagPath, TagSet, Taxonomy

CORPUS_FIELDS = ("id", "jurisdiction", "source_doc", "article_ref", "text",
                 "tags", "effective_from", "effective_to", "predicates")


@dataclass(frozen=True)
class LegalProvision:
    id: str
    jurisdiction: str
    source_doc: str
    article_ref: str
    text: str
    key_tags: TagSet
    effective_from: datetime.date | None = None
    effective_to: datetime.date | None = None
    predicates: tuple[dict, ...] = ()

    def in_effect(self, date: datetime.date) -> bool:
        if self.effective_from is not None and date < self.effective_from:
            return False
        if self.effective_to is not None and date > self.effective_to:
            return False
        return True


@dataclass
class Corpus:
    provisions: list[LegalProvision]
    by_id: dict[str, LegalProvision] = field(init=False)
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.by_id = {p.id: p for p in self.provisions}

    def __len__(self) -> int:
        return len(self.provisions)

    def __iter__(self):
        return iter(self.provisions)

    def __getitem__(self, pid: str) -> LegalProvision:
        return self.by_id[pid]

    def __contains__(self, pid: str) -> bool:
        return pid in self.by_id


def _parse_date(value, line: int, name: str) -> datetime.date | None:
    if value is None:
        return None
    try:
        return datetime.date.fromisoformat(value)
    except (TypeError, ValueError) as e:
        raise ParseError(f"bad {name} date {value!r}", line=line) from e


def load_corpus(document: str, taxonomy: Taxonomy) -> Corpus:
    """Load a JSON-Lines corpus, validating every invariant line by line."""
    provisions: list[LegalProvision] = []
    seen: dict[str, int] = {}
    warnings: list[str] = []
    seen_shape: dict[tuple, tuple[str, int]] = {}
    for lineno, raw in enumerate(document.splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            rec = json.loads(raw)
        except json.JSONDecodeError as e:
            raise ParseError(f"invalid JSON: {e.msg}", line=lineno) from e
        if not isinstance(rec, dict):
            raise ParseError("provision record must be an object", line=lineno)
        pid = rec.get("id")
        if not pid or not isinstance(pid, str):
            raise ParseError("missing or non-string 'id'", line=lineno)
        if pid in seen:
            raise ValidationError(
                f"duplicate provision id {pid!r} on lines {seen[pid]} and {lineno}"
            )
        seen[pid] = lineno
        text = rec.get("text", "")
        if not isinstance(text, str) or not text:
            raise ParseError(f"provision {pid}: empty text", line=lineno)
        try:
            key_tags = TagSet.of(rec.get("tags", []))
        except ValidationError as e:
            raise ParseError(f"provision {pid}: {e}", line=lineno) from e
        for tag in key_tags:
            if tag not in taxonomy:
                raise ValidationError(
                    f"line {lineno}: provision {pid} references unknown tag {tag}"
                )
        violated = taxonomy.check_consistency(key_tags)
        if violated:
            groups = "; ".join(
                "{" + ", ".join(str(t) for t in sorted(g)) + "}" for g in violated
            )
            raise ValidationError(
                f"line {lineno}: provision {pid} key set violates exclusion "
                f"group(s) {groups}"
            )
        eff_from = _parse_date(rec.get("effective_from"), lineno, "effective_from")
        eff_to = _parse_date(rec.get("effective_to"), lineno, "effective_to")
        if eff_from and eff_to and eff_from > eff_to:
            raise ValidationError(
                f"line {lineno}: provision {pid} effective_from after effective_to"
            )
        provision = LegalProvision(
            id=pid,
            jurisdiction=rec.get("jurisdiction", ""),
            source_doc=rec.get("source_doc", ""),
            article_ref=rec.get("article_ref", ""),
            text=text,
            key_tags=key_tags,
            effective_from=eff_from,
            effective_to=eff_to,
            predicates=tuple(rec.get("predicates") or ()),
        )
        shape = (provision.source_doc, provision.article_ref, key_tags.tags)
        if shape in seen_shape:
            other, other_line = seen_shape[shape]
            warnings.append(
                f"provisions {other} (line {other_line}) and {pid} (line {lineno}) "
                "share identical (source_doc, article_ref, key_tags)"
            )
        else:
            seen_shape[shape] = (pid, lineno)
        provisions.append(provision)
    return Corpus(provisions, warnings=warnings)


def load_corpus_file(path: str, taxonomy: Taxonomy) -> Corpus:
    with open(path, encoding="utf-8") as f:
        return load_corpus(f.read(), taxonomy)


def effective_at(corpus: Corpus, date: datetime.date) -> set[str]:
    """Ids of provisions whose effective window contains `date`."""
    return {p.id for p in corpus if p.in_effect(date)}


@dataclass
class AnnotationSet:
    """(provision id, tag) -> binary label; unlisted pairs are negative."""

    pairs: dict[tuple[str, TagPath], int]
    folds: dict[str, int] = field(default_factory=dict)

    def positives_for(self, pid: str) -> set[TagPath]:
        return {tag for (p, tag), y in self.pairs.items() if p == pid and y == 1}

    def provision_ids(self) -> list[str]:
        return sorted({pid for pid, _ in self.pairs})


def load_annotations(document: str, corpus: Corpus,
                     taxonomy: Taxonomy) -> AnnotationSet:
    pairs: dict[tuple[str, TagPath], int] = {}
    for lineno, raw in enumerate(document.splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            rec = json.loads(raw)
        except json.JSONDecodeError as e:
            raise ParseError(f"invalid JSON: {e.msg}", line=lineno) from e
        pid = rec.get("provision_id")
        if pid not in corpus:
            raise ValidationError(f"line {lineno}: unknown provision {pid!r}")
        tag = TagPath.parse(rec["tag"])
        taxonomy.require(tag)
        label = int(rec["label"])
        if label not in (0, 1):
            raise ValidationError(f"line {lineno}: label must be 0 or 1")
        pairs[(pid, tag)] = label
    return AnnotationSet(pairs)


def annotations_from_corpus(corpus: Corpus, nodes: Iterable[TagPath]) -> AnnotationSet:
    """Dense annotations over the given nodes using key sets as truth."""
    nodes = list(nodes)
    pairs: dict[tuple[str, TagPath], int] = {}
    for p in corpus:
        for n in nodes:
            pairs[(p.id, n)] = 1 if n in p.key_tags else 0
    return AnnotationSet(pairs)


def make_folds(annotations: AnnotationSet, k: int, seed: int) -> dict[str, int]:
    """Deterministic k-fold partition of provision ids; sizes differ by <= 1."""
    ids = annotations.provision_ids()
    if k < 2 or k > len(ids):
        raise ValidationError(f"k={k} out of range for {len(ids)} provisions")
    rng = random.Random(seed)
    rng.shuffle(ids)
    assignment = {pid: i % k for i, pid in enumerate(ids)}
    annotations.folds = assignment
    return assignment
