"""Hierarchical scenario taxonomy: paths, prefix closure, exclusions."""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .errors import ParseError, TagLookupError, ValidationError


@dataclass(frozen=True, order=True)
class TagPath:
    """A scenario concept addressed by its root-to-node path."""

    segments: tuple[str, ...]

    def __post_init__(self):
        if not self.segments:
            raise ValidationError("tag path needs at least one segment")
        for seg in self.segments:
            if not seg:
                raise ValidationError("empty segment in tag path")
            if "/" in seg:
                raise ValidationError(f"segment contains '/': {seg!r}")

    @classmethod
    def parse(cls, text: str) -> "TagPath":
        # Labels compare byte-wise after NFC normalization.
        text = unicodedata.normalize("NFC", text)
        if not text.startswith("/"):
            raise ValidationError(f"tag path must start with '/': {text!r}")
        return cls(tuple(text[1:].split("/")))

    def __str__(self) -> str:
        return "/" + "/".join(self.segments)

    @property
    def parent(self) -> "TagPath | None":
        if len(self.segments) == 1:
            return None
        return TagPath(self.segments[:-1])

    def ancestors(self) -> list["TagPath"]:
        """All strict prefixes, shortest first; excludes self."""
        return [TagPath(self.segments[:k]) for k in range(1, len(self.segments))]


def ancestors(path: TagPath) -> list[TagPath]:
    return path.ancestors()


@dataclass(frozen=True)
class TagSet:
    """An immutable set of tag paths."""

    tags: frozenset[TagPath] = frozenset()

    @classmethod
    def of(cls, paths: Iterable[TagPath | str]) -> "TagSet":
        return cls(frozenset(
            p if isinstance(p, TagPath) else TagPath.parse(p) for p in paths
        ))

    def __contains__(self, path: TagPath) -> bool:
        return path in self.tags

    def __iter__(self) -> Iterator[TagPath]:
        return iter(self.tags)

    def __len__(self) -> int:
        return len(self.tags)

    def __or__(self, other: "TagSet") -> "TagSet":
        return TagSet(self.tags | other.tags)

    def sorted(self) -> list[TagPath]:
        return sorted(self.tags)

    def as_strings(self) -> list[str]:
        return [str(p) for p in self.sorted()]


@dataclass
class Taxonomy:
    """Immutable after construction; safe for concurrent reads."""

    nodes: frozenset[TagPath]
    exclusion_groups: list[frozenset[TagPath]]
    warnings: list[str] = field(default_factory=list)

    @property
    def roots(self) -> list[TagPath]:
        return sorted(p for p in self.nodes if len(p.segments) == 1)

    def __contains__(self, path: TagPath) -> bool:
        return path in self.nodes

    def require(self, path: TagPath) -> None:
        if path not in self.nodes:
            raise TagLookupError(str(path))

    def closure(self, tags: TagSet) -> TagSet:
        """Tags plus all their ancestors. Idempotent and monotone."""
        out: set[TagPath] = set()
        for tag in tags:
            self.require(tag)
            out.add(tag)
            out.update(tag.ancestors())
        return TagSet(frozenset(out))

    def check_consistency(self, tags: TagSet) -> list[frozenset[TagPath]]:
        """Exclusion groups with >= 2 members present in `tags`."""
        for tag in tags:
            self.require(tag)
        present = tags.tags
        return [g for g in self.exclusion_groups if len(g & present) >= 2]

    def is_consistent(self, tags: TagSet) -> bool:
        return not self.check_consistency(tags)


def parse_taxonomy(document: str) -> Taxonomy:
    """Parse the taxonomy JSON document.

    Missing intermediate nodes are auto-inserted and reported as warnings
    (annotators list leaves). Exclusion groups must reference known nodes
    and all members of a group must share the same parent.
    """
    try:
        data = json.loads(document)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", line=e.lineno) from e
    if not isinstance(data, dict) or "nodes" not in data:
        raise ParseError("taxonomy document must be an object with 'nodes'")

    nodes: set[TagPath] = set()
    warnings: list[str] = []
    for i, raw in enumerate(data.get("nodes", [])):
        try:
            path = TagPath.parse(raw)
        except ValidationError as e:
            raise ParseError(f"malformed path {raw!r}: {e}", line=i + 1) from e
        nodes.add(path)
    # Prefix-close the node set.
    listed = set(nodes)
    for path in list(nodes):
        for anc in path.ancestors():
            if anc not in listed and anc not in nodes:
                warnings.append(f"auto-inserted missing intermediate node {anc}")
            nodes.add(anc)

    groups: list[frozenset[TagPath]] = []
    for gi, raw_group in enumerate(data.get("exclusions", [])):
        members = []
        for raw in raw_group:
            path = TagPath.parse(raw)
            if path not in nodes:
                raise ValidationError(
                    f"exclusion group {gi} references unknown node {path}"
                )
            members.append(path)
        parents = {m.parent for m in members}
        if len(parents) > 1:
            raise ValidationError(
                f"exclusion group {gi} members are not siblings: "
                + ", ".join(str(m) for m in members)
            )
        groups.append(frozenset(members))

    return Taxonomy(nodes=frozenset(nodes), exclusion_groups=groups,
                    warnings=warnings)


def load_taxonomy(path: str) -> Taxonomy:
    with open(path, encoding="utf-8") as f:
        return parse_taxonomy(f.read())
