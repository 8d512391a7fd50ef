"""Law-compliance layer over a road network, emitted as GeoJSON."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .corpus import Corpus
from .derivation import derive_for_scenario
from .errors import ParseError, ValidationError
from .retrieval import RetrievalIndex
from .taxonomy import TagPath, TagSet, Taxonomy

COORD_DECIMALS = 7   # ~1 cm; fixed so output hashes are stable


@dataclass
class Way:
    id: str
    node_ids: list[str]
    attributes: dict[str, str]


@dataclass
class RoadNetwork:
    nodes: dict[str, tuple[float, float]]    # id -> (lon, lat) degrees
    ways: dict[str, Way]


def load_network(document: str) -> RoadNetwork:
    """Parse a pre-extracted network JSON and validate referential
    integrity."""
    try:
        data = json.loads(document)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", line=e.lineno) from e
    nodes: dict[str, tuple[float, float]] = {}
    for nid, coords in (data.get("nodes") or {}).items():
        lon, lat = float(coords[0]), float(coords[1])
        nodes[nid] = (lon, lat)
    ways: dict[str, Way] = {}
    for wid, rec in (data.get("ways") or {}).items():
        node_ids = [str(n) for n in rec.get("nodes", [])]
        if len(node_ids) < 2:
            raise ValidationError(f"way {wid} has fewer than 2 nodes")
        for nid in node_ids:
            if nid not in nodes:
                raise ValidationError(
                    f"way {wid} references missing node {nid}"
                )
        attrs = {str(k): str(v) for k, v in (rec.get("tags") or {}).items()}
        ways[wid] = Way(id=wid, node_ids=node_ids, attributes=attrs)
    return RoadNetwork(nodes=nodes, ways=ways)


def load_network_file(path: str) -> RoadNetwork:
    with open(path, encoding="utf-8") as f:
        return load_network(f.read())


@dataclass
class MappingRule:
    key: str
    value: str | None            # None matches any value for the key
    tags: TagSet

    def matches(self, attributes: dict[str, str]) -> bool:
        if self.key not in attributes:
            return False
        return self.value is None or attributes[self.key] == self.value


@dataclass
class TagMapping:
    rules: list[MappingRule] = field(default_factory=list)


def load_mapping(document: str, taxonomy: Taxonomy) -> TagMapping:
    """Mapping JSON: `{"rules":[{"match":{"highway":"residential"},
    "tags":["/Road/Road type/Urban road"]}, ...]}`; rule order matters."""
    try:
        data = json.loads(document)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", line=e.lineno) from e
    rules = []
    for i, rec in enumerate(data.get("rules", [])):
        match = rec.get("match") or {}
        if len(match) != 1:
            raise ValidationError(
                f"rule {i}: 'match' must contain exactly one attribute"
            )
        (key, value), = match.items()
        tags = TagSet.of(rec.get("tags", []))
        for tag in tags:
            taxonomy.require(tag)
        rules.append(MappingRule(key=key, value=value, tags=tags))
    return TagMapping(rules=rules)


def map_tags(network: RoadNetwork, mapping: TagMapping,
             taxonomy: Taxonomy) -> dict[str, TagSet]:
    """Per way, the union of matching rules' tags. Exclusion conflicts
    resolve last-matching-rule-wins within the violated group."""
    out: dict[str, TagSet] = {}
    for wid in sorted(network.ways):
        way = network.ways[wid]
        tags: set[TagPath] = set()
        last_rule_index: dict[TagPath, int] = {}
        for i, rule in enumerate(mapping.rules):
            if rule.matches(way.attributes):
                for tag in rule.tags:
                    tags.add(tag)
                    last_rule_index[tag] = i
        changed = True
        while changed:
            changed = False
            for group in taxonomy.check_consistency(TagSet(frozenset(tags))):
                members = group & tags
                keep = max(members, key=lambda t: (last_rule_index[t], str(t)))
                tags -= members
                tags.add(keep)
                changed = True
        out[wid] = TagSet(frozenset(tags))
    return out


def _round_coords(network: RoadNetwork, way: Way) -> list[list[float]]:
    return [
        [round(network.nodes[nid][0], COORD_DECIMALS),
         round(network.nodes[nid][1], COORD_DECIMALS)]
        for nid in way.node_ids
    ]


def build_layer(network: RoadNetwork, mapping: TagMapping, corpus: Corpus,
                index: RetrievalIndex, taxonomy: Taxonomy,
                engine: str = "rule-based", backend=None) -> dict:
    """GeoJSON FeatureCollection with one feature per way that mapped to a
    non-empty tag set; ways with no governing tags are omitted."""
    way_tags = map_tags(network, mapping, taxonomy)
    features = []
    derived_cache: dict[frozenset, dict] = {}
    for wid in sorted(network.ways):
        tags = way_tags[wid]
        if not tags:
            continue
        cache_key = tags.tags
        if cache_key not in derived_cache:
            reqs = derive_for_scenario(index, corpus, taxonomy, tags,
                                       engine=engine, backend=backend)
            derived_cache[cache_key] = {
                "mandatory": [
                    {"behavior": r.behavior, "provision_id": r.provision_id}
                    for r in reqs.mandatory
                ],
                "prohibitive": [
                    {"behavior": r.behavior, "provision_id": r.provision_id}
                    for r in reqs.prohibitive
                ],
                "provisions": reqs.provenance,
            }
        features.append({
            "type": "Feature",
            "geometry": {
                "type": "LineString",
                "coordinates": _round_coords(network, network.ways[wid]),
            },
            "properties": {
                "way_id": wid,
                "scenario_tags": tags.as_strings(),
                "law_compliance": derived_cache[cache_key],
            },
        })
    return {"type": "FeatureCollection", "features": features}
