import json

import pytest

from lawlens.derivation import derive_for_scenario
from lawlens.errors import ValidationError
from lawlens.lawlayer import (build_layer, load_mapping, load_network,
                              map_tags)
from lawlens.retrieval import build_index
from lawlens.taxonomy import TagSet


@pytest.fixture(scope="module")
def network(fixtures_dir):
    return load_network((fixtures_dir / "network.json").read_text())


@pytest.fixture(scope="module")
def mapping(fixtures_dir, taxonomy):
    return load_mapping((fixtures_dir / "mapping.json").read_text(), taxonomy)


# -- network loading ---------------------------------------------------


def test_two_node_one_way():
    doc = json.dumps({"nodes": {"a": [0.0, 0.0], "b": [1.0, 1.0]},
                      "ways": {"w1": {"nodes": ["a", "b"],
                                      "tags": {"highway": "residential"}}}})
    net = load_network(doc)
    assert len(net.ways) == 1
    assert net.ways["w1"].node_ids == ["a", "b"]


def test_dangling_node_reference_named():
    doc = json.dumps({"nodes": {"a": [0.0, 0.0]},
                      "ways": {"w1": {"nodes": ["a", "ghost"], "tags": {}}}})
    with pytest.raises(ValidationError, match="w1.*ghost"):
        load_network(doc)


def test_short_way_rejected():
    doc = json.dumps({"nodes": {"a": [0.0, 0.0]},
                      "ways": {"w1": {"nodes": ["a"], "tags": {}}}})
    with pytest.raises(ValidationError):
        load_network(doc)


def test_empty_document():
    net = load_network(json.dumps({"nodes": {}, "ways": {}}))
    assert len(net.ways) == 0


# -- tag mapping -------------------------------------------------------


def test_rule_application(network, mapping, taxonomy):
    tags = map_tags(network, mapping, taxonomy)
    assert "/Road/Road type/Urban road" in tags["w100"].as_strings()


def test_wildcard_rule(network, mapping, taxonomy):
    # construction=<anything> maps to the work-zone tag
    tags = map_tags(network, mapping, taxonomy)
    assert ("/Traffic management/Temporary traffic control/Work zone"
            in tags["w101"].as_strings())


def test_unmatched_way_gets_empty_set(network, mapping, taxonomy):
    tags = map_tags(network, mapping, taxonomy)
    assert len(tags["w103"]) == 0


def test_exclusive_siblings_last_rule_wins(taxonomy):
    net = load_network(json.dumps({
        "nodes": {"a": [0.0, 0.0], "b": [1.0, 1.0]},
        "ways": {"w1": {"nodes": ["a", "b"],
                        "tags": {"highway": "residential", "lanes": "1",
                                 "oneway": "yes"}}}}))
    doc = json.dumps({"rules": [
        {"match": {"lanes": "1"}, "tags": ["/Road/Lanes/single-lane"]},
        {"match": {"oneway": "yes"}, "tags": ["/Road/Lanes/two-lanes"]},
    ]})
    mapping = load_mapping(doc, taxonomy)
    tags = map_tags(net, mapping, taxonomy)
    assert tags["w1"].as_strings() == ["/Road/Lanes/two-lanes"]
    assert taxonomy.is_consistent(tags["w1"])


def test_mapping_requires_single_match_attribute(taxonomy):
    doc = json.dumps({"rules": [
        {"match": {"a": "1", "b": "2"}, "tags": ["/Road"]}]})
    with pytest.raises(ValidationError):
        load_mapping(doc, taxonomy)


# -- layer building ----------------------------------------------------


def test_empty_network_empty_collection(mapping, corpus, index, taxonomy):
    net = load_network(json.dumps({"nodes": {}, "ways": {}}))
    layer = build_layer(net, mapping, corpus, index, taxonomy)
    assert layer == {"type": "FeatureCollection", "features": []}


def test_fixture_layer_soundness(network, mapping, corpus, index, taxonomy):
    """Every feature's law_compliance equals an independent
    derive_for_scenario recomputation on its scenario tags."""
    layer = build_layer(network, mapping, corpus, index, taxonomy)
    assert layer["features"], "fixture should produce features"
    for feature in layer["features"]:
        tags = TagSet.of(feature["properties"]["scenario_tags"])
        rs = derive_for_scenario(index, corpus, taxonomy, tags)
        block = feature["properties"]["law_compliance"]
        assert block["mandatory"] == [
            {"behavior": r.behavior, "provision_id": r.provision_id}
            for r in rs.mandatory]
        assert block["prohibitive"] == [
            {"behavior": r.behavior, "provision_id": r.provision_id}
            for r in rs.prohibitive]
        assert block["provisions"] == rs.provenance


def test_work_zone_way_carries_parking_prohibition(network, mapping, corpus,
                                                   index, taxonomy):
    layer = build_layer(network, mapping, corpus, index, taxonomy)
    w101 = next(f for f in layer["features"]
                if f["properties"]["way_id"] == "w101")
    behaviors = [r["behavior"]
                 for r in w101["properties"]["law_compliance"]["prohibitive"]]
    assert "Parking within the work zone" in behaviors


def test_identical_tags_identical_blocks(mapping, corpus, index, taxonomy):
    net = load_network(json.dumps({
        "nodes": {"a": [0.0, 0.0], "b": [1.0, 1.0], "c": [2.0, 2.0]},
        "ways": {"w1": {"nodes": ["a", "b"],
                        "tags": {"highway": "motorway"}},
                 "w2": {"nodes": ["b", "c"],
                        "tags": {"highway": "motorway"}}}}))
    layer = build_layer(net, mapping, corpus, index, taxonomy)
    blocks = [f["properties"]["law_compliance"] for f in layer["features"]]
    assert blocks[0] == blocks[1]


def test_unmapped_way_omitted(network, mapping, corpus, index, taxonomy):
    layer = build_layer(network, mapping, corpus, index, taxonomy)
    ids = [f["properties"]["way_id"] for f in layer["features"]]
    assert "w103" not in ids
    assert ids == sorted(ids)


# -- external GeoJSON validity -----------------------------------------


def _validate_geojson(doc):
    """Independent structural GeoJSON check (RFC 7946 subset)."""
    assert doc["type"] == "FeatureCollection"
    assert isinstance(doc["features"], list)
    for f in doc["features"]:
        assert f["type"] == "Feature"
        geom = f["geometry"]
        assert geom["type"] == "LineString"
        coords = geom["coordinates"]
        assert len(coords) >= 2
        for pos in coords:
            lon, lat = pos
            assert isinstance(lon, float) and isinstance(lat, float)
            assert -180.0 <= lon <= 180.0
            assert -90.0 <= lat <= 90.0
        assert isinstance(f["properties"], dict)


def test_layer_is_valid_geojson(network, mapping, corpus, index, taxonomy):
    layer = build_layer(network, mapping, corpus, index, taxonomy)
    # round-trip through JSON to mirror what the CLI writes to disk
    _validate_geojson(json.loads(json.dumps(layer)))
