import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lawlens.errors import TagLookupError, ValidationError
from lawlens.taxonomy import TagPath, TagSet, parse_taxonomy

# -- TagPath -----------------------------------------------------------


def test_parse_serialize_round_trip():
    raw = "/Road/Intersection/T-intersection"
    assert str(TagPath.parse(raw)) == raw


def test_parse_rejects_empty_segment():
    with pytest.raises(ValidationError):
        TagPath.parse("/Road//Intersection")


def test_parse_rejects_missing_leading_slash():
    with pytest.raises(ValidationError):
        TagPath.parse("Road/Intersection")


def test_ancestors_of_deep_path():
    p = TagPath.parse("/Road/Intersection/T-intersection")
    assert [str(a) for a in p.ancestors()] == ["/Road", "/Road/Intersection"]


def test_ancestors_of_root_is_empty():
    assert TagPath.parse("/Road").ancestors() == []


def test_ancestors_of_weather_rain():
    p = TagPath.parse("/Environment/Weather/Rain")
    assert [str(a) for a in p.ancestors()] == [
        "/Environment", "/Environment/Weather"]


# -- parse_taxonomy ----------------------------------------------------


def test_prefix_auto_insertion():
    doc = json.dumps({"nodes": ["/Road/Intersection/T-intersection"],
                      "exclusions": []})
    t = parse_taxonomy(doc)
    assert {str(n) for n in t.nodes} == {
        "/Road", "/Road/Intersection", "/Road/Intersection/T-intersection"}
    assert t.warnings  # missing prefixes were reported


def test_empty_taxonomy():
    t = parse_taxonomy(json.dumps({"nodes": [], "exclusions": []}))
    assert len(t.nodes) == 0
    assert t.roots == []


def test_sibling_exclusion_group_accepted():
    doc = json.dumps({
        "nodes": ["/Road/Lanes/single-lane", "/Road/Lanes/two-lanes"],
        "exclusions": [["/Road/Lanes/single-lane", "/Road/Lanes/two-lanes"]],
    })
    t = parse_taxonomy(doc)
    assert len(t.exclusion_groups) == 1


def test_non_sibling_exclusion_rejected():
    doc = json.dumps({
        "nodes": ["/Road/Lanes/single-lane", "/Environment/Weather/Rain"],
        "exclusions": [["/Road/Lanes/single-lane",
                        "/Environment/Weather/Rain"]],
    })
    with pytest.raises(ValidationError):
        parse_taxonomy(doc)


def test_exclusion_member_must_be_node():
    doc = json.dumps({"nodes": ["/Road/Lanes/single-lane"],
                      "exclusions": [["/Road/Lanes/single-lane",
                                      "/Road/Lanes/ten-lanes"]]})
    with pytest.raises((ValidationError, TagLookupError)):
        parse_taxonomy(doc)


# -- bundled fixture ---------------------------------------------------


def test_bundled_fixture_shape(taxonomy):
    assert len(taxonomy.nodes) == 227
    assert len(taxonomy.roots) == 6


def test_bundled_fixture_prefix_closed(taxonomy):
    for node in taxonomy.nodes:
        for anc in node.ancestors():
            assert anc in taxonomy.nodes


def test_bundled_exclusions_are_siblings(taxonomy):
    for group in taxonomy.exclusion_groups:
        parents = {m.parent for m in group}
        assert len(parents) == 1


# -- closure & consistency ---------------------------------------------


def test_closure_adds_all_prefixes(taxonomy):
    tags = TagSet.of(["/Road/Intersection/T-intersection"])
    closed = taxonomy.closure(tags)
    assert closed.as_strings() == [
        "/Road", "/Road/Intersection", "/Road/Intersection/T-intersection"]


def test_closure_empty(taxonomy):
    assert len(taxonomy.closure(TagSet())) == 0


def test_closure_idempotent_on_mixed_input(taxonomy):
    a = taxonomy.closure(TagSet.of(["/Road/Intersection/T-intersection"]))
    b = taxonomy.closure(TagSet.of(
        ["/Road/Intersection", "/Road/Intersection/T-intersection"]))
    assert set(a) == set(b)


def test_check_consistency_flags_sibling_pair(taxonomy):
    tags = TagSet.of(["/Road/Lanes/single-lane", "/Road/Lanes/two-lanes"])
    violated = taxonomy.check_consistency(tags)
    assert len(violated) == 1
    assert not taxonomy.is_consistent(tags)


def test_check_consistency_allows_cooccurring(taxonomy):
    tags = TagSet.of(["/Infrastructure/Road markings/stop line",
                      "/Infrastructure/Road markings/crosswalk"])
    assert taxonomy.check_consistency(tags) == []


def test_check_consistency_empty(taxonomy):
    assert taxonomy.check_consistency(TagSet()) == []


def test_require_unknown_tag(taxonomy):
    with pytest.raises(TagLookupError):
        taxonomy.require(TagPath.parse("/Nonexistent"))


# -- property tests ----------------------------------------------------

_segment = st.text(
    alphabet=st.characters(whitelist_categories=("Ll", "Lu", "Nd")),
    min_size=1, max_size=6)
_paths = st.lists(
    st.lists(_segment, min_size=1, max_size=4).map(
        lambda segs: "/" + "/".join(segs)),
    min_size=0, max_size=12)


@settings(max_examples=200)
@given(_paths)
def test_parsed_taxonomy_always_prefix_closed(paths):
    t = parse_taxonomy(json.dumps({"nodes": paths, "exclusions": []}))
    for node in t.nodes:
        for anc in node.ancestors():
            assert anc in t.nodes


@settings(max_examples=100)
@given(_paths)
def test_closure_monotone_and_idempotent(paths):
    t = parse_taxonomy(json.dumps({"nodes": paths, "exclusions": []}))
    leaves = sorted(t.nodes, key=str)[: len(t.nodes) // 2]
    tags = TagSet(frozenset(leaves))
    once = t.closure(tags)
    assert set(tags) <= set(once)                 # monotone
    assert set(t.closure(once)) == set(once)      # idempotent
