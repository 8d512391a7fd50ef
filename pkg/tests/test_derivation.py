import json

import pytest

from lawlens.backend import ChatReply
from lawlens.derivation import (classify_clause, derive_for_scenario,
                                derive_remote, derive_rule_based,
                                render_derive_prompt, split_clauses)
from lawlens.errors import DerivationError, ValidationError
from lawlens.taxonomy import TagSet


# -- clause splitting --------------------------------------------------


def test_split_on_sentence_terminators():
    assert split_clauses("First rule. Second rule! Third rule?") == [
        "First rule", "Second rule", "Third rule"]


def test_split_on_cjk_terminators():
    assert split_clauses("第一条。第二条；第三条") == ["第一条", "第二条", "第三条"]


def test_split_on_enumeration_markers():
    got = split_clauses("Drivers shall: (1) slow down (2) keep right.")
    assert "slow down" in got
    assert "keep right" in got


# -- clause classification ---------------------------------------------


def test_mandatory_clause():
    req = classify_clause("Vehicles must reduce speed in work zones")
    assert req.category == "mandatory"
    assert req.behavior == "reduce speed in work zones"


def test_prohibitive_clause_with_leading_behavior():
    req = classify_clause(
        "Overtaking is not allowed when the preceding vehicle is "
        "signaling a left turn")
    assert req.category == "prohibitive"


def test_descriptive_clause_yields_nothing():
    assert classify_clause("Work zones are marked with barriers") is None


def test_prohibitive_dominates_mandatory():
    # "must not" carries both indicators; prohibitive wins
    req = classify_clause("Drivers must not use handheld phones")
    assert req.category == "prohibitive"
    assert req.behavior == "use handheld phones"


def test_behavior_falls_back_before_indicator():
    req = classify_clause("Parking within the work zone is prohibited")
    assert req.category == "prohibitive"
    assert req.behavior == "Parking within the work zone"


def test_chinese_indicators():
    assert classify_clause("机动车应当减速行驶").category == "mandatory"
    assert classify_clause("禁止争道抢行").category == "prohibitive"


# -- rule-based derivation ---------------------------------------------


def test_work_zone_provision_both_categories(corpus):
    reqs = derive_rule_based(corpus["WZ-001"])
    cats = [(r.category, r.behavior) for r in reqs]
    assert cats == [
        ("mandatory", "reduce speed when passing through a work zone"),
        ("prohibitive", "Parking within the work zone"),
    ]
    assert all(r.provision_id == "WZ-001" for r in reqs)


def test_rule_based_deterministic(corpus):
    a = derive_rule_based(corpus["ZH-001"])
    b = derive_rule_based(corpus["ZH-001"])
    assert a == b


# -- remote derivation contract ----------------------------------------


class _StubBackend:
    def __init__(self, text):
        self.text = text
        self.calls = 0

    def chat(self, messages):
        self.calls += 1
        return ChatReply(text=self.text)


def test_remote_valid_reply(corpus):
    stub = _StubBackend(json.dumps(
        {"mandatory": ["yield to pedestrians"], "prohibitive": []}))
    reqs = derive_remote(stub, corpus["PED-001"])
    assert len(reqs) == 1
    assert reqs[0].category == "mandatory"
    assert reqs[0].behavior == "yield to pedestrians"
    assert reqs[0].provision_id == "PED-001"


def test_remote_invalid_json(corpus):
    with pytest.raises(DerivationError) as e:
        derive_remote(_StubBackend("not json at all"), corpus["PED-001"])
    assert e.value.raw_reply == "not json at all"


def test_remote_extra_category(corpus):
    stub = _StubBackend(json.dumps(
        {"mandatory": [], "prohibitive": [], "advisory": ["be nice"]}))
    with pytest.raises(ValidationError):
        derive_remote(stub, corpus["PED-001"])


def test_derive_prompt_strict_json_contract(corpus):
    messages = render_derive_prompt(corpus["WZ-001"])
    assert '{"mandatory": ["..."], "prohibitive": ["..."]}' in \
        messages[0]["content"]
    assert corpus["WZ-001"].text in messages[1]["content"]


# -- scenario-level derivation -----------------------------------------


def test_no_matching_provisions_empty_set(index, corpus, taxonomy):
    tags = TagSet.of(["/Environment/Time of day/Night"])
    rs = derive_for_scenario(index, corpus, taxonomy, tags)
    assert rs.mandatory == [] and rs.prohibitive == []
    assert rs.provenance == []


def test_work_zone_scenario(index, corpus, taxonomy):
    tags = TagSet.of(
        ["/Traffic management/Temporary traffic control/Work zone"])
    rs = derive_for_scenario(index, corpus, taxonomy, tags)
    assert len(rs.mandatory) == 1 and len(rs.prohibitive) == 1
    assert rs.provenance == ["WZ-001"]


def test_scenario_derivation_repeatable(index, corpus, taxonomy):
    tags = TagSet.of(["/Road/Road type/Urban road",
                      "/Environment/Weather/Rain"])
    a = derive_for_scenario(index, corpus, taxonomy, tags)
    b = derive_for_scenario(index, corpus, taxonomy, tags)
    assert json.dumps(a.to_json()) == json.dumps(b.to_json())


def test_remote_engine_requires_backend(index, corpus, taxonomy):
    tags = TagSet.of(["/Environment/Weather/Rain"])
    with pytest.raises(ValidationError):
        derive_for_scenario(index, corpus, taxonomy, tags, engine="remote")


def test_duplicate_requirements_suppressed(index, corpus, taxonomy):
    # S04-style scenario retrieving two crosswalk provisions keeps each
    # distinct (category, behavior, provision) once
    tags = TagSet.of(["/Infrastructure/Road markings/crosswalk",
                      "/Objects/Vulnerable road users/Pedestrian"])
    rs = derive_for_scenario(index, corpus, taxonomy, tags)
    seen = [(r.category, r.behavior, r.provision_id)
            for r in rs.mandatory + rs.prohibitive]
    assert len(seen) == len(set(seen))
