import json
import random

import pytest

from lawlens.errors import ValidationError
from lawlens.scenario import (ScenarioTimeline, dedup, load_timelines,
                              load_units, segment, units_to_jsonl)
from lawlens.taxonomy import TagSet


def _tl(sid, snaps):
    return ScenarioTimeline(sid, [(t, TagSet.of(tags)) for t, tags in snaps])


# -- segment -----------------------------------------------------------


def test_merge_then_split():
    units = segment(_tl("s", [(0, ["/A"]), (1, ["/A"]), (2, ["/A", "/B"])]))
    assert [(u.start, u.end, u.active.as_strings()) for u in units] == [
        (0, 2, ["/A"]), (2, 2, ["/A", "/B"])]
    assert units[-1].instantaneous


def test_constant_set_single_unit():
    units = segment(_tl("s", [(0, ["/A"]), (5, ["/A"]), (9, ["/A"])]))
    assert len(units) == 1
    assert (units[0].start, units[0].end) == (0, 9)


def test_alternating_sets_three_units():
    units = segment(_tl("s", [(0, ["/A"]), (1, ["/B"]), (2, ["/A"])]))
    assert len(units) == 3


def test_single_snapshot_instantaneous():
    units = segment(_tl("s", [(3.5, ["/A"])]))
    assert len(units) == 1
    assert units[0].instantaneous
    assert units[0].start == units[0].end == 3.5


def test_empty_timeline_rejected():
    with pytest.raises(ValidationError):
        segment(_tl("s", []))


def test_non_increasing_timestamps_rejected():
    with pytest.raises(ValidationError):
        segment(_tl("s", [(1, ["/A"]), (1, ["/A"])]))


def test_inconsistent_snapshot_rejected(taxonomy):
    tl = _tl("s", [(0, ["/Road/Lanes/single-lane", "/Road/Lanes/two-lanes"])])
    with pytest.raises(ValidationError):
        segment(tl, taxonomy)


# -- dedup -------------------------------------------------------------


def test_dedup_set_equality():
    units = (segment(_tl("x", [(0, ["/A", "/B"]), (1, ["/A", "/B"])]))
             + segment(_tl("y", [(0, ["/B", "/A"]), (1, ["/B", "/A"])])))
    combos = dedup(units)
    assert len(combos) == 1
    assert combos[0].multiplicity == 2


def test_dedup_all_distinct():
    units = [segment(_tl(f"s{i}", [(0, [f"/T{i}"]), (1, [f"/T{i}"])]))[0]
             for i in range(5)]
    assert len(dedup(units)) == 5


def test_dedup_hand_grouped_fixture():
    # 20 units over 7 distinct sets
    sets = [["/A"], ["/B"], ["/C"], ["/A", "/B"], ["/D"], ["/E"],
            ["/A", "/C"]]
    counts = [5, 4, 3, 3, 2, 2, 1]
    units = []
    for tags, k in zip(sets, counts):
        for i in range(k):
            units.append(segment(_tl(f"u{len(units)}",
                                     [(0, tags), (1, tags)]))[0])
    combos = dedup(units)
    assert len(combos) == 7
    assert sum(c.multiplicity for c in combos) == 20
    # ordering is canonical-set lexicographic
    keys = [tuple(c.tags.as_strings()) for c in combos]
    assert keys == sorted(keys)


# -- properties --------------------------------------------------------


def _random_timeline(rng, sid):
    pool = [f"/P/t{i}" for i in range(6)]
    n = rng.randint(1, 12)
    times = sorted(rng.sample(range(100), n))
    snaps = [(float(t), sorted(rng.sample(pool, rng.randint(0, 3))))
             for t in times]
    return _tl(sid, snaps)


def test_randomized_tiling_and_idempotence():
    rng = random.Random(77)
    for i in range(300):
        tl = _random_timeline(rng, f"r{i}")
        units = segment(tl)
        # tiling: contiguous, no gaps/overlaps, spans [first, last]
        assert units[0].start == tl.snapshots[0][0]
        assert units[-1].end == tl.snapshots[-1][0]
        for a, b in zip(units, units[1:]):
            assert a.end == b.start
            assert a.active.tags != b.active.tags
        # idempotence: reconstruct a timeline from unit boundaries
        snaps = [(u.start, u.active) for u in units]
        if units[-1].end > units[-1].start:
            snaps.append((units[-1].end, units[-1].active))
        again = segment(ScenarioTimeline(tl.scenario_id, snaps))
        assert [(u.start, u.end, u.active.tags) for u in again] == \
            [(u.start, u.end, u.active.tags) for u in units]
        # dedup conservation
        combos = dedup(units)
        assert sum(c.multiplicity for c in combos) == len(units)
        assert len(combos) <= len(units)


# -- I/O ---------------------------------------------------------------


def test_timeline_jsonl_round_trip():
    doc = "\n".join([
        json.dumps({"scenario_id": "a", "t": 0.0, "tags": ["/X"]}),
        json.dumps({"scenario_id": "b", "t": 0.0, "tags": []}),
        json.dumps({"scenario_id": "a", "t": 1.5, "tags": ["/X", "/Y"]}),
    ])
    timelines = load_timelines(doc)
    assert [tl.scenario_id for tl in timelines] == ["a", "b"]
    assert len(timelines[0].snapshots) == 2

    units = segment(timelines[0])
    back = load_units(units_to_jsonl(units))
    assert back == units
