"""Scenario timelines: segmentation at tag transitions and deduplication
into unique tag combinations."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import ParseError, ValidationError
from .taxonomy import TagSet, Taxonomy


@dataclass
class ScenarioTimeline:
    scenario_id: str
    snapshots: list[tuple[float, TagSet]]

    def validate(self, taxonomy: Taxonomy | None = None) -> None:
        prev = None
        for t, tags in self.snapshots:
            if prev is not None and t <= prev:
                raise ValidationError(
                    f"scenario {self.scenario_id}: non-increasing timestamp {t}"
                )
            prev = t
            if taxonomy is not None and not taxonomy.is_consistent(tags):
                raise ValidationError(
                    f"scenario {self.scenario_id}: inconsistent snapshot at t={t}"
                )


@dataclass(frozen=True)
class ScenarioUnit:
    scenario_id: str
    start: float
    end: float
    active: TagSet
    instantaneous: bool = False

    def to_json(self) -> dict:
        out = {
            "scenario_id": self.scenario_id,
            "start": self.start,
            "end": self.end,
            "tags": self.active.as_strings(),
        }
        if self.instantaneous:
            out["instantaneous"] = True
        return out


@dataclass
class TagCombination:
    tags: TagSet
    units: list[ScenarioUnit] = field(default_factory=list)

    @property
    def multiplicity(self) -> int:
        return len(self.units)

    def to_json(self) -> dict:
        return {
            "tags": self.tags.as_strings(),
            "multiplicity": self.multiplicity,
            "members": [
                {"scenario_id": u.scenario_id, "start": u.start, "end": u.end}
                for u in self.units
            ],
        }


def segment(timeline: ScenarioTimeline,
            taxonomy: Taxonomy | None = None) -> list[ScenarioUnit]:
    """Split at snapshots whose tag set differs from the predecessor.

    Units tile [first, last] without gaps or overlaps: half-open
    [start, end) except the final unit, which is closed. A single-snapshot
    timeline yields one zero-extension unit flagged instantaneous.
    """
    if not timeline.snapshots:
        raise ValidationError(f"scenario {timeline.scenario_id}: empty timeline")
    timeline.validate(taxonomy)
    snaps = timeline.snapshots
    units: list[ScenarioUnit] = []
    start_t = snaps[0][0]
    current = snaps[0][1]
    for t, tags in snaps[1:]:
        if tags.tags != current.tags:
            units.append(ScenarioUnit(timeline.scenario_id, start_t, t, current))
            start_t = t
            current = tags
    last_t = snaps[-1][0]
    units.append(ScenarioUnit(
        timeline.scenario_id, start_t, last_t, current,
        instantaneous=start_t == last_t,
    ))
    return units


def dedup(units: list[ScenarioUnit]) -> list[TagCombination]:
    """Group units by canonical tag set; ordered by canonical-set
    lexicographic form."""
    groups: dict[tuple[str, ...], TagCombination] = {}
    for unit in units:
        key = tuple(unit.active.as_strings())
        if key not in groups:
            groups[key] = TagCombination(tags=unit.active)
        groups[key].units.append(unit)
    return [groups[key] for key in sorted(groups)]


# -- snapshot JSONL I/O ------------------------------------------------


def load_timelines(document: str) -> list[ScenarioTimeline]:
    """Parse `{scenario_id, t, tags:[...]}` JSONL into per-scenario
    timelines, preserving input order within each scenario."""
    by_scenario: dict[str, list[tuple[float, TagSet]]] = {}
    order: list[str] = []
    for lineno, raw in enumerate(document.splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            rec = json.loads(raw)
        except json.JSONDecodeError as e:
            raise ParseError(f"invalid JSON: {e.msg}", line=lineno) from e
        sid = rec.get("scenario_id")
        if not sid:
            raise ParseError("missing scenario_id", line=lineno)
        if sid not in by_scenario:
            by_scenario[sid] = []
            order.append(sid)
        by_scenario[sid].append((float(rec["t"]), TagSet.of(rec.get("tags", []))))
    return [ScenarioTimeline(sid, by_scenario[sid]) for sid in order]


def units_to_jsonl(units: list[ScenarioUnit]) -> str:
    return "\n".join(json.dumps(u.to_json(), ensure_ascii=False) for u in units)


def load_units(document: str) -> list[ScenarioUnit]:
    units = []
    for lineno, raw in enumerate(document.splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            rec = json.loads(raw)
        except json.JSONDecodeError as e:
            raise ParseError(f"invalid JSON: {e.msg}", line=lineno) from e
        units.append(ScenarioUnit(
            scenario_id=rec["scenario_id"],
            start=float(rec["start"]),
            end=float(rec["end"]),
            active=TagSet.of(rec.get("tags", [])),
            instantaneous=bool(rec.get("instantaneous", False)),
        ))
    return units
