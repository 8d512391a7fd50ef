"""Real-time/replay compliance monitoring of trajectories over a lane map.

A session is a single-writer state machine fed time-ordered records; it
evaluates machine predicates bound to lanes/zones and emits provision-
traceable violation events. Replay is just the streaming path run to
completion, so online and batch output are identical by construction.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field

from shapely.geometry import LineString, Point, Polygon

from .derivation import RequirementSet
from .errors import ParseError, ValidationError

MARKING_CLASSES = ("double_solid_yellow", "solid_white", "dashed")
ENTITY_CLASSES = ("emergency_vehicle", "oncoming_through",
                  "pedestrian_at_crosswalk")
PREDICATE_KINDS = ("speed_limit", "min_gap", "no_stop_zone", "no_cross",
                   "no_straddle", "must_yield")


@dataclass
class MonitorConfig:
    """All thresholds are engineering defaults surfaced for field
    calibration; none are normative values."""

    debounce_s: float = 0.5
    stop_speed_ms: float = 0.1
    stop_duration_s: float = 2.0
    straddle_duration_s: float = 3.0
    yield_ev_distance_m: float = 30.0
    yield_ev_duration_s: float = 2.0
    yield_ev_decel_ms2: float = 0.5
    ped_distance_m: float = 20.0
    ped_speed_ms: float = 2.0
    oncoming_window_s: float = 3.0
    turn_angle_deg: float = 45.0
    history_horizon_s: float = 10.0
    footprint_width_m: float = 1.9


@dataclass(frozen=True)
class MachinePredicate:
    kind: str
    limit_kmh: float | None = None          # speed_limit
    gap_seconds: float | None = None        # min_gap
    marking: str | None = None              # no_cross / no_straddle
    min_duration_s: float | None = None     # no_straddle
    entity: str | None = None               # must_yield

    def __post_init__(self):
        if self.kind not in PREDICATE_KINDS:
            raise ValidationError(f"unknown predicate kind {self.kind!r}")
        if self.kind == "speed_limit" and (self.limit_kmh is None
                                           or self.limit_kmh <= 0):
            raise ValidationError("speed_limit requires a positive limit_kmh")
        if self.kind == "min_gap" and (self.gap_seconds is None
                                       or self.gap_seconds <= 0):
            raise ValidationError("min_gap requires positive gap_seconds")
        if self.kind in ("no_cross", "no_straddle"):
            if self.marking not in MARKING_CLASSES:
                raise ValidationError(
                    f"marking class must be one of {MARKING_CLASSES}"
                )
        if self.kind == "no_straddle" and (self.min_duration_s is not None
                                           and self.min_duration_s <= 0):
            raise ValidationError("no_straddle min_duration_s must be positive")
        if self.kind == "must_yield" and self.entity not in ENTITY_CLASSES:
            raise ValidationError(
                f"must_yield entity must be one of {ENTITY_CLASSES}"
            )

    @classmethod
    def from_json(cls, rec: dict) -> "MachinePredicate":
        return cls(
            kind=rec.get("kind", ""),
            limit_kmh=rec.get("limit_kmh"),
            gap_seconds=rec.get("gap_seconds"),
            marking=rec.get("marking"),
            min_duration_s=rec.get("min_duration_s"),
            entity=rec.get("entity"),
        )

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        for key in ("limit_kmh", "gap_seconds", "marking", "min_duration_s",
                    "entity"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        return out


@dataclass(frozen=True)
class TrajectoryRecord:
    t: float
    participant: str
    cls: str
    x: float
    y: float
    heading: float
    speed: float
    lane_id: str | None = None

    def __post_init__(self):
        for v in (self.t, self.x, self.y, self.heading, self.speed):
            if not math.isfinite(v):
                raise ValidationError(
                    f"non-finite value in record for {self.participant}"
                )


@dataclass
class ViolationEvent:
    participant: str
    predicate: MachinePredicate
    start: float
    end: float
    provision_id: str
    evidence: dict

    def to_json(self) -> dict:
        return {
            "participant": self.participant,
            "predicate": self.predicate.to_json(),
            "start": round(self.start, 6),
            "end": round(self.end, 6),
            "provision_id": self.provision_id,
            "evidence": {k: (round(v, 6) if isinstance(v, float) else v)
                         for k, v in sorted(self.evidence.items())},
        }


@dataclass
class BoundPredicate:
    predicate: MachinePredicate
    provision_id: str
    element: str          # lane id, zone id, or "*" for always active


@dataclass
class LaneMap:
    lanes: dict[str, dict]
    markings: dict[str, dict]       # {"line": LineString, "class": str}
    zones: dict[str, dict]          # {"polygon": Polygon, "kind": str}
    requirements: list[BoundPredicate]

    def markings_of_class(self, cls: str) -> list[LineString]:
        return [m["line"] for m in self.markings.values() if m["class"] == cls]

    def zones_of_kind(self, kind: str) -> list[tuple[str, Polygon]]:
        return [(zid, z["polygon"]) for zid, z in self.zones.items()
                if z["kind"] == kind]


def load_lane_map(document: str) -> LaneMap:
    try:
        data = json.loads(document)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", line=e.lineno) from e
    lanes = {}
    for lid, rec in (data.get("lanes") or {}).items():
        line = LineString(rec["centerline"])
        if line.length == 0:
            raise ValidationError(f"lane {lid} has degenerate centerline")
        lanes[lid] = {"centerline": line, "width": float(rec.get("width", 3.5))}
    markings = {}
    for mid, rec in (data.get("markings") or {}).items():
        cls = rec.get("class")
        if cls not in MARKING_CLASSES:
            raise ValidationError(f"marking {mid}: unknown class {cls!r}")
        markings[mid] = {"line": LineString(rec["polyline"]), "class": cls}
    zones = {}
    for zid, rec in (data.get("zones") or {}).items():
        poly = Polygon(rec["polygon"])
        if not poly.is_valid or poly.area == 0:
            raise ValidationError(f"zone {zid} polygon is degenerate")
        zones[zid] = {"polygon": poly, "kind": rec.get("kind", "zone")}
    requirements = []
    for rec in data.get("requirements", []):
        element = rec.get("element", "*")
        if element != "*" and element not in lanes and element not in zones:
            raise ValidationError(
                f"requirement bound to unknown element {element!r}"
            )
        requirements.append(BoundPredicate(
            predicate=MachinePredicate.from_json(rec["predicate"]),
            provision_id=rec.get("provision_id", ""),
            element=element,
        ))
    return LaneMap(lanes=lanes, markings=markings, zones=zones,
                   requirements=requirements)


def compile_predicates(requirements: RequirementSet, corpus
                       ) -> tuple[list[tuple[MachinePredicate, str]], list[dict]]:
    """Collect machine predicates attached to the requirement set's source
    provisions. Requirements with no predicate are reported unmonitorable,
    never silently dropped."""
    compiled: list[tuple[MachinePredicate, str]] = []
    unmonitorable: list[dict] = []
    for req in list(requirements.mandatory) + list(requirements.prohibitive):
        provision = corpus[req.provision_id]
        if not provision.predicates:
            unmonitorable.append({
                "category": req.category,
                "behavior": req.behavior,
                "provision_id": req.provision_id,
            })
            continue
        for rec in provision.predicates:
            compiled.append((MachinePredicate.from_json(rec), provision.id))
    return compiled, unmonitorable


# -- session -----------------------------------------------------------


@dataclass
class _Track:
    """Per-(predicate, binding) condition state."""

    condition_start: float | None = None
    open_event: ViolationEvent | None = None
    context: dict = field(default_factory=dict)


class MonitorSession:
    """Single-writer streaming monitor; feed records in nondecreasing
    per-participant time order."""

    def __init__(self, lane_map: LaneMap, config: MonitorConfig | None = None):
        self.map = lane_map
        self.config = config or MonitorConfig()
        self.history: dict[str, deque[TrajectoryRecord]] = {}
        self.last_t: dict[str, float] = {}
        self.tracks: dict[int, _Track] = {}
        self.events: list[ViolationEvent] = []
        self._finalized = False

    # -- helpers -------------------------------------------------------

    def _push_history(self, rec: TrajectoryRecord) -> None:
        if rec.participant in self.last_t and rec.t < self.last_t[rec.participant]:
            raise ValidationError(
                f"out-of-order timestamp for {rec.participant}: {rec.t}"
            )
        self.last_t[rec.participant] = rec.t
        dq = self.history.setdefault(rec.participant, deque())
        dq.append(rec)
        horizon = self.config.history_horizon_s
        while dq and rec.t - dq[0].t > horizon:
            dq.popleft()

    def _active(self, binding: BoundPredicate, ego: TrajectoryRecord) -> bool:
        if binding.element == "*":
            return True
        if binding.element in self.map.lanes:
            return ego.lane_id == binding.element
        zone = self.map.zones[binding.element]
        return zone["polygon"].covers(Point(ego.x, ego.y))

    def _track(self, idx: int) -> _Track:
        return self.tracks.setdefault(idx, _Track())

    def _close(self, track: _Track, out: list[ViolationEvent]) -> None:
        if track.open_event is not None:
            out.append(track.open_event)
            self.events.append(track.open_event)
            track.open_event = None
        track.condition_start = None
        track.context = {}

    # -- per-predicate checks ------------------------------------------
    # Each returns (condition_active, evidence) for the current record.

    def _check_speed_limit(self, b, ego, prev):
        over = ego.speed * 3.6 > b.predicate.limit_kmh
        return over, {"speed_kmh": ego.speed * 3.6}

    def _check_no_cross(self, b, ego, prev):
        if prev is None:
            return False, {}
        seg = LineString([(prev.x, prev.y), (ego.x, ego.y)])
        if seg.length == 0:
            return False, {}
        footprint = seg.buffer(self.config.footprint_width_m / 2,
                               cap_style="flat")
        for line in self.map.markings_of_class(b.predicate.marking):
            if footprint.intersects(line) and seg.crosses(line):
                pt = seg.intersection(line)
                if pt.is_empty:
                    pt = seg.interpolate(0.5, normalized=True)
                elif pt.geom_type != "Point":
                    pt = pt.centroid
                return True, {"crossing_x": pt.x, "crossing_y": pt.y}
        return False, {}

    def _check_no_straddle(self, b, ego, prev):
        if prev is None:
            return False, {}
        seg = LineString([(prev.x, prev.y), (ego.x, ego.y)])
        if seg.length == 0:
            point = Point(ego.x, ego.y)
            footprint = point.buffer(self.config.footprint_width_m / 2)
        else:
            footprint = seg.buffer(self.config.footprint_width_m / 2,
                                   cap_style="flat")
        for line in self.map.markings_of_class(b.predicate.marking):
            if footprint.intersects(line):
                return True, {"offset_m": Point(ego.x, ego.y).distance(line)}
        return False, {}

    def _check_no_stop_zone(self, b, ego, prev):
        if b.element not in self.map.zones:
            return False, {}
        inside = self.map.zones[b.element]["polygon"].covers(Point(ego.x, ego.y))
        stopped = ego.speed < self.config.stop_speed_ms
        return inside and stopped, {"speed_ms": ego.speed}

    def _preceding(self, ego):
        """Nearest same-lane participant ahead of ego."""
        hx, hy = math.cos(ego.heading), math.sin(ego.heading)
        best = None
        best_d = float("inf")
        for pid, dq in self.history.items():
            if pid == ego.participant or not dq:
                continue
            other = dq[-1]
            if other.lane_id != ego.lane_id or ego.lane_id is None:
                continue
            dx, dy = other.x - ego.x, other.y - ego.y
            along = dx * hx + dy * hy
            if along <= 0:
                continue
            if along < best_d:
                best_d = along
                best = other
        return best, best_d

    def _check_min_gap(self, b, ego, prev):
        if ego.speed <= 0:
            return False, {}
        other, dist = self._preceding(ego)
        if other is None:
            return False, {}
        headway = dist / ego.speed
        return headway < b.predicate.gap_seconds, {"headway_s": headway}

    def _ego_decelerating(self, ego) -> bool:
        dq = self.history.get(ego.participant)
        if not dq or len(dq) < 2:
            return False
        prev = dq[0]
        for older in dq:
            if ego.t - older.t >= 0.8:
                prev = older
        dt = ego.t - prev.t
        if dt <= 0:
            return False
        return (prev.speed - ego.speed) / dt >= self.config.yield_ev_decel_ms2

    def _check_yield_emergency(self, b, ego, prev, track):
        hx, hy = math.cos(ego.heading), math.sin(ego.heading)
        cfg = self.config
        condition = False
        evidence = {}
        for pid, dq in self.history.items():
            if pid == ego.participant or not dq:
                continue
            other = dq[-1]
            if other.cls != "emergency_vehicle":
                continue
            dx, dy = other.x - ego.x, other.y - ego.y
            dist = math.hypot(dx, dy)
            if dist > cfg.yield_ev_distance_m:
                continue
            along = dx * hx + dy * hy
            if along > 1.0:          # ahead of ego, not behind/beside
                continue
            closing = False
            if len(dq) >= 2:
                p2 = dq[-2]
                prev_dist = math.hypot(p2.x - ego.x, p2.y - ego.y)
                closing = dist < prev_dist
            if not closing:
                continue
            vacated = (track.context.get("lane_at_start") is not None
                       and ego.lane_id != track.context["lane_at_start"])
            if self._ego_decelerating(ego) or vacated:
                continue
            condition = True
            evidence = {"emergency_id": pid, "distance_m": dist}
            break
        if condition and track.condition_start is None:
            track.context["lane_at_start"] = ego.lane_id
        return condition, evidence

    def _check_yield_pedestrian(self, b, ego, prev):
        cfg = self.config
        hx, hy = math.cos(ego.heading), math.sin(ego.heading)
        ego_pt = Point(ego.x, ego.y)
        for zid, poly in self.map.zones_of_kind("crosswalk"):
            dist = ego_pt.distance(poly)
            if dist > cfg.ped_distance_m:
                continue
            c = poly.centroid
            along = (c.x - ego.x) * hx + (c.y - ego.y) * hy
            if along <= 0 and not poly.covers(ego_pt):
                continue
            for pid, dq in self.history.items():
                if not dq:
                    continue
                other = dq[-1]
                if other.cls != "pedestrian":
                    continue
                if not poly.covers(Point(other.x, other.y)):
                    continue
                if ego.speed >= cfg.ped_speed_ms:
                    return True, {"pedestrian_id": pid, "crosswalk": zid,
                                  "distance_m": dist, "speed_ms": ego.speed}
        return False, {}

    def _check_yield_oncoming(self, b, ego, prev, track):
        cfg = self.config
        ego_pt = Point(ego.x, ego.y)
        in_zone = None
        for zid, poly in self.map.zones_of_kind("intersection"):
            if poly.covers(ego_pt):
                in_zone = zid
                break
        if in_zone is None:
            track.context.pop("entry_heading", None)
            return False, {}
        entry = track.context.setdefault("entry_heading", ego.heading)
        turn = abs(_angle_diff(ego.heading, entry))
        if math.degrees(turn) < cfg.turn_angle_deg:
            return False, {}
        ehx, ehy = math.cos(entry), math.sin(entry)
        for pid, dq in self.history.items():
            if pid == ego.participant or not dq:
                continue
            other = dq[-1]
            if other.cls in ("pedestrian",) or other.speed <= 0:
                continue
            ohx, ohy = math.cos(other.heading), math.sin(other.heading)
            if ehx * ohx + ehy * ohy > -0.5:    # not oncoming
                continue
            dist = math.hypot(other.x - ego.x, other.y - ego.y)
            eta = dist / other.speed
            if eta <= cfg.oncoming_window_s:
                return True, {"oncoming_id": pid, "eta_s": eta,
                              "intersection": in_zone}
        return False, {}

    # -- core step -----------------------------------------------------

    def step(self, rec: TrajectoryRecord) -> list[ViolationEvent]:
        """Consume one record; returns events finalized by this step."""
        prev = None
        dq = self.history.get(rec.participant)
        if dq:
            prev = dq[-1]
        out: list[ViolationEvent] = []
        if rec.cls != "ego":
            self._push_history(rec)
            return out
        cfg = self.config
        for idx, binding in enumerate(self.map.requirements):
            track = self._track(idx)
            if not self._active(binding, rec):
                self._close(track, out)
                continue
            kind = binding.predicate.kind
            entity = binding.predicate.entity
            if kind == "speed_limit":
                cond, ev = self._check_speed_limit(binding, rec, prev)
                delay = cfg.debounce_s
            elif kind == "no_cross":
                cond, ev = self._check_no_cross(binding, rec, prev)
                delay = 0.0
            elif kind == "no_straddle":
                cond, ev = self._check_no_straddle(binding, rec, prev)
                delay = (binding.predicate.min_duration_s
                         if binding.predicate.min_duration_s is not None
                         else cfg.straddle_duration_s)
            elif kind == "no_stop_zone":
                cond, ev = self._check_no_stop_zone(binding, rec, prev)
                delay = cfg.stop_duration_s
            elif kind == "min_gap":
                cond, ev = self._check_min_gap(binding, rec, prev)
                delay = cfg.debounce_s
            elif entity == "emergency_vehicle":
                cond, ev = self._check_yield_emergency(binding, rec, prev, track)
                delay = cfg.yield_ev_duration_s
            elif entity == "pedestrian_at_crosswalk":
                cond, ev = self._check_yield_pedestrian(binding, rec, prev)
                delay = 0.0
            else:
                cond, ev = self._check_yield_oncoming(binding, rec, prev, track)
                delay = 0.0

            if cond:
                if track.condition_start is None:
                    track.condition_start = rec.t
                    track.context["evidence"] = dict(ev)
                else:
                    self._merge_evidence(track, kind, ev)
                duration = rec.t - track.condition_start
                if duration >= delay:
                    if track.open_event is None:
                        track.open_event = ViolationEvent(
                            participant=rec.participant,
                            predicate=binding.predicate,
                            start=track.condition_start,
                            end=rec.t,
                            provision_id=binding.provision_id,
                            evidence=track.context.get("evidence", {}),
                        )
                    else:
                        track.open_event.end = rec.t
                        track.open_event.evidence = track.context.get(
                            "evidence", {})
            else:
                self._close(track, out)
        self._push_history(rec)
        return out

    @staticmethod
    def _merge_evidence(track: _Track, kind: str, ev: dict) -> None:
        acc = track.context.setdefault("evidence", {})
        if kind == "speed_limit":
            acc["speed_kmh"] = max(acc.get("speed_kmh", 0.0),
                                   ev.get("speed_kmh", 0.0))
        elif kind == "min_gap":
            acc["headway_s"] = min(acc.get("headway_s", float("inf")),
                                   ev.get("headway_s", float("inf")))
        else:
            for k, v in ev.items():
                acc.setdefault(k, v)

    def finalize(self) -> list[ViolationEvent]:
        """Close any still-open events; call once after the stream ends."""
        if self._finalized:
            return []
        self._finalized = True
        out: list[ViolationEvent] = []
        for track in self.tracks.values():
            self._close(track, out)
        return out


# -- replay ------------------------------------------------------------


def replay(records: list[TrajectoryRecord], lane_map: LaneMap,
           config: MonitorConfig | None = None
           ) -> tuple[list[ViolationEvent], dict]:
    """Batch replay: stream every record through a session, then summarize
    per-predicate-kind violation presence."""
    session = MonitorSession(lane_map, config)
    events: list[ViolationEvent] = []
    for rec in records:
        events.extend(session.step(rec))
    events.extend(session.finalize())
    kinds_present = sorted({_event_kind(e) for e in events})
    summary = {
        "records": len(records),
        "events": len(events),
        "kinds": kinds_present,
    }
    return events, summary


def _event_kind(event: ViolationEvent) -> str:
    if event.predicate.kind == "must_yield":
        return f"must_yield:{event.predicate.entity}"
    return event.predicate.kind


def summarize_runs(run_events: dict[str, list[ViolationEvent]]) -> dict:
    """Violation-rate summary across runs: per kind, the share of runs in
    which that violation occurred at least once."""
    kinds = sorted({_event_kind(e) for evs in run_events.values() for e in evs})
    n = len(run_events)
    rates = {}
    for kind in kinds:
        hit = sum(1 for evs in run_events.values()
                  if any(_event_kind(e) == kind for e in evs))
        rates[kind] = hit / n if n else 0.0
    return {"runs": n, "violation_rates": rates}


def _angle_diff(a: float, b: float) -> float:
    d = (a - b) % (2 * math.pi)
    if d > math.pi:
        d -= 2 * math.pi
    return d


# -- trajectory I/O ----------------------------------------------------


def load_trajectories(document: str) -> list[TrajectoryRecord]:
    """JSONL or CSV (header `t,id,class,x,y,heading,speed,lane_id`),
    returned in stream order."""
    records: list[TrajectoryRecord] = []
    lines = document.splitlines()
    if not lines:
        return records
    if lines[0].strip().startswith("{"):
        for lineno, raw in enumerate(lines, start=1):
            if not raw.strip():
                continue
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as e:
                raise ParseError(f"invalid JSON: {e.msg}", line=lineno) from e
            records.append(TrajectoryRecord(
                t=float(rec["t"]), participant=str(rec["id"]),
                cls=str(rec["class"]), x=float(rec["x"]), y=float(rec["y"]),
                heading=float(rec["heading"]), speed=float(rec["speed"]),
                lane_id=rec.get("lane_id"),
            ))
        return records
    import csv
    import io
    reader = csv.DictReader(io.StringIO(document))
    for row in reader:
        records.append(TrajectoryRecord(
            t=float(row["t"]), participant=row["id"], cls=row["class"],
            x=float(row["x"]), y=float(row["y"]),
            heading=float(row["heading"]), speed=float(row["speed"]),
            lane_id=row.get("lane_id") or None,
        ))
    return records


def events_to_jsonl(events: list[ViolationEvent]) -> str:
    return "\n".join(
        json.dumps(e.to_json(), sort_keys=True, ensure_ascii=False)
        for e in events
    )
