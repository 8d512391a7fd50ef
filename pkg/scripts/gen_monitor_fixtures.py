"""Regenerates the 15-run monitor fixture suite.

One shared planar lane map plus 15 scripted trajectory runs at 10 Hz.
Four runs carry exactly one planted violation each with hand-computed
time windows; the remaining eleven are near-miss or clean runs that must
produce no events. expected.json records the planted ground truth.
"""

import json
import pathlib

OUT = pathlib.Path(__file__).resolve().parents[1] / "src/lawlens/fixtures/monitor"

LANE_MAP = {
    "lanes": {
        "L1": {"centerline": [[0.0, 0.0], [200.0, 0.0]], "width": 3.5},
    },
    "markings": {
        "M1": {"polyline": [[50.0, 1.75], [150.0, 1.75]],
               "class": "double_solid_yellow"},
        "M2": {"polyline": [[0.0, -1.75], [200.0, -1.75]], "class": "dashed"},
    },
    "zones": {
        "Z1": {"polygon": [[120.0, -4.0], [140.0, -4.0], [140.0, 4.0],
                           [120.0, 4.0]], "kind": "work_zone"},
        "Z2": {"polygon": [[80.0, -4.0], [84.0, -4.0], [84.0, 4.0],
                           [80.0, 4.0]], "kind": "crosswalk"},
    },
    "requirements": [
        {"element": "L1", "predicate": {"kind": "speed_limit", "limit_kmh": 50},
         "provision_id": "SPD-050"},
        {"element": "*", "predicate": {"kind": "no_cross",
                                       "marking": "double_solid_yellow"},
         "provision_id": "DSY-001"},
        {"element": "*", "predicate": {"kind": "no_straddle", "marking": "dashed",
                                       "min_duration_s": 3.0},
         "provision_id": "DL-001"},
        {"element": "Z1", "predicate": {"kind": "no_stop_zone"},
         "provision_id": "WZ-001"},
        {"element": "L1", "predicate": {"kind": "min_gap", "gap_seconds": 2.0},
         "provision_id": "GAP-001"},
        {"element": "*", "predicate": {"kind": "must_yield",
                                       "entity": "pedestrian_at_crosswalk"},
         "provision_id": "PED-001"},
    ],
}


def rec(t, pid, cls, x, y, heading, speed, lane=None):
    return {"t": round(t, 1), "id": pid, "class": cls, "x": round(x, 3),
            "y": round(y, 3), "heading": heading, "speed": speed,
            "lane_id": lane}


def cruise(duration=8.0, speed=10.0, x0=0.0, y=0.0):
    """Plain lane-keeping run."""
    return [rec(i * 0.1, "ego", "ego", x0 + speed * i * 0.1, y, 0.0, speed, "L1")
            for i in range(int(duration * 10) + 1)]


def run_speeding():
    """Planted: 61.2 km/h on the 50 km/h lane for 5 s, then legal.

    Condition holds t in [0.0, 4.9]; debounce 0.5 s; one event [0.0, 4.9].
    """
    out = []
    x = 0.0
    for i in range(81):
        t = i * 0.1
        speed = 17.0 if t < 5.0 else 11.0
        out.append(rec(t, "ego", "ego", x, 0.0, 0.0, speed, "L1"))
        x += speed * 0.1
    return out


def run_cross_dsy():
    """Planted: diagonal crossing of the double solid yellow marking.

    y goes 0 -> 4 linearly over 4 s from x=90; the path segment crosses
    y=1.75 between t=1.7 and t=1.8 -> one instantaneous event at 1.8.
    """
    out = []
    for i in range(41):
        t = i * 0.1
        out.append(rec(t, "ego", "ego", 90.0 + 5.0 * t, 1.0 * t,
                       0.197, 5.1, "L1"))
    return out


def run_ped_ignored():
    """Planted: pedestrian in the crosswalk, ego passes at 8 m/s.

    Crosswalk x in [80, 84]; ego from x=40. Condition holds from the
    first step at distance <= 20 m (t=2.5, x=60) until ego exits the
    polygon (last inside step t=5.5, x=84) -> event [2.5, 5.5].
    """
    out = []
    for i in range(71):
        t = i * 0.1
        out.append(rec(t, "ego", "ego", 40.0 + 8.0 * t, 0.0, 0.0, 8.0, "L1"))
        out.append(rec(t, "ped1", "pedestrian", 82.0, 0.5, 1.57, 0.0))
    return out


def run_stop_in_workzone():
    """Planted: full stop inside the work zone for 4 s.

    Ego decelerates and is stationary at x=130 (inside Z1) from t=4.0
    through t=8.0; 2 s dwell threshold -> one event [4.0, 8.0].
    """
    out = []
    x = 100.0
    for i in range(81):
        t = i * 0.1
        if t < 3.0:
            speed = 8.0
        elif t < 4.0:
            speed = 8.0 * (4.0 - t)      # linear ramp to 0 at t=4
        else:
            speed = 0.0
        out.append(rec(t, "ego", "ego", x, 0.0, 0.0, round(speed, 3), "L1"))
        x = min(x + speed * 0.1, 130.0)
    return out


def run_brief_speed_spike():
    """Clean: 0.3 s over the limit, below the 0.5 s debounce."""
    out = []
    x = 0.0
    for i in range(61):
        t = i * 0.1
        speed = 17.0 if 2.0 <= t < 2.3 else 12.0
        out.append(rec(t, "ego", "ego", x, 0.0, 0.0, speed, "L1"))
        x += speed * 0.1
    return out


def run_ped_yielded():
    """Clean: ego slows below 2 m/s before the crosswalk."""
    out = []
    x = 40.0
    for i in range(81):
        t = i * 0.1
        speed = 8.0 if x < 55.0 else 1.5
        out.append(rec(t, "ego", "ego", x, 0.0, 0.0, speed, "L1"))
        out.append(rec(t, "ped1", "pedestrian", 82.0, 0.5, 1.57, 0.0))
        x += speed * 0.1
    return out


def run_ped_outside():
    """Clean: pedestrian near but outside the crosswalk polygon."""
    out = []
    for i in range(71):
        t = i * 0.1
        out.append(rec(t, "ego", "ego", 40.0 + 8.0 * t, 0.0, 0.0, 8.0, "L1"))
        out.append(rec(t, "ped1", "pedestrian", 82.0, 6.0, 1.57, 0.0))
    return out


def run_short_straddle():
    """Clean: 2 s of dashed-line straddling, under the 3 s threshold."""
    out = []
    for i in range(61):
        t = i * 0.1
        y = -1.3 if 1.0 <= t < 3.0 else 0.0
        out.append(rec(t, "ego", "ego", 10.0 + 8.0 * t, y, 0.0, 8.0, "L1"))
    return out


def run_gap_kept():
    """Clean: preceding car 30 m ahead at matched speed (3 s headway)."""
    out = []
    for i in range(61):
        t = i * 0.1
        out.append(rec(t, "ego", "ego", 10.0 * t, 0.0, 0.0, 10.0, "L1"))
        out.append(rec(t, "car1", "car", 30.0 + 10.0 * t, 0.0, 0.0, 10.0, "L1"))
    return out


RUNS = {
    "run01": cruise(8.0, 12.0),
    "run02": run_speeding(),
    "run03": cruise(6.0, 10.0, x0=20.0),
    "run04": run_brief_speed_spike(),
    "run05": run_cross_dsy(),
    "run06": run_ped_yielded(),
    "run07": run_ped_outside(),
    "run08": run_short_straddle(),
    "run09": run_ped_ignored(),
    "run10": run_gap_kept(),
    "run11": cruise(5.0, 13.0),
    "run12": run_stop_in_workzone(),
    "run13": cruise(7.0, 9.0, x0=5.0),
    "run14": cruise(8.0, 11.0, x0=10.0),
    "run15": cruise(6.0, 12.5, x0=30.0),
}

EXPECTED = {
    "run02": [{"kind": "speed_limit", "provision_id": "SPD-050",
               "start": 0.0, "end": 4.9}],
    "run05": [{"kind": "no_cross", "provision_id": "DSY-001",
               "start": 1.8, "end": 1.8}],
    "run09": [{"kind": "must_yield:pedestrian_at_crosswalk",
               "provision_id": "PED-001", "start": 2.5, "end": 5.5}],
    "run12": [{"kind": "no_stop_zone", "provision_id": "WZ-001",
               "start": 4.0, "end": 8.0}],
}


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "map.json").write_text(
        json.dumps(LANE_MAP, indent=1) + "\n", encoding="utf-8")
    for name, records in RUNS.items():
        lines = "\n".join(json.dumps(r) for r in records)
        (OUT / f"{name}.jsonl").write_text(lines + "\n", encoding="utf-8")
    (OUT / "expected.json").write_text(
        json.dumps(EXPECTED, indent=1) + "\n", encoding="utf-8")
    print(f"wrote {len(RUNS)} runs to {OUT}")


if __name__ == "__main__":
    main()
