"""Regenerates the bundled reference taxonomy fixture.

Emits the prefix-closed node list plus sibling exclusion groups. The node
count is pinned at 227 across six roots; rerun after editing the tree and
the script will fail loudly if the count drifts.
"""

import json
import pathlib

TREE = {
    "Road": {
        "Intersection": [
            "T-intersection", "Crossroads", "Roundabout", "Y-intersection",
            "Staggered intersection", "Unsignalized intersection",
        ],
        "Lanes": [
            "single-lane", "two-lanes", "three-lanes", "four-or-more-lanes",
            "Bus lane", "Bicycle lane", "Emergency lane", "Tidal lane",
            "Ramp", "Acceleration lane", "Deceleration lane",
        ],
        "Road type": [
            "Urban road", "Freeway", "Expressway", "Rural road",
            "Residential street", "Mountain road", "Tunnel", "Bridge",
            "Parking lot", "Service area", "Alley", "Private road",
        ],
        "Geometry": [
            "Straight", "Curve", "Sharp curve", "Slope", "Steep slope",
            "Crest", "Sag", "Narrow road", "Widening section", "Merging section",
        ],
        "Surface": [
            "Paved", "Unpaved", "Wet surface", "Icy surface",
            "Flooded section", "Damaged surface",
        ],
        "Right of way": [
            "Main road", "Side road", "Priority road",
            "Yield-controlled approach", "Stop-controlled approach",
        ],
        "Urban road": [],
    },
    "Infrastructure": {
        "Road markings": [
            "double solid yellow line", "single solid yellow line",
            "solid white line", "dashed white line", "dashed yellow line",
            "stop line", "crosswalk", "guide arrow", "yield markings",
            "no-parking markings", "grid markings", "diversion markings",
            "lane-change prohibition markings", "speed reduction markings",
        ],
        "Traffic signs": [
            "Speed limit sign", "Stop sign", "Yield sign", "No entry sign",
            "No overtaking sign", "No parking sign", "No U-turn sign",
            "One-way sign", "Warning sign", "Direction sign",
            "Work zone sign", "Height limit sign", "Weight limit sign",
            "Minimum speed sign",
        ],
        "Traffic lights": [
            "Signalized intersection", "Red light", "Green light",
            "Yellow light", "Flashing yellow", "Arrow signal",
            "Pedestrian signal",
        ],
        "Barriers": [
            "Central divider", "Guardrail", "Fence", "Traffic cones",
            "Water-filled barriers",
        ],
        "Facilities": [
            "Toll station", "Bus stop", "Pedestrian overpass",
            "Pedestrian underpass", "Railway crossing",
        ],
    },
    "Traffic management": {
        "Temporary traffic control": [
            "Work zone", "Police direction", "Temporary speed limit",
            "Lane closure", "Detour", "Checkpoint", "Manual toll control",
            "Contraflow",
        ],
        "Traffic events": [
            "Accident ahead", "Congestion", "Road closure",
            "Special event", "Escorted convoy", "Stalled vehicle",
            "Spilled cargo incident",
        ],
        "Administrative": [
            "Restricted area", "Time-restricted access",
            "License-plate restriction", "Low-emission zone",
        ],
    },
    "Environment": {
        "Weather": [
            "Clear", "Rain", "Heavy rain", "Snow", "Fog", "Heavy fog",
            "Hail", "Sandstorm", "Strong wind", "Sleet", "Freezing rain",
        ],
        "Visibility": [
            "Good visibility", "Reduced visibility",
            "Visibility under 200m", "Visibility under 100m",
            "Visibility under 50m",
        ],
        "Time of day": [
            "Daytime", "Night", "Dawn", "Dusk",
        ],
        "Lighting": [
            "Street lighting", "No street lighting", "Glare",
        ],
    },
    "Objects": {
        "Motor vehicles": [
            "Passenger car", "Bus", "Truck", "Motorcycle",
            "Emergency vehicle", "School bus", "Tractor",
            "Oversize vehicle", "Taxi", "Trailer", "Tanker truck",
        ],
        "Non-motor vehicles": [
            "Bicycle", "Electric bicycle", "Tricycle",
        ],
        "Vulnerable road users": [
            "Pedestrian", "Child", "Elderly person",
            "Wheelchair user", "Animal", "Road worker", "Traffic police",
        ],
        "Participant motion": [
            "Preceding vehicle braking", "Preceding vehicle turning left",
            "Preceding vehicle turning right", "Oncoming traffic",
            "Overtaking vehicle", "Merging vehicle", "Reversing vehicle",
            "Stationary vehicle", "Pedestrian crossing",
            "Queue of vehicles", "Vehicle running red light",
            "Jaywalking pedestrian",
        ],
        "Obstacles": [
            "Fallen cargo", "Debris", "Pothole", "Stopped obstacle",
        ],
        "Ego maneuver": [
            "Going straight", "Turning left", "Turning right", "U-turn",
            "Lane change", "Overtaking", "Reversing", "Parking", "Stopping",
        ],
    },
    "Digital information": {
        "V2X messages": [
            "Signal phase message", "Hazard warning message",
            "Speed advisory message", "Emergency vehicle alert",
            "Road condition message", "Work zone broadcast",
        ],
        "Navigation data": [
            "Live traffic data", "Variable message sign",
            "Dynamic speed limit broadcast", "Map update",
            "Lane-level guidance",
        ],
    },
}

EXCLUSIONS = [
    ["/Road/Lanes/single-lane", "/Road/Lanes/two-lanes",
     "/Road/Lanes/three-lanes", "/Road/Lanes/four-or-more-lanes"],
    ["/Environment/Weather/Clear", "/Environment/Weather/Rain",
     "/Environment/Weather/Snow", "/Environment/Weather/Fog"],
    ["/Environment/Time of day/Daytime", "/Environment/Time of day/Night",
     "/Environment/Time of day/Dawn", "/Environment/Time of day/Dusk"],
    ["/Environment/Visibility/Good visibility",
     "/Environment/Visibility/Reduced visibility"],
    ["/Infrastructure/Traffic lights/Red light",
     "/Infrastructure/Traffic lights/Green light",
     "/Infrastructure/Traffic lights/Yellow light"],
    ["/Environment/Lighting/Street lighting",
     "/Environment/Lighting/No street lighting"],
    ["/Road/Surface/Paved", "/Road/Surface/Unpaved"],
]


def main() -> None:
    nodes: list[str] = []
    for root, children in TREE.items():
        nodes.append(f"/{root}")
        for mid, leaves in children.items():
            nodes.append(f"/{root}/{mid}")
            for leaf in leaves:
                nodes.append(f"/{root}/{mid}/{leaf}")
    assert len(nodes) == len(set(nodes)), "duplicate node"
    count = len(nodes)
    if count != 227:
        raise SystemExit(f"node count is {count}, expected 227 — adjust TREE")
    node_set = set(nodes)
    for group in EXCLUSIONS:
        for member in group:
            assert member in node_set, member

    out = pathlib.Path(__file__).resolve().parents[1] / "src/lawlens/fixtures/taxonomy.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(
        json.dumps({"nodes": nodes, "exclusions": EXCLUSIONS},
                   indent=1, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    print(f"wrote {out} ({count} nodes, {len(EXCLUSIONS)} exclusion groups)")


if __name__ == "__main__":
    main()
