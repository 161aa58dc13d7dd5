"""Packaged five-room fixture: map, enrichment records, and ground-truth world.

The floor plan is a 24 x 21 m office floor with a central robotics lab
connecting a conference room and a student office (north) to a professor
office and a relaxation lounge (south). The world file relocates two mapped
objects (screwdriver, robot dog) and plants two objects that were never
mapped (measuring cup, presentation remote), so all three query categories
(static / relocated / unmapped) are exercised by the demo.
"""

from __future__ import annotations

from .enrichment import ingest
from .geometry import GeoPoint, MetricPoint, unproject
from .gridworld import Obstacle, ObjectInstance, SensorConfig, WorldModel, walls_with_passage_gaps
from .osmag import (
    FROM_KEY,
    LEVEL_KEY,
    NAME_KEY,
    TO_KEY,
    TYPE_AREA,
    TYPE_KEY,
    TYPE_PASSAGE,
    Area,
    MapNode,
    Passage,
    SemanticMap,
)

FIXTURE_ORIGIN = GeoPoint(31.0, 121.0)

CONFERENCE = 101
STUDENT_OFFICE = 102
ROBOTICS_LAB = 103
PROFESSOR_OFFICE = 104
LOUNGE = 105

_ROOMS = {
    CONFERENCE: ("conference room", (0.0, 14.0, 7.0, 21.0)),
    STUDENT_OFFICE: ("student office", (7.0, 14.0, 24.0, 21.0)),
    ROBOTICS_LAB: ("robotics lab", (0.0, 7.0, 24.0, 14.0)),
    PROFESSOR_OFFICE: ("professor office", (0.0, 0.0, 5.0, 7.0)),
    LOUNGE: ("lounge", (5.0, 0.0, 24.0, 7.0)),
}

# passage id -> (from_area, to_area, (x0, y0), (x1, y1)); all lie on shared walls
_PASSAGES = {
    151: (CONFERENCE, ROBOTICS_LAB, (3.0, 14.0), (4.0, 14.0)),
    152: (STUDENT_OFFICE, ROBOTICS_LAB, (15.0, 14.0), (16.0, 14.0)),
    153: (PROFESSOR_OFFICE, ROBOTICS_LAB, (2.0, 7.0), (3.0, 7.0)),
    154: (LOUNGE, ROBOTICS_LAB, (12.0, 7.0), (13.0, 7.0)),
}

ROOM_DESCRIPTIONS = {
    CONFERENCE: (
        "A conference room with a long table, chairs, a TV screen and a "
        "projector used for presentations."
    ),
    STUDENT_OFFICE: (
        "An open-plan student office with rows of desks, monitors, bookshelves "
        "and a robot charging dock."
    ),
    ROBOTICS_LAB: (
        "A robotics laboratory with workbenches, robot arms, screwdrivers, "
        "soldering irons and electronic equipment."
    ),
    PROFESSOR_OFFICE: "A small professor office with a desk, a printer and a bookshelf.",
    LOUNGE: (
        "A relaxation lounge with a kitchen counter, a sink, a coffee machine, "
        "cups, a kettle, a microwave and couches."
    ),
}


def _geo(x: float, y: float) -> GeoPoint:
    return unproject(MetricPoint(x, y), FIXTURE_ORIGIN)


def five_room_map() -> SemanticMap:
    """Bare fixture map: five rooms, four doors, no semantic nodes yet."""
    nodes: dict[int, MapNode] = {}
    areas: dict[int, Area] = {}
    passages: dict[int, Passage] = {}
    next_node = 1

    for area_id, (name, (x0, y0, x1, y1)) in _ROOMS.items():
        ring = []
        for x, y in ((x0, y0), (x1, y0), (x1, y1), (x0, y1)):
            nodes[next_node] = MapNode(next_node, _geo(x, y))
            ring.append(next_node)
            next_node += 1
        areas[area_id] = Area(
            area_id,
            ring,
            {TYPE_KEY: TYPE_AREA, NAME_KEY: name, LEVEL_KEY: "0", "osmAG:areaType": "room"},
        )

    for pid, (src, dst, a, b) in _PASSAGES.items():
        seg = []
        for x, y in (a, b):
            nodes[next_node] = MapNode(next_node, _geo(x, y))
            seg.append(next_node)
            next_node += 1
        passages[pid] = Passage(
            pid,
            seg,
            (src, dst),
            {TYPE_KEY: TYPE_PASSAGE, FROM_KEY: str(src), TO_KEY: str(dst)},
        )

    return SemanticMap(nodes, areas, passages, FIXTURE_ORIGIN)


def five_room_records() -> dict:
    """Perception records that enrich the bare fixture (metric map frame)."""
    instances = [
        {"label": "TV", "x": 3.5, "y": 20.2, "source": "scan"},
        {"label": "desk", "x": 10.0, "y": 19.0, "source": "scan"},
        {"label": "monitor", "x": 18.0, "y": 16.0, "source": "scan"},
        {"label": "robot dog", "x": 20.0, "y": 12.5, "source": "scan"},
        {"label": "screwdriver", "x": 2.0, "y": 8.0, "source": "scan"},
        {"label": "3d printer", "x": 22.0, "y": 8.5, "source": "scan"},
        {"label": "printer", "x": 2.5, "y": 3.5, "source": "scan"},
        {"label": "sink", "x": 8.0, "y": 1.0, "source": "scan"},
        {"label": "couch", "x": 18.0, "y": 3.0, "source": "scan"},
    ]
    viewpoints = [
        {"x": 3.5, "y": 17.0, "heading_deg": 0.0,
         "observed": ["projector", "whiteboard", "conference table"]},
        {"x": 15.0, "y": 18.0, "heading_deg": 90.0,
         "observed": ["bookshelf", "computers", "robot charging dock"]},
        {"x": 12.0, "y": 10.5, "heading_deg": 180.0,
         "observed": ["robot arm", "toolbox", "oscilloscope"]},
        {"x": 2.5, "y": 5.0, "heading_deg": 0.0, "observed": ["desk", "bookshelf"]},
        {"x": 12.0, "y": 4.0, "heading_deg": 270.0,
         "observed": ["coffee machine", "microwave", "sofa"]},
    ]
    room_descriptions = [
        {"area_id": area_id, "descriptions": [text]}
        for area_id, text in sorted(ROOM_DESCRIPTIONS.items())
    ]
    return {
        "instances": instances,
        "viewpoints": viewpoints,
        "room_descriptions": room_descriptions,
    }


def enriched_five_room_map() -> SemanticMap:
    m, report = ingest(five_room_map(), five_room_records())
    assert report.total_skipped == 0, "fixture records must all apply"
    return m


DEFAULT_SENSOR = SensorConfig(fov_deg=120.0, range_m=4.0, rays=61)


def five_room_world() -> WorldModel:
    """Hidden ground truth matching the fixture's SO/RO/UO story.

    Static: sink and TV sit at their mapped nodes. Relocated: the screwdriver
    moved across the lab, the robot dog moved to the student office. Unmapped:
    a measuring cup in the lounge, a presentation remote in the conference
    room. One unmapped lab table forces replanning on routes through the lab.
    """
    m = five_room_map()
    obstacles = walls_with_passage_gaps(m)
    obstacles.append(Obstacle("rect", (10.0, 9.0, 14.0, 10.0)))  # unmapped table

    instances = [
        ObjectInstance("sink", MetricPoint(8.0, 1.0), LOUNGE),
        ObjectInstance("TV", MetricPoint(3.5, 20.2), CONFERENCE),
        ObjectInstance("screwdriver", MetricPoint(17.5, 12.0), ROBOTICS_LAB),
        ObjectInstance("robot dog", MetricPoint(15.0, 16.5), STUDENT_OFFICE),
        ObjectInstance("measuring cup", MetricPoint(14.0, 5.5), LOUNGE),
        ObjectInstance("presentation remote", MetricPoint(6.2, 15.2), CONFERENCE),
    ]
    return WorldModel(obstacles, instances, DEFAULT_SENSOR, start=MetricPoint(6.0, 10.5))


def demo_experiment_config() -> dict:
    """Experiment config the `demo` subcommand runs (paths filled in on write)."""
    return {
        "map_mode": "full",
        "grid_resolution_m": 0.1,
        "backend": {"kind": "heuristic"},
        "profile": {
            "p_propose_tp": 1.0,
            "p_verify_tp": 1.0,
            "fp_rate": 0.1,
            "p_verify_fp": 0.0,
            "rotation_step_deg": 90,
        },
        "generate": [
            {"category": "SO", "granularity": "o"},
            {"category": "RO", "granularity": "o"},
            {"category": "UO", "granularity": "o"},
        ],
        "starts": 1,
        "master_seed": 0,
    }
