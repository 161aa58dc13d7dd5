"""Small map builders for tests: minimal, nested, and seeded synthetic maps."""

from __future__ import annotations

import random

from osmag_nav.geometry import GeoPoint, MetricPoint, unproject
from osmag_nav.osmag import (
    FROM_KEY,
    LEVEL_KEY,
    NAME_KEY,
    OBJECT_KEY,
    OBSERVED_KEY,
    PARENT_KEY,
    TO_KEY,
    TYPE_AREA,
    TYPE_KEY,
    TYPE_PASSAGE,
    Area,
    MapNode,
    Passage,
    SemanticMap,
)

ORIGIN = GeoPoint(31.0, 121.0)

_LABELS = [
    "lamp", "kettle", "stapler", "ladder", "fire extinguisher", "plant",
    "router", "vacuum", "heater", "fan", "camera", "tripod",
]
_WORDS = [
    "wide", "narrow", "bright", "cluttered", "tidy", "storage", "workshop",
    "kitchen", "meeting", "quiet", "shelving", "equipment", "boxes", "tools",
]


class _Builder:
    def __init__(self):
        self.nodes: dict[int, MapNode] = {}
        self.areas: dict[int, Area] = {}
        self.passages: dict[int, Passage] = {}
        self._next = 1

    def node(self, x: float, y: float, tags: dict[str, str] | None = None) -> int:
        nid = self._next
        self._next = self._next + 1
        self.nodes[nid] = MapNode(nid, unproject(MetricPoint(x, y), ORIGIN), dict(tags or {}))
        return nid

    def rect_area(self, area_id: int, x0, y0, x1, y1, tags: dict[str, str]) -> int:
        ring = [self.node(x, y) for x, y in ((x0, y0), (x1, y0), (x1, y1), (x0, y1))]
        self.areas[area_id] = Area(area_id, ring, {TYPE_KEY: TYPE_AREA, **tags})
        return area_id

    def door(self, pid: int, src: int, dst: int, a, b) -> int:
        seg = [self.node(*a), self.node(*b)]
        self.passages[pid] = Passage(
            pid, seg, (src, dst),
            {TYPE_KEY: TYPE_PASSAGE, FROM_KEY: str(src), TO_KEY: str(dst)},
        )
        return pid

    def build(self) -> SemanticMap:
        return SemanticMap(self.nodes, self.areas, self.passages, ORIGIN)


def minimal_map() -> SemanticMap:
    b = _Builder()
    b.rect_area(100, 0.0, 0.0, 4.0, 4.0, {NAME_KEY: "room"})
    return b.build()


def two_room_map() -> SemanticMap:
    b = _Builder()
    b.rect_area(100, 0.0, 0.0, 5.0, 5.0, {NAME_KEY: "left room", LEVEL_KEY: "0"})
    b.rect_area(101, 5.0, 0.0, 10.0, 5.0, {NAME_KEY: "right room", LEVEL_KEY: "0"})
    b.door(150, 100, 101, (5.0, 2.0), (5.0, 3.0))
    return b.build()


def nested_map() -> SemanticMap:
    """A floor area containing two rooms (parent hierarchy two levels deep)."""
    b = _Builder()
    b.rect_area(100, 0.0, 0.0, 12.0, 6.0, {NAME_KEY: "floor", LEVEL_KEY: "0"})
    b.rect_area(101, 0.0, 0.0, 6.0, 6.0, {NAME_KEY: "west room", PARENT_KEY: "100"})
    b.rect_area(102, 6.0, 0.0, 12.0, 6.0, {NAME_KEY: "east room", PARENT_KEY: "100"})
    b.door(150, 101, 102, (6.0, 2.5), (6.0, 3.5))
    return b.build()


def corridor_map() -> SemanticMap:
    b = _Builder()
    b.rect_area(100, 0.0, 0.0, 20.0, 3.0, {NAME_KEY: "corridor", LEVEL_KEY: "0"})
    return b.build()


def synthetic_map(seed: int) -> SemanticMap:
    """Seeded row-of-rooms map with doors and random semantic nodes."""
    rng = random.Random(seed)
    b = _Builder()
    n_rooms = rng.randint(3, 6)
    width = rng.uniform(5.0, 9.0)
    height = rng.uniform(5.0, 9.0)
    area_ids = []
    for i in range(n_rooms):
        area_id = 200 + i
        b.rect_area(
            area_id,
            i * width, 0.0, (i + 1) * width, height,
            {NAME_KEY: f"room {i}", LEVEL_KEY: "0"},
        )
        area_ids.append(area_id)
    for i in range(n_rooms - 1):
        door_y = rng.uniform(1.0, height - 2.0)
        b.door(
            300 + i, area_ids[i], area_ids[i + 1],
            ((i + 1) * width, door_y), ((i + 1) * width, door_y + 1.0),
        )
    for i, area_id in enumerate(area_ids):
        for _ in range(rng.randint(0, 3)):
            x = rng.uniform(i * width + 0.5, (i + 1) * width - 0.5)
            y = rng.uniform(0.5, height - 0.5)
            b.node(x, y, {OBJECT_KEY: rng.choice(_LABELS), PARENT_KEY: str(area_id)})
        for _ in range(rng.randint(0, 2)):
            x = rng.uniform(i * width + 0.5, (i + 1) * width - 0.5)
            y = rng.uniform(0.5, height - 0.5)
            observed = ";".join(rng.sample(_LABELS, rng.randint(1, 3)))
            b.node(x, y, {OBSERVED_KEY: observed, PARENT_KEY: str(area_id)})
        words = rng.sample(_WORDS, rng.randint(2, 5))
        b.areas[area_id].tags["semantic_osmAG:room_description"] = (
            "A " + " ".join(words) + " space."
        )
    return b.build()
