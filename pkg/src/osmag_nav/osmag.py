"""Data model, parser, canonical serializer, and validator for semantic-osmAG.

The wire format is an OSM XML subset: ``<node>``, ``<way>``, ``<nd ref>``,
``<tag k v>``. Ways tagged ``osmAG:type=area`` are polygonal rooms; ways
tagged ``osmAG:type=passage`` are traversable connections (doors) between two
areas. Nodes may carry object semantics (``semantic_osmAG:object_name``) or
viewpoint semantics (``semantic_osmAG:observed_object``). A ``parent`` tag on
nodes and areas encodes the containment hierarchy.
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from xml.sax.saxutils import quoteattr

from .geometry import (
    BOUNDARY_TOL_DEG,
    GeoPoint,
    MetricPoint,
    point_in_ring,
    point_segment_distance,
    project,
    ring_is_simple,
    unproject,
)

TYPE_KEY = "osmAG:type"
TYPE_AREA = "area"
TYPE_PASSAGE = "passage"
PARENT_KEY = "parent"
NAME_KEY = "name"
LEVEL_KEY = "osmAG:level"
FROM_KEY = "osmAG:from"
TO_KEY = "osmAG:to"
OBJECT_KEY = "semantic_osmAG:object_name"
OBSERVED_KEY = "semantic_osmAG:observed_object"
DESCRIPTION_KEY = "semantic_osmAG:room_description"

# semicolon-separated list convention for observed-object tag values
OBSERVED_SEPARATOR = ";"


class OsmagError(Exception):
    """Base error for map parsing/handling."""


class MapParseError(OsmagError):
    def __init__(self, message: str, element_id: int | None = None, line: int | None = None):
        ctx = []
        if element_id is not None:
            ctx.append(f"element id {element_id}")
        if line is not None:
            ctx.append(f"line {line}")
        suffix = f" ({', '.join(ctx)})" if ctx else ""
        super().__init__(message + suffix)
        self.element_id = element_id
        self.line = line


@dataclass(frozen=True)
class Violation:
    element_id: int
    rule: str
    message: str

    def __str__(self) -> str:
        return f"[{self.rule}] element {self.element_id}: {self.message}"


@dataclass
class MapNode:
    id: int
    position: GeoPoint
    tags: dict[str, str] = field(default_factory=dict)

    @property
    def object_name(self) -> str | None:
        return self.tags.get(OBJECT_KEY)

    @property
    def observed_objects(self) -> list[str]:
        raw = self.tags.get(OBSERVED_KEY)
        if raw is None:
            return []
        return [part.strip() for part in raw.split(OBSERVED_SEPARATOR) if part.strip()]

    @property
    def is_semantic(self) -> bool:
        return OBJECT_KEY in self.tags or OBSERVED_KEY in self.tags


@dataclass
class Area:
    id: int
    ring: list[int]  # open ring: first vertex is NOT repeated in memory
    tags: dict[str, str] = field(default_factory=dict)

    @property
    def name(self) -> str | None:
        return self.tags.get(NAME_KEY)

    @property
    def level(self) -> str | None:
        return self.tags.get(LEVEL_KEY)

    @property
    def description(self) -> str | None:
        return self.tags.get(DESCRIPTION_KEY)


@dataclass
class Passage:
    id: int
    segment: list[int]
    connects: tuple[int, int]
    tags: dict[str, str] = field(default_factory=dict)


class SemanticMap:
    """Immutable-by-convention semantic-osmAG map.

    Mutation is confined to the enrichment module, which copies first; all
    other code treats instances as read-only and safe to share.
    """

    def __init__(
        self,
        nodes: dict[int, MapNode],
        areas: dict[int, Area],
        passages: dict[int, Passage],
        projection_origin: GeoPoint,
    ):
        self.nodes = nodes
        self.areas = areas
        self.passages = passages
        self.projection_origin = projection_origin

    def copy(self) -> "SemanticMap":
        nodes = {i: MapNode(n.id, n.position, dict(n.tags)) for i, n in self.nodes.items()}
        areas = {i: Area(a.id, list(a.ring), dict(a.tags)) for i, a in self.areas.items()}
        passages = {
            i: Passage(p.id, list(p.segment), p.connects, dict(p.tags))
            for i, p in self.passages.items()
        }
        return SemanticMap(nodes, areas, passages, self.projection_origin)

    # -- lookup helpers -------------------------------------------------

    def next_free_node_id(self) -> int:
        used = set(self.nodes) | set(self.areas) | set(self.passages)
        return max(used, default=0) + 1

    def resolve_area(self, ref: str | int | None) -> Area | None:
        """Resolve an area reference by id string/int, falling back to a unique name."""
        if ref is None:
            return None
        if isinstance(ref, int):
            return self.areas.get(ref)
        text = ref.strip()
        if re.fullmatch(r"-?\d+", text):
            area = self.areas.get(int(text))
            if area is not None:
                return area
        named = [a for a in self.areas.values() if a.tags.get(NAME_KEY) == text]
        if len(named) == 1:
            return named[0]
        return None

    def node_parent_area(self, node: MapNode) -> Area | None:
        return self.resolve_area(node.tags.get(PARENT_KEY))

    def area_parent(self, area: Area) -> Area | None:
        return self.resolve_area(area.tags.get(PARENT_KEY))

    def area_depth(self, area: Area) -> int:
        """Length of the parent chain above ``area`` (0 for roots); cycles count as 0."""
        depth = 0
        seen = {area.id}
        current = area
        while True:
            parent = self.area_parent(current)
            if parent is None or parent.id in seen:
                return depth
            seen.add(parent.id)
            depth += 1
            current = parent

    def area_ring_geo(self, area: Area) -> list[tuple[float, float]]:
        """Area ring as (lon, lat) vertex tuples; missing nodes are skipped."""
        out = []
        for nid in area.ring:
            node = self.nodes.get(nid)
            if node is not None:
                out.append((node.position.lon, node.position.lat))
        return out

    def area_ring_metric(self, area: Area) -> list[tuple[float, float]]:
        out = []
        for nid in area.ring:
            node = self.nodes.get(nid)
            if node is not None:
                p = project(node.position, self.projection_origin)
                out.append((p.x, p.y))
        return out

    def semantic_nodes(self, area_id: int | None = None) -> list[MapNode]:
        nodes = [n for n in self.nodes.values() if n.is_semantic]
        if area_id is not None:
            nodes = [
                n
                for n in nodes
                if (parent := self.node_parent_area(n)) is not None and parent.id == area_id
            ]
        return sorted(nodes, key=lambda n: n.id)

    def node_metric(self, node_id: int) -> MetricPoint:
        return project(self.nodes[node_id].position, self.projection_origin)

    def metric_to_geo(self, p: MetricPoint) -> GeoPoint:
        return unproject(p, self.projection_origin)


# ---------------------------------------------------------------------------
# parsing


def _line_of(xml_text: str, pattern: str) -> int | None:
    m = re.search(pattern, xml_text)
    if m is None:
        return None
    return xml_text.count("\n", 0, m.start()) + 1


def _id_line(xml_text: str, element_id: int) -> int | None:
    return _line_of(xml_text, rf"""<(?:node|way)\b[^>]*\bid=["']{element_id}["']""")


def parse_osmag(xml_text: str) -> SemanticMap:
    """Parse an osmAG XML document into a :class:`SemanticMap`.

    Raises :class:`MapParseError` with the offending element id and the line
    where it is declared for malformed XML, dangling ``<nd>`` references,
    duplicate ids, and ways without an ``osmAG:type`` tag.
    """
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        line = exc.position[0] if exc.position else None
        raise MapParseError(f"malformed XML: {exc}", line=line) from exc

    nodes: dict[int, MapNode] = {}
    ways: list[tuple[int, list[int], dict[str, str]]] = []
    seen_ids: set[int] = set()

    for el in root:
        if el.tag == "node":
            nid = int(el.get("id", "0"))
            if nid in seen_ids:
                raise MapParseError("duplicate id", element_id=nid, line=_id_line(xml_text, nid))
            seen_ids.add(nid)
            tags = {t.get("k", ""): t.get("v", "") for t in el.findall("tag")}
            try:
                pos = GeoPoint(float(el.get("lat", "nan")), float(el.get("lon", "nan")))
            except ValueError as exc:
                raise MapParseError(
                    f"bad node coordinates: {exc}", element_id=nid, line=_id_line(xml_text, nid)
                ) from exc
            nodes[nid] = MapNode(nid, pos, tags)
        elif el.tag == "way":
            wid = int(el.get("id", "0"))
            if wid in seen_ids:
                raise MapParseError("duplicate id", element_id=wid, line=_id_line(xml_text, wid))
            seen_ids.add(wid)
            refs = [int(nd.get("ref", "0")) for nd in el.findall("nd")]
            tags = {t.get("k", ""): t.get("v", "") for t in el.findall("tag")}
            ways.append((wid, refs, tags))

    areas: dict[int, Area] = {}
    passages_raw: list[tuple[int, list[int], dict[str, str]]] = []

    for wid, refs, tags in ways:
        for ref in refs:
            if ref not in nodes:
                line = _line_of(xml_text, rf"""<nd\b[^>]*\bref=["']{ref}["']""")
                raise MapParseError(
                    f"way {wid} references undeclared node id {ref}",
                    element_id=ref,
                    line=line,
                )
        way_type = tags.get(TYPE_KEY)
        if way_type == TYPE_AREA:
            ring = refs[:-1] if len(refs) >= 2 and refs[0] == refs[-1] else list(refs)
            areas[wid] = Area(wid, ring, tags)
        elif way_type == TYPE_PASSAGE:
            passages_raw.append((wid, refs, tags))
        else:
            raise MapParseError(
                f"way is missing a recognized '{TYPE_KEY}' tag",
                element_id=wid,
                line=_id_line(xml_text, wid),
            )

    origin = _parse_origin(root, nodes)
    partial = SemanticMap(nodes, areas, {}, origin)

    passages: dict[int, Passage] = {}
    for wid, refs, tags in passages_raw:
        connects = _passage_connects(partial, wid, refs, tags, xml_text)
        passages[wid] = Passage(wid, refs, connects, tags)

    return SemanticMap(nodes, areas, passages, origin)


def _parse_origin(root: ET.Element, nodes: dict[int, MapNode]) -> GeoPoint:
    lat_attr, lon_attr = root.get("origin_lat"), root.get("origin_lon")
    if lat_attr is not None and lon_attr is not None:
        return GeoPoint(float(lat_attr), float(lon_attr))
    if not nodes:
        return GeoPoint(0.0, 0.0)
    return GeoPoint(
        min(n.position.lat for n in nodes.values()),
        min(n.position.lon for n in nodes.values()),
    )


def _passage_connects(
    partial: SemanticMap,
    wid: int,
    refs: list[int],
    tags: dict[str, str],
    xml_text: str,
) -> tuple[int, int]:
    src = partial.resolve_area(tags.get(FROM_KEY))
    dst = partial.resolve_area(tags.get(TO_KEY))
    if src is not None and dst is not None:
        return (src.id, dst.id)
    # No (or unresolvable) from/to tags: infer the two areas whose boundary
    # carries the passage endpoints.
    touching = []
    endpoints = [refs[0], refs[-1]] if refs else []
    for area in sorted(partial.areas.values(), key=lambda a: a.id):
        ring = partial.area_ring_geo(area)
        if len(ring) < 3:
            continue
        if all(_on_ring_boundary(partial.nodes[e].position, ring) for e in endpoints):
            touching.append(area.id)
    if len(touching) >= 2:
        return (touching[0], touching[1])
    raise MapParseError(
        "passage does not resolve to two connected areas "
        f"(tags {FROM_KEY}/{TO_KEY} missing or endpoints off any shared boundary)",
        element_id=wid,
        line=_id_line(xml_text, wid),
    )


def _on_ring_boundary(p: GeoPoint, ring: list[tuple[float, float]], tol: float = 1e-7) -> bool:
    n = len(ring)
    for i in range(n):
        ax, ay = ring[i]
        bx, by = ring[(i + 1) % n]
        if point_segment_distance(p.lon, p.lat, ax, ay, bx, by) <= tol:
            return True
    return False


# ---------------------------------------------------------------------------
# serialization


def _fmt(value: float) -> str:
    # 9 decimal places cover the 1e-9 degree round-trip contract (~0.1 mm)
    # and re-round stably, keeping canonical output a fixed point.
    text = f"{float(value):.9f}".rstrip("0").rstrip(".")
    return text if text not in ("", "-") else "0"


def serialize_osmag(m: SemanticMap) -> str:
    """Canonical serialization: elements ordered by id, tags lexicographically.

    ``parse(serialize(m))`` is semantically equal to ``m`` and a second
    serialization is byte-identical (canonical fixed point).
    """
    lines = ['<?xml version="1.0" encoding="UTF-8"?>']
    lines.append(
        '<osm version="0.6" generator="osmag-nav"'
        f" origin_lat={quoteattr(_fmt(m.projection_origin.lat))}"
        f" origin_lon={quoteattr(_fmt(m.projection_origin.lon))}>"
    )
    for node in sorted(m.nodes.values(), key=lambda n: n.id):
        attrs = f'id="{node.id}" lat={quoteattr(_fmt(node.position.lat))} lon={quoteattr(_fmt(node.position.lon))}'
        if node.tags:
            lines.append(f"  <node {attrs}>")
            for k in sorted(node.tags):
                lines.append(f"    <tag k={quoteattr(k)} v={quoteattr(node.tags[k])}/>")
            lines.append("  </node>")
        else:
            lines.append(f"  <node {attrs}/>")
    ways: list[tuple[int, list[int], dict[str, str]]] = []
    for area in m.areas.values():
        refs = list(area.ring)
        if refs:
            refs.append(refs[0])  # close the ring on the wire
        ways.append((area.id, refs, dict(area.tags)))
    for p in m.passages.values():
        tags = dict(p.tags)
        tags[FROM_KEY] = str(p.connects[0])
        tags[TO_KEY] = str(p.connects[1])
        ways.append((p.id, list(p.segment), tags))
    for wid, refs, tags in sorted(ways, key=lambda w: w[0]):
        lines.append(f'  <way id="{wid}">')
        for ref in refs:
            lines.append(f'    <nd ref="{ref}"/>')
        for k in sorted(tags):
            lines.append(f"    <tag k={quoteattr(k)} v={quoteattr(tags[k])}/>")
        lines.append("  </way>")
    lines.append("</osm>")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# validation


def validate(m: SemanticMap) -> list[Violation]:
    """Check every structural invariant; violations are data, not failures."""
    out: list[Violation] = []

    for node in m.nodes.values():
        if OBJECT_KEY in node.tags and OBSERVED_KEY in node.tags:
            out.append(
                Violation(node.id, "semantic-key-conflict",
                          f"node carries both {OBJECT_KEY} and {OBSERVED_KEY}")
            )

    for area in m.areas.values():
        missing = [nid for nid in area.ring if nid not in m.nodes]
        if missing:
            out.append(Violation(area.id, "dangling-node", f"ring references missing nodes {missing}"))
            continue
        distinct = {
            (m.nodes[nid].position.lat, m.nodes[nid].position.lon) for nid in area.ring
        }
        if len(area.ring) < 3 or len(distinct) < 3:
            out.append(Violation(area.id, "ring-too-small", "ring needs >= 3 distinct vertices"))
            continue
        ring = m.area_ring_geo(area)
        if not ring_is_simple(ring):
            out.append(Violation(area.id, "self-intersecting", "area polygon is not simple"))
        parent_ref = area.tags.get(PARENT_KEY)
        if parent_ref is not None and m.resolve_area(parent_ref) is None:
            out.append(Violation(area.id, "parent-missing", f"parent '{parent_ref}' does not resolve"))

    out.extend(_parent_cycles(m))

    for p in m.passages.values():
        for side in p.connects:
            if side not in m.areas:
                out.append(Violation(p.id, "passage-area-missing", f"connected area {side} missing"))
        if len(p.segment) < 2:
            out.append(Violation(p.id, "passage-too-short", "segment needs >= 2 nodes"))
            continue
        if any(nid not in m.nodes for nid in p.segment):
            out.append(Violation(p.id, "dangling-node", "segment references missing nodes"))
            continue
        for side in p.connects:
            area = m.areas.get(side)
            if area is None:
                continue
            ring = m.area_ring_geo(area)
            if len(ring) < 3:
                continue
            for end in (p.segment[0], p.segment[-1]):
                if not _on_ring_boundary(m.nodes[end].position, ring):
                    out.append(
                        Violation(
                            p.id,
                            "passage-endpoint-off-boundary",
                            f"endpoint node {end} not on boundary of area {side}",
                        )
                    )

    for node in m.nodes.values():
        if not node.is_semantic:
            continue
        parent_ref = node.tags.get(PARENT_KEY)
        if parent_ref is None:
            out.append(Violation(node.id, "node-parent-missing", "semantic node has no parent tag"))
            continue
        parent = m.resolve_area(parent_ref)
        if parent is None:
            out.append(Violation(node.id, "parent-missing", f"parent '{parent_ref}' does not resolve"))
            continue
        ring = m.area_ring_geo(parent)
        if len(ring) >= 3 and not point_in_ring(node.position.lon, node.position.lat, ring):
            out.append(
                Violation(node.id, "node-outside-parent",
                          f"node lies outside parent area {parent.id}")
            )

    return out


def _parent_cycles(m: SemanticMap) -> list[Violation]:
    out = []
    reported: set[int] = set()
    for area in sorted(m.areas.values(), key=lambda a: a.id):
        seen: list[int] = []
        current: Area | None = area
        while current is not None:
            if current.id in seen:
                cycle = seen[seen.index(current.id):]
                anchor = min(cycle)
                if anchor not in reported:
                    reported.add(anchor)
                    out.append(
                        Violation(anchor, "parent-cycle",
                                  "parent chain forms a cycle " + "->".join(map(str, cycle)))
                    )
                break
            seen.append(current.id)
            current = m.area_parent(current)
    return out


# ---------------------------------------------------------------------------
# containment


def containing_area(m: SemanticMap, p: GeoPoint) -> int | None:
    """Deepest area (by parent-chain depth) whose polygon contains ``p``.

    Even-odd rule; the boundary counts as inside (tolerance
    ``BOUNDARY_TOL_DEG``). Ties on depth break toward the smaller area id.
    """
    best: tuple[int, int] | None = None  # (-depth, id)
    for area in m.areas.values():
        ring = m.area_ring_geo(area)
        if len(ring) < 3:
            continue
        if point_in_ring(p.lon, p.lat, ring, BOUNDARY_TOL_DEG):
            key = (-m.area_depth(area), area.id)
            if best is None or key < best:
                best = key
    return None if best is None else best[1]


def containing_area_metric(m: SemanticMap, p: MetricPoint) -> int | None:
    return containing_area(m, unproject(p, m.projection_origin))


def maps_semantically_equal(a: SemanticMap, b: SemanticMap, tol_deg: float = 1e-9) -> bool:
    """Equality on ids, tags, topology, and geometry to ``tol_deg`` degrees."""
    if set(a.nodes) != set(b.nodes) or set(a.areas) != set(b.areas) or set(a.passages) != set(b.passages):
        return False
    for nid, na in a.nodes.items():
        nb = b.nodes[nid]
        if na.tags != nb.tags:
            return False
        if (
            abs(na.position.lat - nb.position.lat) > tol_deg
            or abs(na.position.lon - nb.position.lon) > tol_deg
        ):
            return False
    for aid, aa in a.areas.items():
        ab = b.areas[aid]
        if aa.ring != ab.ring or aa.tags != ab.tags:
            return False
    for pid, pa in a.passages.items():
        pb = b.passages[pid]
        if pa.segment != pb.segment or pa.connects != pb.connects:
            return False
        # from/to tags are normalized on serialize; compare the rest verbatim
        ta = {k: v for k, v in pa.tags.items() if k not in (FROM_KEY, TO_KEY)}
        tb = {k: v for k, v in pb.tags.items() if k not in (FROM_KEY, TO_KEY)}
        if ta != tb:
            return False
    oa, ob = a.projection_origin, b.projection_origin
    return abs(oa.lat - ob.lat) <= tol_deg and abs(oa.lon - ob.lon) <= tol_deg


def map_size_bytes(m: SemanticMap) -> int:
    return len(serialize_osmag(m).encode("utf-8"))
