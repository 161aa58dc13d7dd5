"""Turns offline perception records into semantic-osmAG nodes and room tags.

Instance centroids become object-nodes, camera poses with their observed
object lists become viewpoint-nodes, and per-room image descriptions are
summarized into a room-description tag. Records arrive in the metric map
frame; conversion to lat/lon happens here.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .geometry import MetricPoint
from .osmag import (
    DESCRIPTION_KEY,
    OBJECT_KEY,
    OBSERVED_KEY,
    OBSERVED_SEPARATOR,
    PARENT_KEY,
    MapNode,
    OsmagError,
    SemanticMap,
    containing_area_metric,
)

# Two same-label instance records closer than this merge into one node;
# the offline instance extractor can double-count across frames.
DEFAULT_MERGE_RADIUS_M = 0.5

# Fallback summarization keeps at most this many characters.
NULL_SUMMARY_LIMIT = 500


class EnrichmentError(OsmagError):
    pass


class OrphanRecordError(EnrichmentError):
    """Record position lies outside every mapped area."""


@dataclass(frozen=True)
class InstanceRecord:
    label: str
    centroid: MetricPoint
    source: str = ""

    def __post_init__(self) -> None:
        if not self.label.strip():
            raise EnrichmentError("instance record needs a non-empty label")


@dataclass(frozen=True)
class ViewpointRecord:
    capture_pose: MetricPoint
    heading_deg: float
    observed: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.observed:
            raise EnrichmentError("viewpoint record needs a non-empty observed list")


@dataclass(frozen=True)
class RoomDescriptionRecord:
    area_id: int
    descriptions: tuple[str, ...]


@dataclass
class IngestReport:
    applied: dict[str, int] = field(default_factory=lambda: {"instances": 0, "viewpoints": 0, "room_descriptions": 0})
    skipped: dict[str, int] = field(default_factory=lambda: {"instances": 0, "viewpoints": 0, "room_descriptions": 0})
    merged_instances: int = 0
    reasons: list[str] = field(default_factory=list)

    @property
    def total_applied(self) -> int:
        return sum(self.applied.values())

    @property
    def total_skipped(self) -> int:
        return sum(self.skipped.values())


def add_object_node(m: SemanticMap, rec: InstanceRecord) -> tuple[SemanticMap, int]:
    """Add one object-node for ``rec``; returns the new map and node id."""
    area_id = containing_area_metric(m, rec.centroid)
    if area_id is None:
        raise OrphanRecordError(
            f"instance '{rec.label}' at ({rec.centroid.x:.2f}, {rec.centroid.y:.2f}) "
            "lies outside every area"
        )
    out = m.copy()
    nid = out.next_free_node_id()
    position = out.metric_to_geo(rec.centroid)
    out.nodes[nid] = MapNode(
        nid, position, {OBJECT_KEY: rec.label, PARENT_KEY: str(area_id)}
    )
    return out, nid


def add_viewpoint_node(m: SemanticMap, rec: ViewpointRecord) -> tuple[SemanticMap, int]:
    """Add one viewpoint-node listing what the camera reported seeing there."""
    area_id = containing_area_metric(m, rec.capture_pose)
    if area_id is None:
        raise OrphanRecordError(
            f"viewpoint at ({rec.capture_pose.x:.2f}, {rec.capture_pose.y:.2f}) "
            "lies outside every area"
        )
    out = m.copy()
    nid = out.next_free_node_id()
    position = out.metric_to_geo(rec.capture_pose)
    out.nodes[nid] = MapNode(
        nid,
        position,
        {OBSERVED_KEY: OBSERVED_SEPARATOR.join(rec.observed), PARENT_KEY: str(area_id)},
    )
    return out, nid


def null_summarize(text: str) -> str:
    return text[:NULL_SUMMARY_LIMIT]


def attach_room_description(
    m: SemanticMap, rec: RoomDescriptionRecord, summarizer=None
) -> SemanticMap:
    """Set the room-description tag from summarized per-image descriptions.

    ``summarizer`` is a TextBackend (see the llm module); ``None`` selects the
    null summarizer (first 500 characters of the concatenation). On summarizer
    failure the input map is returned unchanged and the error propagates.
    """
    if rec.area_id not in m.areas:
        raise EnrichmentError(f"room description references missing area {rec.area_id}")
    joined = " ".join(rec.descriptions)
    if summarizer is None:
        summary = null_summarize(joined)
    else:
        from .llm import CompletionRequest, complete

        req = CompletionRequest(
            system_text="Summarize room descriptions into one compact paragraph.",
            user_text=joined,
        )
        summary = complete(summarizer, req)
    out = m.copy()
    out.areas[rec.area_id].tags[DESCRIPTION_KEY] = summary
    return out


def _merge_instances(
    records: list[InstanceRecord], radius: float
) -> tuple[list[InstanceRecord], int]:
    """Greedy same-label merge; merged record sits at the member mean."""
    merged: list[list[InstanceRecord]] = []
    for rec in records:
        target = None
        for group in merged:
            if group[0].label != rec.label:
                continue
            cx = sum(g.centroid.x for g in group) / len(group)
            cy = sum(g.centroid.y for g in group) / len(group)
            if math.hypot(rec.centroid.x - cx, rec.centroid.y - cy) < radius:
                target = group
                break
        if target is None:
            merged.append([rec])
        else:
            target.append(rec)
    out = []
    merges = 0
    for group in merged:
        if len(group) == 1:
            out.append(group[0])
            continue
        merges += len(group) - 1
        cx = sum(g.centroid.x for g in group) / len(group)
        cy = sum(g.centroid.y for g in group) / len(group)
        out.append(InstanceRecord(group[0].label, MetricPoint(cx, cy), group[0].source))
    return out, merges


def parse_records(payload: dict) -> tuple[
    list[InstanceRecord], list[ViewpointRecord], list[RoomDescriptionRecord]
]:
    """Validate and materialize a records-file payload; raises before any mutation."""
    if not isinstance(payload, dict):
        raise EnrichmentError("records file must be a JSON object")
    unknown = set(payload) - {"instances", "viewpoints", "room_descriptions"}
    if unknown:
        raise EnrichmentError(f"unknown records sections: {sorted(unknown)}")

    instances = []
    for i, item in enumerate(payload.get("instances", [])):
        try:
            instances.append(
                InstanceRecord(
                    label=str(item["label"]),
                    centroid=MetricPoint(float(item["x"]), float(item["y"])),
                    source=str(item.get("source", "")),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise EnrichmentError(f"bad instance record #{i}: {exc}") from exc
    viewpoints = []
    for i, item in enumerate(payload.get("viewpoints", [])):
        try:
            viewpoints.append(
                ViewpointRecord(
                    capture_pose=MetricPoint(float(item["x"]), float(item["y"])),
                    heading_deg=float(item.get("heading_deg", 0.0)),
                    observed=tuple(str(o) for o in item["observed"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise EnrichmentError(f"bad viewpoint record #{i}: {exc}") from exc
    descriptions = []
    for i, item in enumerate(payload.get("room_descriptions", [])):
        try:
            descriptions.append(
                RoomDescriptionRecord(
                    area_id=int(item["area_id"]),
                    descriptions=tuple(str(d) for d in item["descriptions"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise EnrichmentError(f"bad room description record #{i}: {exc}") from exc
    return instances, viewpoints, descriptions


def ingest(
    m: SemanticMap,
    records: dict | str,
    summarizer=None,
    merge_radius_m: float = DEFAULT_MERGE_RADIUS_M,
) -> tuple[SemanticMap, IngestReport]:
    """Apply a full records payload (dict or JSON text) in file order.

    Orphan records are skipped with a recorded reason; a schema violation
    aborts before any record is applied.
    """
    payload = json.loads(records) if isinstance(records, str) else records
    instances, viewpoints, descriptions = parse_records(payload)
    report = IngestReport()

    instances, report.merged_instances = _merge_instances(instances, merge_radius_m)

    out = m
    for rec in instances:
        try:
            out, _ = add_object_node(out, rec)
            report.applied["instances"] += 1
        except OrphanRecordError as exc:
            report.skipped["instances"] += 1
            report.reasons.append(str(exc))
    for rec in viewpoints:
        try:
            out, _ = add_viewpoint_node(out, rec)
            report.applied["viewpoints"] += 1
        except OrphanRecordError as exc:
            report.skipped["viewpoints"] += 1
            report.reasons.append(str(exc))
    for rec in descriptions:
        try:
            out = attach_room_description(out, rec, summarizer)
            report.applied["room_descriptions"] += 1
        except EnrichmentError as exc:
            report.skipped["room_descriptions"] += 1
            report.reasons.append(str(exc))
    return out, report
