"""Enrich a bare map with perception records.

Offline perception hands us three kinds of records: object instance centroids,
camera viewpoints with the objects seen from them, and per-room image
descriptions. Enrichment turns them into object-nodes, viewpoint-nodes, and a
room-description tag, assigning each node its containing room as parent.
"""

from osmag_nav import ingest, map_size_bytes, simplify_map
from osmag_nav.fixtures import five_room_map, five_room_records

bare = five_room_map()
enriched, report = ingest(bare, five_room_records())

print(f"applied: {report.applied}")
print(f"skipped: {report.skipped}, merged duplicates: {report.merged_instances}")
print(f"map size: {map_size_bytes(bare)} -> {map_size_bytes(enriched)} bytes")

print("\nthe LLM-facing view of the enriched map (no coordinates anywhere):\n")
print(simplify_map(enriched))

# orphan records (outside every room) are skipped, not applied
_, orphan_report = ingest(bare, {"instances": [{"label": "ghost", "x": -99, "y": -99}]})
print("\norphan record:", orphan_report.reasons[0])
