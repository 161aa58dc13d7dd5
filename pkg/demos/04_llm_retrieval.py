"""Ask a language model where to look for an object.

The prompt has three fixed sections: an explanation of the map representation
(system), the task contract (max 3 rooms, max 3 nodes per room, JSON reply),
and the coordinate-free map text, followed by the query. The bundled
heuristic backend answers the same prompts deterministically with token-set
similarity, so the whole pipeline runs without any model. Swapping in a live
OpenAI-compatible endpoint is a config change, not a code change.
"""

from osmag_nav import HeuristicBackend, Query, build_prompt, parse_plan, retrieve
from osmag_nav.fixtures import enriched_five_room_map

m = enriched_five_room_map()
backend = HeuristicBackend()

req = build_prompt(m, Query("measuring cup"))
print("prompt sections:", [line for line in req.user_text.splitlines() if line.startswith("===")])

for text in ("sink", "robot dog", "measuring cup"):
    plan = retrieve(m, Query(text), backend)
    rooms = [(m.areas[r.area_id].name, r.node_ids) for r in plan.rooms]
    print(f"\n{text!r} -> {rooms}")

# whatever a model replies, the parser enforces the plan contract
sloppy_reply = """Sure, here you go:
```json
{"rooms": [
  {"room_id": 105, "nodes": [162, 9999, 163, 168, 162]},
  {"room_id": 105, "nodes": [168]},
  {"room_id": 42, "nodes": [1]},
  {"room_id": 103, "nodes": [158]},
  {"room_id": 104, "nodes": [161]}
]}
```"""
plan = parse_plan(sloppy_reply, m)
print("\nsanitized plan:", [(r.area_id, r.node_ids) for r in plan.rooms])
print("drops recorded:")
for drop in plan.drops:
    print("  -", drop)
