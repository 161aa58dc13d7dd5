"""Build a small semantic map, serialize it to osmAG XML, and validate it.

The wire format is an OSM XML subset: rooms are polygon ways tagged
`osmAG:type=area`, doors are short ways tagged `osmAG:type=passage`, and the
containment hierarchy rides on `parent` tags. Everything is plain text, which
is the whole point: the same file feeds the planner and a language model.
"""

from osmag_nav import parse_osmag, serialize_osmag, validate
from osmag_nav.fixtures import five_room_map

m = five_room_map()
print(f"fixture: {len(m.areas)} areas, {len(m.passages)} passages, {len(m.nodes)} nodes")

xml_text = serialize_osmag(m)
print("\nfirst lines of the canonical serialization:\n")
print("\n".join(xml_text.splitlines()[:12]))

# round-trip: parsing the canonical form and serializing again is byte-stable
again = serialize_osmag(parse_osmag(xml_text))
print("\ncanonical fixed point:", "yes" if again == xml_text else "NO")

violations = validate(m)
print(f"violations: {len(violations)}")

# break an invariant on purpose: a parent tag that resolves nowhere
broken = m.copy()
broken.areas[101].tags["parent"] = "does-not-exist"
for v in validate(broken):
    print("  found:", v)
