"""Semantic-osmAG indoor maps, LLM-planned object retrieval, and a
deterministic object-goal-navigation simulator with an evaluation suite."""

from .detection import (
    DetectionOutcome,
    DetectionProfile,
    Proposal,
    detect_at_node,
    propose,
    verify,
    visible_instances,
)
from .enrichment import (
    IngestReport,
    InstanceRecord,
    RoomDescriptionRecord,
    ViewpointRecord,
    add_object_node,
    add_viewpoint_node,
    attach_room_description,
    ingest,
)
from .episode import EpisodeConfig, EpisodeRecord, read_records, run_episode, write_records
from .evalkit import (
    MetricsConfig,
    MetricsReport,
    amd,
    apl,
    compute_report,
    dir_rate,
    generate_queries,
    o_rsr,
    r_rsr,
    run_experiment,
)
from .geometry import GeoPoint, MetricPoint, project, unproject
from .gridworld import (
    OccupancyGrid,
    Path,
    SensorConfig,
    WorldModel,
    navigate,
    plan_path,
    render_grid,
    sense,
)
from .llm import CompletionRequest, LiveBackend, ScriptedBackend, TextBackend, complete, make_backend
from .osmag import (
    Area,
    MapNode,
    Passage,
    SemanticMap,
    Violation,
    containing_area,
    map_size_bytes,
    parse_osmag,
    serialize_osmag,
    validate,
)
from .retrieval import (
    HeuristicBackend,
    Query,
    RetrievalPlan,
    build_prompt,
    parse_plan,
    retrieve,
    simplify_map,
)

__version__ = "0.1.0"

__all__ = [
    "Area",
    "CompletionRequest",
    "DetectionOutcome",
    "DetectionProfile",
    "EpisodeConfig",
    "EpisodeRecord",
    "GeoPoint",
    "HeuristicBackend",
    "IngestReport",
    "InstanceRecord",
    "LiveBackend",
    "MapNode",
    "MetricPoint",
    "MetricsConfig",
    "MetricsReport",
    "OccupancyGrid",
    "Passage",
    "Path",
    "Proposal",
    "Query",
    "RetrievalPlan",
    "RoomDescriptionRecord",
    "ScriptedBackend",
    "SemanticMap",
    "SensorConfig",
    "TextBackend",
    "ViewpointRecord",
    "Violation",
    "WorldModel",
    "add_object_node",
    "add_viewpoint_node",
    "amd",
    "apl",
    "attach_room_description",
    "build_prompt",
    "complete",
    "compute_report",
    "containing_area",
    "detect_at_node",
    "dir_rate",
    "generate_queries",
    "ingest",
    "make_backend",
    "map_size_bytes",
    "navigate",
    "o_rsr",
    "parse_osmag",
    "parse_plan",
    "plan_path",
    "project",
    "propose",
    "r_rsr",
    "read_records",
    "render_grid",
    "retrieve",
    "run_episode",
    "run_experiment",
    "sense",
    "serialize_osmag",
    "simplify_map",
    "unproject",
    "validate",
    "verify",
    "visible_instances",
    "write_records",
]
