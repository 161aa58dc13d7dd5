"""Stochastic stand-in for the two-stage online detection at a response node.

An open-vocabulary detector is modeled as: each visible matching instance
yields a proposal with some probability plus Poisson-distributed spurious
proposals, ranked by confidence. A yes/no verifier then accepts true and
spurious proposals with separate probabilities. The robot rotates through
headings until a proposal is accepted or all views are exhausted. Every
distribution is parameterized so each real-world failure class (missed
proposal, verifier confusion, spurious accept) is reproducible on demand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .gridworld import SensorConfig, WorldModel


class DetectionConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DetectionProfile:
    p_propose_tp: float = 1.0
    fp_rate: float = 0.0
    conf_tp: tuple[float, float] = (0.5, 1.0)
    conf_fp: tuple[float, float] = (0.1, 0.8)
    p_verify_tp: float = 1.0
    p_verify_fp: float = 0.0
    rotation_step_deg: int = 90

    def __post_init__(self) -> None:
        for name in ("p_propose_tp", "p_verify_tp", "p_verify_fp"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise DetectionConfigError(f"{name}={value} outside [0, 1]")
        if self.fp_rate < 0.0:
            raise DetectionConfigError("fp_rate must be >= 0")
        if self.rotation_step_deg <= 0 or 360 % self.rotation_step_deg != 0:
            raise DetectionConfigError("rotation_step_deg must divide 360")

    @property
    def views_per_node(self) -> int:
        return 360 // self.rotation_step_deg

    @classmethod
    def from_dict(cls, data: dict) -> "DetectionProfile":
        kwargs = dict(data)
        for key in ("conf_tp", "conf_fp"):
            if key in kwargs:
                kwargs[key] = tuple(float(v) for v in kwargs[key])
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {
            "p_propose_tp": self.p_propose_tp,
            "fp_rate": self.fp_rate,
            "conf_tp": list(self.conf_tp),
            "conf_fp": list(self.conf_fp),
            "p_verify_tp": self.p_verify_tp,
            "p_verify_fp": self.p_verify_fp,
            "rotation_step_deg": self.rotation_step_deg,
        }


PERFECT_PROFILE = DetectionProfile()
DISABLED_PROFILE = DetectionProfile(p_propose_tp=0.0, fp_rate=0.0)


@dataclass(frozen=True)
class Proposal:
    confidence: float
    instance_ref: int | None  # index into world.instances; None means spurious
    bearing_deg: float


@dataclass
class DetectionOutcome:
    found: bool
    matched_instance: int | None
    views_used: int
    is_true_positive: bool
    trace: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "found": self.found,
            "matched_instance": self.matched_instance,
            "views_used": self.views_used,
            "is_true_positive": self.is_true_positive,
            "trace": self.trace,
        }


def _wrap_deg(angle: float) -> float:
    return (angle + 180.0) % 360.0 - 180.0


def _segment_blocks(
    px: float, py: float, qx: float, qy: float, segments: np.ndarray
) -> bool:
    """True when any obstacle segment properly crosses the open sight line p->q."""
    if segments.shape[0] == 0:
        return False
    rx, ry = qx - px, qy - py
    ax, ay = segments[:, 0], segments[:, 1]
    sx, sy = segments[:, 2] - ax, segments[:, 3] - ay
    denom = rx * sy - ry * sx
    wx, wy = ax - px, ay - py
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (wx * sy - wy * sx) / denom
        u = (wx * ry - wy * rx) / denom
    crossing = (np.abs(denom) > 1e-12) & (t > 1e-9) & (t < 1.0 - 1e-9) & (u >= -1e-9) & (u <= 1.0 + 1e-9)
    return bool(crossing.any())


def visible_instances(
    world: WorldModel,
    pose: tuple[float, float, float],
    sensor: SensorConfig | None = None,
) -> list[int]:
    """Instance indices within range, within the FOV half-angle of the heading,
    and with an unobstructed line of sight."""
    x, y, heading = pose
    cfg = sensor if sensor is not None else world.sensor
    half = cfg.fov_deg / 2.0
    out = []
    for i, inst in enumerate(world.instances):
        dx, dy = inst.position.x - x, inst.position.y - y
        r = math.hypot(dx, dy)
        if r > cfg.range_m:
            continue
        if r > 1e-9:
            bearing = math.degrees(math.atan2(dy, dx))
            if abs(_wrap_deg(bearing - heading)) > half + 1e-9:
                continue
        if _segment_blocks(x, y, inst.position.x, inst.position.y, world.segments):
            continue
        out.append(i)
    return out


def propose(
    world: WorldModel,
    pose: tuple[float, float, float],
    query_object: str,
    profile: DetectionProfile,
    rng: np.random.Generator,
    sensor: SensorConfig | None = None,
) -> list[Proposal]:
    """Confidence-ranked proposal list for one view.

    Each visible instance whose label matches the query proposes with
    probability ``p_propose_tp``; spurious proposals arrive Poisson(fp_rate).
    """
    x, y, _ = pose
    wanted = query_object.strip().lower()
    proposals: list[Proposal] = []
    for idx in visible_instances(world, pose, sensor):
        inst = world.instances[idx]
        if inst.label.strip().lower() != wanted:
            continue
        if rng.random() < profile.p_propose_tp:
            conf = float(rng.uniform(*profile.conf_tp))
            bearing = math.degrees(math.atan2(inst.position.y - y, inst.position.x - x))
            proposals.append(Proposal(conf, idx, bearing))
    for _ in range(int(rng.poisson(profile.fp_rate))):
        conf = float(rng.uniform(*profile.conf_fp))
        bearing = float(rng.uniform(-180.0, 180.0))
        proposals.append(Proposal(conf, None, bearing))
    proposals.sort(key=lambda p: -p.confidence)
    return proposals


def verify(proposal: Proposal, profile: DetectionProfile, rng: np.random.Generator) -> bool:
    """Yes/no verifier: accepts true proposals with p_verify_tp, spurious with p_verify_fp."""
    p = profile.p_verify_tp if proposal.instance_ref is not None else profile.p_verify_fp
    return bool(rng.random() < p)


def detect_at_node(
    world: WorldModel,
    node_pose: tuple[float, float],
    query_object: str,
    profile: DetectionProfile,
    rng: np.random.Generator,
    sensor: SensorConfig | None = None,
    proposer=None,
) -> DetectionOutcome:
    """Rotate through headings 0, step, ..., 360-step; stop at the first
    accepted proposal (verified in confidence order).

    ``proposer`` may be supplied to splice in externally produced proposal
    lists: callable (world, pose, query_object, profile, rng, sensor) ->
    list[Proposal]. The default is the stochastic model above.
    """
    make_proposals = proposer if proposer is not None else propose
    x, y = node_pose
    wanted = query_object.strip().lower()
    trace: list[dict] = []
    views = 0
    for heading in range(0, 360, profile.rotation_step_deg):
        views += 1
        pose = (x, y, float(heading))
        proposals = make_proposals(world, pose, query_object, profile, rng, sensor)
        verdicts = []
        accepted: Proposal | None = None
        for prop in proposals:
            ok = verify(prop, profile, rng)
            verdicts.append(
                {
                    "confidence": round(prop.confidence, 6),
                    "instance": prop.instance_ref,
                    "accepted": ok,
                }
            )
            if ok:
                accepted = prop
                break
        trace.append({"heading_deg": heading, "proposals": verdicts})
        if accepted is not None:
            matched = accepted.instance_ref
            is_tp = (
                matched is not None
                and world.instances[matched].label.strip().lower() == wanted
            )
            return DetectionOutcome(True, matched, views, is_tp, trace)
    return DetectionOutcome(False, None, views, False, trace)
