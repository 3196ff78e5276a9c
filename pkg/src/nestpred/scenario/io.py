"""JSON Lines ingestion and export of scenarios."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable

import numpy as np

from .types import ROLES, AgentTrack, LanePolyline, Scenario, ScenarioError

DT_RTOL = 1e-6


class ScenarioFormatError(ScenarioError):
    """A scenario file line could not be ingested."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


def _number(v, what: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioError(f"{what} must be a number, got {type(v).__name__}")
    f = float(v)
    if not math.isfinite(f):
        raise ScenarioError(f"{what} must be finite")
    return f


def _matrix(rows, width: int, what: str) -> np.ndarray:
    if not isinstance(rows, list) or not rows:
        raise ScenarioError(f"{what} must be a non-empty list")
    out = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != width:
            raise ScenarioError(f"{what}[{i}] must be a list of {width} numbers")
        for j, v in enumerate(row):
            out[i, j] = _number(v, f"{what}[{i}][{j}]")
    return out


def _string(obj: dict, key: str, what: str) -> str:
    v = obj.get(key)
    if not isinstance(v, (str, int)) or isinstance(v, bool):
        raise ScenarioError(f"{what} needs a string '{key}'")
    return str(v)


def _track(obj, dt: float, idx: int) -> AgentTrack:
    if not isinstance(obj, dict):
        raise ScenarioError(f"agents[{idx}] must be an object")
    agent_id = _string(obj, "agent_id", f"agents[{idx}]")
    role = obj.get("role")
    if role not in ROLES:
        raise ScenarioError(f"agent {agent_id}: role must be one of {ROLES}, got {role!r}")
    states = _matrix(obj.get("states"), 7, f"agent {agent_id} states")
    steps = np.diff(states[:, 0])
    if np.any(steps <= 0):
        raise ScenarioError(f"agent {agent_id}: timestamps must be strictly increasing")
    if np.any(np.abs(steps - dt) > DT_RTOL * max(dt, 1.0)):
        raise ScenarioError(f"agent {agent_id}: inconsistent time step (expected dt={dt})")
    return AgentTrack(agent_id, role, states)


def _lane(obj, idx: int) -> LanePolyline:
    if not isinstance(obj, dict):
        raise ScenarioError(f"lanes[{idx}] must be an object")
    lane_id = _string(obj, "lane_id", f"lanes[{idx}]")
    pts = _matrix(obj.get("points"), 2, f"lane {lane_id} points")
    if len(pts) < 2:
        raise ScenarioError(f"lane {lane_id}: needs at least 2 points")
    if np.any(np.all(np.diff(pts, axis=0) == 0, axis=1)):
        raise ScenarioError(f"lane {lane_id}: consecutive points must be distinct")
    return LanePolyline(lane_id, pts)


def parse_record(obj) -> Scenario:
    """Validate one decoded JSON record and build a :class:`Scenario`."""
    if not isinstance(obj, dict):
        raise ScenarioError("record must be a JSON object")
    sid = _string(obj, "scenario_id", "record")
    dt = _number(obj.get("dt"), "dt")
    if dt <= 0:
        raise ScenarioError("dt must be positive")
    agents = obj.get("agents")
    if not isinstance(agents, list) or not agents:
        raise ScenarioError("agents must be a non-empty list")
    tracks = [_track(a, dt, i) for i, a in enumerate(agents)]
    targets = [t for t in tracks if t.role == "target"]
    if len(targets) != 1:
        raise ScenarioError(f"exactly one target required, found {len(targets)}")
    ids = [t.agent_id for t in tracks]
    if len(set(ids)) != len(ids):
        raise ScenarioError("agent_id values must be unique")
    lanes_raw = obj.get("lanes", [])
    if not isinstance(lanes_raw, list):
        raise ScenarioError("lanes must be a list")
    lanes = [_lane(lane, i) for i, lane in enumerate(lanes_raw)]
    return Scenario(sid, dt, targets[0], [t for t in tracks if t.role != "target"], lanes)


def load_scenarios(path) -> list[Scenario]:
    """Read a JSON Lines scenario file; blank lines are skipped."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise ScenarioFormatError(f"cannot read {path}: {exc.strerror}") from None
    out = []
    for lineno, line in enumerate(raw.split(b"\n"), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError, RecursionError) as exc:
            raise ScenarioFormatError(f"malformed JSON ({exc.__class__.__name__})", lineno) from None
        try:
            out.append(parse_record(obj))
        except ScenarioError as exc:
            raise ScenarioFormatError(str(exc), lineno) from None
        except (TypeError, ValueError, KeyError, AttributeError, OverflowError) as exc:
            raise ScenarioFormatError(f"invalid record ({exc})", lineno) from None
    return out


def save_scenarios(path, scenarios: Iterable[Scenario]) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for s in scenarios:
            fh.write(json.dumps(s.to_record(), separators=(",", ":")) + "\n")
    return path
