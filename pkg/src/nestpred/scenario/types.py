"""Scenario data model.

Time convention: ``t = 0`` is the present (last observed step). States with
``t <= 0`` are history, states with ``t > 0`` are future.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

STATE_FIELDS = ("t", "x", "y", "vx", "vy", "ax", "ay")
ROLES = ("target", "surrounding")


class ScenarioError(ValueError):
    """A scenario violates a data-model invariant."""


@dataclass
class AgentTrack:
    agent_id: str
    role: str
    states: np.ndarray  # (T, 7): t, x, y, vx, vy, ax, ay

    @property
    def times(self) -> np.ndarray:
        return self.states[:, 0]

    def history(self, t_h: int) -> np.ndarray:
        """Last ``t_h`` observed steps as (t_h, 6) kinematics."""
        past = self.states[self.times <= 1e-9]
        if len(past) < t_h:
            raise ScenarioError(f"agent {self.agent_id}: {len(past)} history steps, need {t_h}")
        return past[-t_h:, 1:]

    def future(self, t_f: int) -> np.ndarray:
        """First ``t_f`` future steps as (t_f, 6) kinematics."""
        fut = self.states[self.times > 1e-9]
        if len(fut) < t_f:
            raise ScenarioError(f"agent {self.agent_id}: {len(fut)} future steps, need {t_f}")
        return fut[:t_f, 1:]

    def to_record(self) -> dict:
        return {"agent_id": self.agent_id, "role": self.role, "states": self.states.tolist()}


@dataclass
class LanePolyline:
    lane_id: str
    points: np.ndarray  # (P, 2)

    def to_record(self) -> dict:
        return {"lane_id": self.lane_id, "points": self.points.tolist()}


@dataclass(frozen=True)
class FrameTransform:
    """Rigid map from target-centric coordinates back to the source frame."""

    origin: tuple[float, float]
    angle: float
    degenerate: bool = False

    def _rot(self) -> np.ndarray:
        c, s = np.cos(self.angle), np.sin(self.angle)
        return np.array([[c, -s], [s, c]])

    def to_local(self, xy) -> np.ndarray:
        xy = np.asarray(xy, dtype=np.float64)
        return (xy - np.asarray(self.origin)) @ self._rot()

    def to_world(self, xy) -> np.ndarray:
        xy = np.asarray(xy, dtype=np.float64)
        return xy @ self._rot().T + np.asarray(self.origin)

    def vec_to_local(self, v) -> np.ndarray:
        return np.asarray(v, dtype=np.float64) @ self._rot()

    def vec_to_world(self, v) -> np.ndarray:
        return np.asarray(v, dtype=np.float64) @ self._rot().T


@dataclass
class Scenario:
    scenario_id: str
    dt: float
    target: AgentTrack
    surrounding: list[AgentTrack] = field(default_factory=list)
    lanes: list[LanePolyline] = field(default_factory=list)
    frame: FrameTransform | None = None

    @property
    def agents(self) -> list[AgentTrack]:
        return [self.target, *self.surrounding]

    @property
    def n(self) -> int:
        return len(self.surrounding)

    def to_record(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "dt": self.dt,
            "agents": [a.to_record() for a in self.agents],
            "lanes": [lane.to_record() for lane in self.lanes],
        }

    def with_surrounding(self, surrounding: list[AgentTrack]) -> "Scenario":
        return replace(self, surrounding=list(surrounding))
