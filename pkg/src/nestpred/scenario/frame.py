from __future__ import annotations

import logging
import math
from dataclasses import replace

import numpy as np

from .types import AgentTrack, FrameTransform, LanePolyline, Scenario, ScenarioError

log = logging.getLogger(__name__)

_MIN_MOTION = 1e-9


def _heading(track: AgentTrack) -> float | None:
    past = track.states[track.times <= 1e-9]
    if len(past) == 0:
        raise ScenarioError(f"target {track.agent_id} has no history")
    if len(past) >= 2:
        d = past[-1, 1:3] - past[-2, 1:3]
        if np.hypot(*d) > _MIN_MOTION:
            return math.atan2(d[1], d[0])
    v = past[-1, 3:5]
    if np.hypot(*v) > _MIN_MOTION:
        return math.atan2(v[1], v[0])
    return None


def _map_states(states: np.ndarray, tf: FrameTransform) -> np.ndarray:
    out = states.copy()
    out[:, 1:3] = tf.to_local(states[:, 1:3])
    out[:, 3:5] = tf.vec_to_local(states[:, 3:5])
    out[:, 5:7] = tf.vec_to_local(states[:, 5:7])
    return out


def normalize_frame(s: Scenario) -> Scenario:
    """Return ``s`` in target-centric coordinates.

    The target's last history point moves to the origin and its last-step
    heading to +x. A motionless target keeps the source orientation and the
    transform is marked ``degenerate``.
    """
    heading = _heading(s.target)
    past = s.target.states[s.target.times <= 1e-9]
    origin = tuple(float(v) for v in past[-1, 1:3])
    if heading is None:
        log.warning("scenario %s: target has no motion, heading undefined", s.scenario_id)
        tf = FrameTransform(origin, 0.0, degenerate=True)
    else:
        tf = FrameTransform(origin, heading)

    def track(a: AgentTrack) -> AgentTrack:
        return AgentTrack(a.agent_id, a.role, _map_states(a.states, tf))

    lanes = [LanePolyline(lane.lane_id, tf.to_local(lane.points)) for lane in s.lanes]
    frame = tf if s.frame is None else _compose(s.frame, tf)
    return replace(s, target=track(s.target), surrounding=[track(a) for a in s.surrounding],
                   lanes=lanes, frame=frame)


def _compose(outer: FrameTransform, inner: FrameTransform) -> FrameTransform:
    # local -> inner-world -> outer-world
    origin = tuple(float(v) for v in outer.to_world(np.asarray(inner.origin)))
    return FrameTransform(origin, outer.angle + inner.angle, outer.degenerate or inner.degenerate)


def denormalize_xy(xy, frame: FrameTransform | None) -> np.ndarray:
    return np.asarray(xy, dtype=np.float64) if frame is None else frame.to_world(xy)


def denormalize_scales(bxy, frame: FrameTransform | None) -> np.ndarray:
    """Map per-axis Laplace scales to the source axes.

    The rotated coordinate is a mix of both axes; its scale is chosen so the
    variance matches, ``b' = sqrt((c*bx)^2 + (s*by)^2)``. Exact for rotations
    by multiples of 90 degrees.
    """
    bxy = np.asarray(bxy, dtype=np.float64)
    if frame is None:
        return bxy
    c, s = abs(math.cos(frame.angle)), abs(math.sin(frame.angle))
    bx, by = bxy[..., 0], bxy[..., 1]
    return np.stack([np.hypot(c * bx, s * by), np.hypot(s * bx, c * by)], axis=-1)
