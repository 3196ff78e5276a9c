"""Synthetic traffic scenes with known interaction structure.

All kinds integrate piecewise-constant accelerations exactly,

    p[t+1] = p[t] + v[t] dt + a[t] dt^2 / 2,    v[t+1] = v[t] + a[t] dt,

so ``|x[t+1] - x[t] - vx[t] dt| <= a_max dt^2 / 2`` holds whenever
``|a| <= a_max``.
"""

from __future__ import annotations

import math

import numpy as np

from ..numerics.rng import RngStream
from .types import AgentTrack, LanePolyline, Scenario

KINDS = ("chain", "intersection", "merge", "uturn")

COMMON_DEFAULTS = {"t_h": 8, "t_f": 12, "dt": 0.5, "a_max": 4.0, "randomize_pose": True}

KIND_DEFAULTS = {
    "chain": {
        "n_vehicles": 5, "brake_step": 3, "delay": 2, "brake_steps": 5,
        "speed": (10.0, 15.0), "gap": (12.0, 20.0), "decel": (2.0, 3.5),
    },
    "intersection": {"n_crossing": 2, "speed": (8.0, 12.0), "cross_speed": (7.0, 11.0)},
    "merge": {
        "n_main": 4, "n_merging": 1, "merge_step": (4, 10), "merge_steps": 4,
        "lane_width": 3.5, "speed": (12.0, 16.0), "gap": (14.0, 20.0), "yield_decel": 1.5,
    },
    "uturn": {"speed": 5.0, "radius": 7.0, "uturn_fraction": 0.5, "history_jitter": 0.0},
}


def _pick(rng: np.random.Generator, spec):
    if isinstance(spec, tuple):
        lo, hi = spec
        if isinstance(lo, int) and isinstance(hi, int):
            return int(rng.integers(lo, hi + 1))
        return float(rng.uniform(lo, hi))
    return spec


def integrate(acc: np.ndarray, p0, v0, dt: float) -> np.ndarray:
    """Exact integration of per-step accelerations; returns (T, 6) x,y,vx,vy,ax,ay."""
    T = len(acc)
    out = np.zeros((T, 6))
    p, v = np.asarray(p0, float).copy(), np.asarray(v0, float).copy()
    for i in range(T):
        out[i, 0:2], out[i, 2:4], out[i, 4:6] = p, v, acc[i]
        p = p + v * dt + 0.5 * acc[i] * dt * dt
        v = v + acc[i] * dt
    return out


def _longitudinal(profile: np.ndarray, speed: float, dt: float) -> np.ndarray:
    # clip decelerations that would reverse the vehicle
    acc = np.zeros((len(profile), 2))
    v = speed
    for i, a in enumerate(profile):
        a = max(a, -v / dt)
        acc[i, 0] = a
        v += a * dt
    return acc


class _Builder:
    def __init__(self, p: dict, rng: np.random.Generator):
        self.p, self.rng = p, rng
        self.T = p["t_h"] + p["t_f"]
        self.times = (np.arange(self.T) - (p["t_h"] - 1)) * p["dt"]
        self.tracks: list[tuple[str, str, np.ndarray]] = []
        self.lanes: list[tuple[str, np.ndarray]] = []

    def add(self, agent_id: str, role: str, kin: np.ndarray) -> None:
        self.tracks.append((agent_id, role, kin))

    def build(self, sid: str) -> Scenario:
        if self.p["randomize_pose"]:
            phi = self.rng.uniform(0, 2 * math.pi)
            shift = self.rng.uniform(-50, 50, size=2)
        else:
            phi, shift = 0.0, np.zeros(2)
        c, s = math.cos(phi), math.sin(phi)
        R = np.array([[c, -s], [s, c]])
        tracks = []
        for agent_id, role, kin in self.tracks:
            states = np.column_stack([
                self.times, kin[:, 0:2] @ R.T + shift, kin[:, 2:4] @ R.T, kin[:, 4:6] @ R.T])
            if role != "target":
                states = states[: self.p["t_h"]]
            tracks.append(AgentTrack(agent_id, role, states))
        lanes = [LanePolyline(lid, pts @ R.T + shift) for lid, pts in self.lanes]
        target = next(t for t in tracks if t.role == "target")
        others = [t for t in tracks if t.role != "target"]
        return Scenario(sid, float(self.p["dt"]), target, others, lanes)


def _chain(b: _Builder) -> None:
    p, rng, dt = b.p, b.rng, b.p["dt"]
    n = p["n_vehicles"]
    speed, gap, decel = _pick(rng, p["speed"]), _pick(rng, p["gap"]), _pick(rng, p["decel"])
    decel = min(decel, p["a_max"])
    lead = np.zeros(b.T)
    lead[p["brake_step"]: p["brake_step"] + p["brake_steps"]] = -decel
    # present position of the last vehicle (the target) is the scene origin
    x_last = -(p["t_h"] - 1) * dt * speed
    for k in range(n):
        profile = np.zeros(b.T)
        onset = p["brake_step"] + k * p["delay"]
        if onset < b.T:
            span = lead[p["brake_step"]: p["brake_step"] + b.T - onset]
            profile[onset: onset + len(span)] = span
        acc = _longitudinal(profile, speed, dt)
        x0 = x_last + (n - 1 - k) * gap
        role = "target" if k == n - 1 else "surrounding"
        b.add(f"veh{k}", role, integrate(acc, (x0, 0.0), (speed, 0.0), dt))
    b.lanes.append(("lane0", np.array([[-100.0, 0.0], [100.0, 0.0]])))


def _intersection(b: _Builder) -> None:
    p, rng, dt = b.p, b.rng, b.p["dt"]
    speed = _pick(rng, p["speed"])
    dist = rng.uniform(25.0, 40.0)  # present distance of the target to the crossing
    t_arrive = dist / speed
    conflict = False
    for k in range(p["n_crossing"]):
        cs = _pick(rng, p["cross_speed"])
        t_cross = rng.uniform(0.5, 6.0)
        side = 1.0 if k % 2 == 0 else -1.0
        y_now = -side * cs * t_cross
        y0 = y_now - side * cs * (p["t_h"] - 1) * dt
        acc = np.zeros((b.T, 2))
        b.add(f"cross{k}", "surrounding", integrate(acc, (dist + 2.0 * side, y0), (0.0, side * cs), dt))
        conflict |= abs(t_cross - t_arrive) < 1.5
    prof = np.zeros(b.T)
    if conflict:
        # yield: brake to stop 5 m before the crossing, starting at the present step
        a = min(speed ** 2 / (2 * max(dist - 5.0, 1.0)), p["a_max"])
        prof[p["t_h"] - 1:] = -a
    acc = _longitudinal(prof, speed, dt)
    x0 = -(p["t_h"] - 1) * dt * speed
    b.add("ego", "target", integrate(acc, (x0, 0.0), (speed, 0.0), dt))
    lead_acc = np.zeros((b.T, 2))
    b.add("lead", "surrounding",
          integrate(lead_acc, (x0 + rng.uniform(15, 25), 0.0), (speed, 0.0), dt))
    b.lanes.append(("road_a", np.array([[-60.0, 0.0], [dist + 60.0, 0.0]])))
    b.lanes.append(("road_b", np.array([[dist, -60.0], [dist, 60.0]])))


def _merge(b: _Builder) -> None:
    p, rng, dt = b.p, b.rng, b.p["dt"]
    speed, gap = _pick(rng, p["speed"]), _pick(rng, p["gap"])
    n_main, n_merge = p["n_main"], p["n_merging"]
    m = p["merge_steps"]
    a_lat = min(p["lane_width"] / (dt * dt * m * m), p["a_max"])
    # main-lane leader drifts gently; followers copy it with a 2-step delay
    lead = np.zeros(b.T)
    lead[2:6] = rng.uniform(-0.8, 0.8)
    x_tail = -(p["t_h"] - 1) * dt * speed
    target_k = n_main - 1
    merge_onsets = []
    for j in range(n_merge):
        onset = _pick(rng, p["merge_step"])
        merge_onsets.append(onset)
        lat = np.zeros((b.T, 2))
        lat[onset: onset + m, 1] = a_lat
        lat[onset + m: onset + 2 * m, 1] = -a_lat
        x0 = x_tail + (target_k - 0.5 - j) * gap
        b.add(f"ramp{j}", "surrounding",
              integrate(lat, (x0, -p["lane_width"]), (speed, 0.0), dt))
    for k in range(n_main):
        profile = np.zeros(b.T)
        shift = 2 * k
        profile[shift:] = lead[: b.T - shift]
        if k == target_k:
            for onset in merge_onsets:
                profile[onset: onset + 2 * m] -= min(p["yield_decel"], p["a_max"] - 1.0)
        acc = _longitudinal(profile, speed, dt)
        x0 = x_tail + (n_main - 1 - k) * gap
        role = "target" if k == target_k else "surrounding"
        b.add(f"main{k}", role, integrate(acc, (x0, 0.0), (speed, 0.0), dt))
    b.lanes.append(("main", np.array([[-100.0, 0.0], [100.0, 0.0]])))
    if n_merge:
        b.lanes.append(("ramp", np.array([[-100.0, -p["lane_width"]], [20.0, -p["lane_width"]]])))


def _uturn_future(p: dict, t_f: int, dt: float, speed: float) -> np.ndarray:
    acc = np.zeros((t_f, 2))
    v = np.array([speed, 0.0])
    heading_change = 0.0
    for i in range(t_f):
        if heading_change >= math.pi:
            break
        vn = np.hypot(*v)
        a = min(vn * vn / p["radius"], p["a_max"])
        acc[i] = a * np.array([-v[1], v[0]]) / vn  # left normal
        v_next = v + acc[i] * dt
        heading_change += abs(math.atan2(v[0] * v_next[1] - v[1] * v_next[0], v @ v_next))
        v = v_next
    return acc


def _uturn(b: _Builder, do_uturn: bool) -> None:
    p, dt = b.p, b.p["dt"]
    speed = p["speed"] + (b.rng.uniform(-1, 1) * p["history_jitter"] if p["history_jitter"] else 0.0)
    t_h, t_f = p["t_h"], p["t_f"]
    acc = np.zeros((b.T, 2))
    if do_uturn:
        # the turn starts after the present step so histories stay identical
        acc[t_h: t_h + t_f] = _uturn_future(p, t_f, dt, speed)
    x0 = -(t_h - 1) * dt * speed
    b.add("ego", "target", integrate(acc, (x0, 0.0), (speed, 0.0), dt))
    still = np.zeros((b.T, 2))
    b.add("parked", "surrounding", integrate(still, (25.0, -3.0), (0.0, 0.0), dt))
    b.add("oncoming", "surrounding",
          integrate(still, (40.0 - (t_h - 1) * dt * -8.0, 3.5), (-8.0, 0.0), dt))
    b.lanes.append(("forward", np.array([[-60.0, 0.0], [80.0, 0.0]])))
    b.lanes.append(("reverse", np.array([[80.0, 3.5], [-60.0, 3.5]])))


def generate_synthetic(kind: str, count: int, seed: int, params: dict | None = None) -> list[Scenario]:
    """Generate ``count`` scenarios of ``kind``; each scene has its own derived seed.

    ``chain``: a platoon whose leader brakes at ``brake_step``; vehicle k
    repeats the leader's acceleration profile ``k * delay`` steps later. The
    last vehicle is the target.
    ``uturn``: every scene shares one history; a ``uturn_fraction`` of them
    turn around in the future, the rest continue straight.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown scenario kind '{kind}', expected one of {KINDS}")
    if count <= 0:
        raise ValueError("count must be positive")
    p = {**COMMON_DEFAULTS, **KIND_DEFAULTS[kind], **(params or {})}
    unknown = set(p) - set(COMMON_DEFAULTS) - set(KIND_DEFAULTS[kind])
    if unknown:
        raise ValueError(f"unknown parameters for '{kind}': {sorted(unknown)}")
    root = RngStream(seed, f"synthetic/{kind}")
    n_uturn = int(round(count * p.get("uturn_fraction", 0.0)))
    uturn_flags = root.child("assign").generator().permutation(
        np.arange(count) < n_uturn) if kind == "uturn" else None
    out = []
    for i in range(count):
        b = _Builder(p, root.child(i).generator())
        if kind == "chain":
            _chain(b)
        elif kind == "intersection":
            _intersection(b)
        elif kind == "merge":
            _merge(b)
        else:
            _uturn(b, bool(uturn_flags[i]))
        out.append(b.build(f"{kind}-{seed}-{i:05d}"))
    return out
