"""Agent-history and lane encoders.

Agents: per-step linear embedding, sinusoidal positions, two blocks of
single-head temporal self-attention with a feed-forward layer, then a mean
over time. Attention never crosses agents, so each feature row depends only
on that agent's own history.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from .config import Config
from .numerics import DimensionError, ParamStore, Tensor, attention, mlp_forward, register_mlp
from .numerics.nn import sinusoidal_encoding

# x, y, vx, vy, ax, ay
FEATURE_SCALE = np.array([10.0, 10.0, 10.0, 10.0, 2.0, 2.0])
LANE_SCALE = 10.0
N_BLOCKS = 2


def register(registry: dict, cfg: Config) -> None:
    d = cfg.d
    register_mlp(registry, "encoder.agent.embed", [6, d])
    for blk in range(N_BLOCKS):
        for proj in ("q", "k", "v", "o"):
            registry[f"encoder.agent.block{blk}.{proj}"] = ((d, d), d)
        register_mlp(registry, f"encoder.agent.block{blk}.ff", [d, 2 * d, d])
    if cfg.context_fusion:
        register_mlp(registry, "encoder.lane.mlp", [2 * cfg.lane_points, d, d])


def encode_agents(params: ParamStore, cfg: Config, hist: np.ndarray) -> Tensor:
    """Encode histories of shape (..., t_h, 6) into features (..., d)."""
    hist = np.asarray(hist, dtype=np.float64)
    if hist.ndim < 2 or hist.shape[-2:] != (cfg.t_h, 6):
        raise DimensionError(f"agent histories must end in ({cfg.t_h}, 6), got {hist.shape}")
    x = mlp_forward(params, "encoder.agent.embed", hist / FEATURE_SCALE, [6, cfg.d])
    x = x + sinusoidal_encoding(cfg.t_h, cfg.d)
    for blk in range(N_BLOCKS):
        pre = f"encoder.agent.block{blk}"
        q, k, v = (x @ params[f"{pre}.{p}"] for p in ("q", "k", "v"))
        x = x + attention(q, k, v) @ params[f"{pre}.o"]
        x = x + mlp_forward(params, f"{pre}.ff", x, [cfg.d, 2 * cfg.d, cfg.d])
    return x.mean(axis=-2)


def resample_lane(points, segment_length: float, n_points: int) -> np.ndarray:
    """Cut a polyline into arc-length segments of ``segment_length`` (the last
    may be shorter) and resample each to ``n_points`` evenly spaced points.

    Returns (S, n_points, 2); polylines without two distinct points give S=0.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if len(pts) >= 2:
        keep = np.concatenate([[True], np.any(np.diff(pts, axis=0) != 0, axis=1)])
        pts = pts[keep]
    if len(pts) < 2:
        return np.zeros((0, n_points, 2))
    arc = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(pts, axis=0).T))])
    total = arc[-1]
    n_seg = max(1, math.ceil(total / segment_length - 1e-9))
    out = np.empty((n_seg, n_points, 2))
    for k in range(n_seg):
        s = np.linspace(k * segment_length, min((k + 1) * segment_length, total), n_points)
        out[k, :, 0] = np.interp(s, arc, pts[:, 0])
        out[k, :, 1] = np.interp(s, arc, pts[:, 1])
    return out


def lane_segments(lanes, cfg: Config) -> np.ndarray:
    """Flattened lane segments (L, 2 * lane_points) for a list of LanePolylines."""
    segs = []
    for lane in lanes:
        pts = np.asarray(lane.points, dtype=np.float64)
        r = resample_lane(pts, cfg.lane_segment_length, cfg.lane_points)
        if len(r) == 0:
            warnings.warn(f"lane {lane.lane_id}: degenerate polyline skipped", stacklevel=2)
            continue
        segs.append(r.reshape(len(r), -1))
    if not segs:
        return np.zeros((0, 2 * cfg.lane_points))
    return np.concatenate(segs, axis=0)


def encode_lane_segments(params: ParamStore, cfg: Config, segments: np.ndarray) -> Tensor:
    """(..., L, 2 * lane_points) normalised-frame coordinates -> (..., L, d)."""
    segments = np.asarray(segments, dtype=np.float64)
    return mlp_forward(params, "encoder.lane.mlp", segments / LANE_SCALE,
                       [2 * cfg.lane_points, cfg.d, cfg.d])


def encode_lanes(params: ParamStore, cfg: Config, lanes) -> Tensor:
    return encode_lane_segments(params, cfg, lane_segments(lanes, cfg))
