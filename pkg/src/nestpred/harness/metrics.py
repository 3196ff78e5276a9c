"""Displacement metrics over ranked prediction modes."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np


def rank_modes(probs) -> np.ndarray:
    """Mode indices by descending probability (ties keep generator order)."""
    return np.argsort(-np.asarray(probs, dtype=np.float64), kind="stable")


def _top(traj, probs, k: int) -> np.ndarray:
    traj = np.asarray(traj, dtype=np.float64)
    K = traj.shape[0]
    if not 1 <= k <= K:
        raise ValueError(f"k={k} outside 1..{K}")
    return traj[rank_modes(probs)[:k], :, 0:2]


def min_ade(traj, probs, gt, k: int) -> float:
    """Smallest mean Euclidean displacement among the ``k`` most probable modes."""
    top = _top(traj, probs, k)
    return float(np.linalg.norm(top - np.asarray(gt)[None, :, 0:2], axis=-1).mean(axis=-1).min())


def min_fde(traj, probs, gt, k: int) -> float:
    top = _top(traj, probs, k)
    return float(np.linalg.norm(top[:, -1] - np.asarray(gt)[-1, 0:2], axis=-1).min())


def horizon_step(horizon_s: float, dt: float, t_f: int) -> int:
    """0-based index of the future step whose time ``(i + 1) * dt`` is closest to ``horizon_s``."""
    if not 0 < horizon_s <= t_f * dt + 1e-9:
        raise ValueError(f"horizon {horizon_s}s outside (0, {t_f * dt}]s")
    times = (np.arange(t_f) + 1) * dt
    return int(np.argmin(np.abs(times - horizon_s)))


def rmse_horizon(trajs, probs, gts, horizon_s: float, dt: float) -> float:
    """RMSE of the most probable mode at ``horizon_s`` over a dataset.

    ``trajs`` (M, K, t_f, >=2), ``probs`` (M, K), ``gts`` (M, t_f, 2).
    """
    trajs = np.asarray(trajs, dtype=np.float64)
    gts = np.asarray(gts, dtype=np.float64)
    i = horizon_step(horizon_s, dt, trajs.shape[2])
    best = np.array([rank_modes(p)[0] for p in probs])
    err = trajs[np.arange(len(trajs)), best, i, 0:2] - gts[:, i, 0:2]
    return float(math.sqrt(np.mean(np.sum(err * err, axis=-1))))


@dataclass
class MetricsReport:
    min_ade: dict[int, float]
    min_fde_1: float
    rmse: dict[float, float]
    inference_ms_per_12_agents: float
    n_scenarios: int
    timing_protocol: str = ""
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        doc = asdict(self)
        doc["min_ade"] = {f"minADE_{k}": v for k, v in self.min_ade.items()}
        doc["rmse"] = {f"{h:g}s": v for h, v in self.rmse.items()}
        return doc


def dataset_metrics(trajs, probs, gts, dt: float) -> dict:
    """minADE_k for every k, minFDE_1 and RMSE at each whole second of the horizon."""
    trajs = np.asarray(trajs, dtype=np.float64)
    M, K, t_f = trajs.shape[:3]
    ade = {k: float(np.mean([min_ade(trajs[m], probs[m], gts[m], k) for m in range(M)]))
           for k in range(1, K + 1)}
    fde = float(np.mean([min_fde(trajs[m], probs[m], gts[m], 1) for m in range(M)]))
    horizons = [float(h) for h in range(1, int(math.floor(t_f * dt + 1e-9)) + 1)]
    rmse = {h: rmse_horizon(trajs, probs, gts, h, dt) for h in horizons}
    return {"min_ade": ade, "min_fde_1": fde, "rmse": rmse}
