"""Hypergraph pooling: vertex-to-hyperedge group features, hyperedge-to-vertex
updates, ``H`` rounds with shared weights, then a masked mean over vertices.

All sums over memberships are written as products with the incidence
tensor, so a binary incidence reproduces the set-based definitions exactly
while a soft one stays differentiable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import Config
from .numerics import ParamStore, Tensor, masked_mean, masked_softmax, mlp_forward, register_mlp
from .numerics.tensor import as_tensor, concat, softmax


@dataclass
class PoolTrace:
    """Per-iteration intermediates, kept for inspection and tests."""

    intentions: list[Tensor] = field(default_factory=list)   # (B, s, K) each
    willingness: list[Tensor] = field(default_factory=list)
    group_features: list[Tensor] = field(default_factory=list)
    active: list[np.ndarray] = field(default_factory=list)    # (B, s) non-empty hyperedges


def register(registry: dict, cfg: Config) -> None:
    d, K = cfg.d, cfg.modes
    if cfg.hypergraph:
        register_mlp(registry, "pool.lambda", [d, d, 1])
        register_mlp(registry, "pool.personality", [d, d, d])
        register_mlp(registry, "pool.intention", [d, d, K])
        register_mlp(registry, "pool.willingness", [d, d, K])
    else:
        register_mlp(registry, "pool.gnn.message", [d, d, d])
    register_mlp(registry, "pool.vertex", [2 * d, d, d])


def aggregate_group(vertices, incidence, params: ParamStore, cfg: Config) -> tuple[Tensor, np.ndarray]:
    """Weighted member sum per hyperedge, (B, N, d) x (B, N, s) -> (B, s, d).

    Weights are a softmax of a shared scorer over each hyperedge's members;
    an empty hyperedge yields a zero vector and is reported inactive.
    """
    vertices, incidence = as_tensor(vertices), as_tensor(incidence)
    scores = mlp_forward(params, "pool.lambda", vertices, [cfg.d, cfg.d, 1])   # (B, N, 1)
    lam = masked_softmax(scores, incidence, axis=-2)                          # (B, N, s)
    active = incidence.data.sum(axis=-2) > 0
    return lam.swapaxes(-1, -2) @ vertices, active


def encode_personality(I_a, params: ParamStore, cfg: Config) -> Tensor:
    return mlp_forward(params, "pool.personality", I_a, [cfg.d, cfg.d, cfg.d])


def encode_intentions(I_a, params: ParamStore, cfg: Config, gumbel: np.ndarray | None) -> Tensor:
    logits = mlp_forward(params, "pool.intention", I_a, [cfg.d, cfg.d, cfg.modes])
    if gumbel is not None:
        logits = logits + gumbel
    return softmax(logits, tau=cfg.tau)


def encode_willingness(I_a, params: ParamStore, cfg: Config) -> Tensor:
    return mlp_forward(params, "pool.willingness", I_a, [cfg.d, cfg.d, cfg.modes], final="sigmoid")


def group_feature(I_p, I_i, I_w) -> Tensor:
    """Personality scaled by the intention-weighted willingness."""
    return as_tensor(I_p) * (as_tensor(I_i) * I_w).sum(axis=-1, keepdims=True)


def scatter_to_vertices(vertices, incidence, F_g, params: ParamStore, cfg: Config,
                        mask: np.ndarray) -> Tensor:
    """``V_i <- M_v([V_i, sum_j E_ij F_g_j])``; padded rows are zeroed."""
    agg = as_tensor(incidence) @ F_g
    out = mlp_forward(params, "pool.vertex", concat([vertices, agg], axis=-1), [2 * cfg.d, cfg.d, cfg.d])
    return out * np.asarray(mask, dtype=np.float64)[..., None]


def pool(vertices, incidence, mask: np.ndarray, params: ParamStore, cfg: Config,
         gumbel: np.ndarray | None = None) -> tuple[Tensor, PoolTrace]:
    """Run ``cfg.H`` pooling rounds and return the interaction feature (B, d).

    ``gumbel`` holds per-round intention noise (B, H, s, K); ``None`` means
    deterministic (noise-free) intentions.
    """
    mask = np.asarray(mask, dtype=np.float64)
    V = as_tensor(vertices)
    trace = PoolTrace()
    for h in range(cfg.H):
        I_a, active = aggregate_group(V, incidence, params, cfg)
        I_p = encode_personality(I_a, params, cfg)
        I_i = encode_intentions(I_a, params, cfg, None if gumbel is None else gumbel[:, h])
        I_w = encode_willingness(I_a, params, cfg)
        F_g = group_feature(I_p, I_i, I_w)
        V = scatter_to_vertices(V, incidence, F_g, params, cfg, mask)
        trace.intentions.append(I_i)
        trace.willingness.append(I_w)
        trace.group_features.append(F_g)
        trace.active.append(active)
    return masked_mean(V, mask[..., None], axis=-2), trace


def complete_graph(mask: np.ndarray) -> np.ndarray:
    """Row-normalised adjacency of the complete graph (no self loops) over real agents."""
    mask = np.asarray(mask, dtype=np.float64)
    adj = mask[..., :, None] * mask[..., None, :]
    n = adj.shape[-1]
    adj = adj * (1.0 - np.eye(n))
    deg = np.maximum(adj.sum(axis=-1, keepdims=True), 1.0)
    return adj / deg


def pool_graph(vertices, mask: np.ndarray, params: ParamStore, cfg: Config) -> Tensor:
    """Pairwise message passing over the complete agent graph (hypergraph ablation)."""
    mask = np.asarray(mask, dtype=np.float64)
    adj = complete_graph(mask)
    V = as_tensor(vertices)
    for _ in range(cfg.H):
        msg = mlp_forward(params, "pool.gnn.message", V, [cfg.d, cfg.d, cfg.d])
        agg = Tensor(adj) @ msg
        V = mlp_forward(params, "pool.vertex", concat([V, agg], axis=-1), [2 * cfg.d, cfg.d, cfg.d])
        V = V * mask[..., None]
    return masked_mean(V, mask[..., None], axis=-2)
