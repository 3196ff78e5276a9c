"""Interaction hypergraph formation.

Pipeline: vertex/prototype affinity C -> per-vertex threshold alpha and scene
connection probability beta from the neuromodulators -> thresholded
incidence -> Newman-Watts style rewiring that only ever adds memberships.

The incidence handed to pooling is binary in the forward pass. Its gradient
is taken from a surrogate: ``sigmoid((C - alpha) / tau_e)`` on thresholded
entries and ``beta`` on rewired ones (straight-through). ``relaxed=True``
uses the surrogate as the forward value too, which is the function whose
exact gradient the straight-through pass applies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import Config
from .numerics import ParamStore, RngStream, Tensor, masked_mean, mlp_forward, register_mlp
from .numerics.tensor import as_tensor, sigmoid, straight_through


@dataclass
class InteractionHypergraph:
    vertices: Tensor          # (B, N, d)
    mask: np.ndarray          # (B, N) 1 = real agent
    C: Tensor                 # (B, N, s) affinity in [0, 1]
    alpha: Tensor             # (B, N, 1)
    beta: Tensor              # (B, 1, 1)
    hard: np.ndarray          # (B, N, s) thresholded memberships
    E: np.ndarray             # (B, N, s) final binary incidence
    rewired: np.ndarray       # (B, N, s) memberships added by rewiring
    forced: np.ndarray        # (B, N, s) memberships added so no vertex is isolated
    soft_incidence: Tensor    # (B, N, s) sigmoid((C - alpha) / tau_e)
    incidence: Tensor         # what pooling consumes (straight-through or relaxed)


def register(registry: dict, cfg: Config) -> None:
    if not cfg.hypergraph:
        return
    registry["hyper.prototypes"] = ((cfg.s, cfg.d), cfg.d)
    if cfg.neuromodulator:
        register_mlp(registry, "hyper.neuro_alpha", [cfg.s, cfg.h_neuro, 1])
        if cfg.small_world:
            register_mlp(registry, "hyper.neuro_beta", [cfg.d, cfg.h_neuro, 1])


def compute_affinity(F_a, prototypes, mask: np.ndarray) -> Tensor:
    """``C[i, j] = sigmoid(<F_a[i], p_j> / sqrt(d))``; padded agents get zero rows."""
    F_a, prototypes = as_tensor(F_a), as_tensor(prototypes)
    d = F_a.shape[-1]
    logits = (F_a @ prototypes.swapaxes(-1, -2)) * (1.0 / math.sqrt(d))
    return sigmoid(logits) * np.asarray(mask, dtype=np.float64)[..., None]


def modulate_threshold(C, params: ParamStore, cfg: Config) -> Tensor:
    """Per-vertex threshold in (0, 1) from that vertex's affinity row."""
    return mlp_forward(params, "hyper.neuro_alpha", C, [cfg.s, cfg.h_neuro, 1], final="sigmoid")


def modulate_connection(F_a, mask: np.ndarray, params: ParamStore, cfg: Config) -> Tensor:
    """Scene-level connection probability from the masked mean agent feature.

    Returns shape (..., 1, 1) so it broadcasts over vertices and hyperedges.
    """
    pooled = masked_mean(F_a, np.asarray(mask, dtype=np.float64)[..., None], axis=-2)
    beta = mlp_forward(params, "hyper.neuro_beta", pooled, [cfg.d, cfg.h_neuro, 1], final="sigmoid")
    return beta.reshape(beta.shape[:-1] + (1, 1))


def binarize(C, alpha) -> np.ndarray:
    """1 where ``C >= alpha`` (alpha broadcast over hyperedges), else 0."""
    c = C.data if isinstance(C, Tensor) else np.asarray(C)
    a = alpha.data if isinstance(alpha, Tensor) else np.asarray(alpha)
    return (c >= a).astype(np.float64)


def rewire(hard: np.ndarray, beta, eta: np.ndarray | None, mask: np.ndarray | None = None) -> np.ndarray:
    """Add memberships to uncertain (zero) entries.

    With ``eta`` (uniform draws, same shape as ``hard``) an entry is added when
    ``eta <= beta``; with ``eta=None`` (deterministic evaluation) all uncertain
    entries are added iff ``beta >= 0.5``. Padded rows stay empty.
    """
    hard = np.asarray(hard, dtype=np.float64)
    b = beta.data if isinstance(beta, Tensor) else np.asarray(beta, dtype=np.float64)
    if eta is None:
        add = np.broadcast_to(b >= 0.5, hard.shape)
    else:
        add = eta <= b
    E = np.where(hard > 0, 1.0, add.astype(np.float64))
    if mask is not None:
        E = E * np.asarray(mask, dtype=np.float64)[..., None]
    return E


def draw_eta(seed: int, label: str, scenario_ids, agent_ids, s: int) -> np.ndarray:
    """Uniform draws (B, N, s) keyed by scenario and agent id, not by row position."""
    B, N = len(agent_ids), max(len(a) for a in agent_ids)
    eta = np.ones((B, N, s))
    root = RngStream(seed, label)
    for b, (sid, ids) in enumerate(zip(scenario_ids, agent_ids)):
        for i, aid in enumerate(ids):
            if aid is not None:
                eta[b, i] = root.child(sid, aid).uniform(s)
    return eta


def _force_membership(C: np.ndarray, hard: np.ndarray, mask: np.ndarray) -> np.ndarray:
    # vertices with no thresholded membership join their highest-affinity hyperedge
    empty = (hard.sum(axis=-1) == 0) & (mask > 0)
    forced = np.zeros_like(hard)
    b_idx, i_idx = np.nonzero(empty)
    forced[b_idx, i_idx, np.argmax(C[b_idx, i_idx], axis=-1)] = 1.0
    return forced


def form_hypergraph(F_a: Tensor, mask: np.ndarray, params: ParamStore, cfg: Config,
                    eta: np.ndarray | None, relaxed: bool = False) -> InteractionHypergraph:
    """Build the interaction hypergraph for a batch of scenes.

    ``eta`` are the rewiring draws; ``None`` selects the deterministic
    ``beta >= 0.5`` rule.
    """
    mask = np.asarray(mask, dtype=np.float64)
    m3 = mask[..., None]
    B = F_a.shape[0]
    C = compute_affinity(F_a, params["hyper.prototypes"], mask)
    if cfg.neuromodulator:
        alpha = modulate_threshold(C, params, cfg)
        beta = (modulate_connection(F_a, mask, params, cfg) if cfg.small_world
                else Tensor(np.zeros((B, 1, 1))))
    else:
        alpha = Tensor(np.full(mask.shape + (1,), cfg.alpha_fixed))
        beta = Tensor(np.full((B, 1, 1), cfg.beta_fixed if cfg.small_world else 0.0))
    hard = binarize(C, alpha) * m3
    if cfg.small_world:
        E = rewire(hard, beta, eta, mask)
    else:
        E = hard.copy()
    forced = _force_membership(C.data, hard, mask)
    E = np.maximum(E, forced)
    rewired = E * (1.0 - hard) * (1.0 - forced)

    soft = sigmoid((C - alpha) * (1.0 / cfg.tau_e)) * m3
    surrogate = soft * (1.0 - rewired) + beta * rewired
    if relaxed:
        incidence = surrogate
    else:
        incidence = straight_through(E, surrogate)
    return InteractionHypergraph(F_a, mask, C, alpha, beta, hard, E, rewired, forced, soft, incidence)
