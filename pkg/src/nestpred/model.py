"""End-to-end model: batching, parameter registry and the forward pass."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import encoder, hyperform, hyperpool, predictor
from .config import Config
from .numerics import ParamStore, RngStream, Tensor, init_store, sample_gumbel
from .scenario import FrameTransform, Scenario, ScenarioError, normalize_frame


@dataclass
class Batch:
    scenario_ids: list[str]
    agent_ids: list[list[str | None]]     # row 0 = target, None = padding
    hist: np.ndarray                      # (B, N, t_h, 6)
    mask: np.ndarray                      # (B, N)
    lanes: np.ndarray                     # (B, L, 2 * lane_points)
    lane_mask: np.ndarray                 # (B, L)
    gt: np.ndarray | None                 # (B, t_f, 2) target future, normalised frame
    frames: list[FrameTransform | None] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.scenario_ids)

    def subset(self, idx) -> "Batch":
        idx = np.asarray(idx)
        return Batch(
            [self.scenario_ids[i] for i in idx], [self.agent_ids[i] for i in idx],
            self.hist[idx], self.mask[idx], self.lanes[idx], self.lane_mask[idx],
            None if self.gt is None else self.gt[idx], [self.frames[i] for i in idx])


def make_batch(scenarios: list[Scenario], cfg: Config, normalize: bool = True,
               require_future: bool = True) -> Batch:
    """Stack scenarios into padded arrays (fixed max agent / lane-segment count)."""
    if not scenarios:
        raise ScenarioError("cannot batch zero scenarios")
    if normalize:
        scenarios = [normalize_frame(s) for s in scenarios]
    B = len(scenarios)
    N = max(s.n + 1 for s in scenarios)
    segs = [encoder.lane_segments(s.lanes, cfg) if cfg.context_fusion
            else np.zeros((0, 2 * cfg.lane_points)) for s in scenarios]
    L = max(len(x) for x in segs)
    hist = np.zeros((B, N, cfg.t_h, 6))
    mask = np.zeros((B, N))
    lanes = np.zeros((B, L, 2 * cfg.lane_points))
    lane_mask = np.zeros((B, L))
    gt = np.zeros((B, cfg.t_f, 2))
    have_gt = True
    agent_ids = []
    for b, s in enumerate(scenarios):
        ids = []
        for i, a in enumerate(s.agents):
            hist[b, i] = a.history(cfg.t_h)
            mask[b, i] = 1.0
            ids.append(a.agent_id)
        agent_ids.append(ids + [None] * (N - len(ids)))
        lanes[b, : len(segs[b])] = segs[b]
        lane_mask[b, : len(segs[b])] = 1.0
        try:
            gt[b] = s.target.future(cfg.t_f)[:, 0:2]
        except ScenarioError:
            if require_future:
                raise
            have_gt = False
    return Batch([s.scenario_id for s in scenarios], agent_ids, hist, mask, lanes, lane_mask,
                 gt if have_gt else None, [s.frame for s in scenarios])


def registry(cfg: Config) -> dict[str, tuple]:
    """Every parameter name -> (shape, fan_in) for the active configuration."""
    reg: dict[str, tuple] = {}
    encoder.register(reg, cfg)
    hyperform.register(reg, cfg)
    hyperpool.register(reg, cfg)
    predictor.register(reg, cfg)
    return reg


def init_params(cfg: Config, seed: int | None = None) -> ParamStore:
    return init_store(registry(cfg), cfg.seed if seed is None else seed)


@dataclass
class Noise:
    """Random draws for one forward pass: rewiring uniforms and intention Gumbel noise."""

    eta: np.ndarray | None      # (B, N, s)
    gumbel: np.ndarray | None   # (B, H, s, K)


def draw_noise(batch: Batch, cfg: Config, seed: int, pass_label: str, train: bool) -> Noise:
    """Training draws ``eta`` and Gumbel noise; evaluation uses deterministic rules
    unless ``eval_rewire='sample'`` (Gumbel noise is always off in evaluation)."""
    if not cfg.hypergraph:
        return Noise(None, None)
    sample_eta = cfg.small_world and (train or cfg.eval_rewire == "sample")
    eta = (hyperform.draw_eta(seed, f"rewire/{pass_label}", batch.scenario_ids, batch.agent_ids, cfg.s)
           if sample_eta else None)
    gumbel = None
    if train:
        root = RngStream(seed, f"gumbel/{pass_label}")
        gumbel = np.stack([sample_gumbel((cfg.H, cfg.s, cfg.modes), root.child(sid))
                           for sid in batch.scenario_ids])
    return Noise(eta, gumbel)


@dataclass
class ForwardResult:
    pred: predictor.Prediction
    F_a: Tensor
    F_i: Tensor
    F_c: Tensor
    hypergraph: hyperform.InteractionHypergraph | None
    trace: hyperpool.PoolTrace | None


def forward(params: ParamStore, cfg: Config, batch: Batch, noise: Noise,
            relaxed: bool = False) -> ForwardResult:
    mask = batch.mask
    F_a = encoder.encode_agents(params, cfg, batch.hist) * mask[..., None]
    hg = trace = None
    if cfg.hypergraph:
        hg = hyperform.form_hypergraph(F_a, mask, params, cfg, noise.eta, relaxed=relaxed)
        F_i, trace = hyperpool.pool(F_a, hg.incidence, mask, params, cfg, noise.gumbel)
    else:
        F_i = hyperpool.pool_graph(F_a, mask, params, cfg)
    if cfg.context_fusion:
        F_l = encoder.encode_lane_segments(params, cfg, batch.lanes)
        F_c = predictor.fuse_context(F_i, F_l, batch.lane_mask, params)
    else:
        F_c = F_i
    pred = predictor.predict_modes(F_c, F_a[:, 0], params, cfg)
    return ForwardResult(pred, F_a, F_i, F_c, hg, trace)


def loss_fn(params: ParamStore, cfg: Config, batch: Batch, noise: Noise,
            relaxed: bool = False) -> Tensor:
    out = forward(params, cfg, batch, noise, relaxed)
    loss, _ = predictor.training_loss(out.pred, batch.gt, cfg.c_cls)
    return loss
