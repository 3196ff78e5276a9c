"""Context fusion, the K-generator Laplace decoder and the training objective."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import Config
from .numerics import ParamStore, Tensor, masked_softmax, mlp_forward, register_mlp
from .numerics.tensor import as_tensor, concat, exp, log, log_softmax, softmax


@dataclass
class Prediction:
    """Batched prediction set: K modes of per-step Laplace parameters."""

    mu: Tensor        # (B, K, t_f, 2) metres
    b: Tensor         # (B, K, t_f, 2) metres, > 0
    logits: Tensor    # (B, K)
    probs: Tensor     # (B, K)

    def trajectories(self) -> np.ndarray:
        """(B, K, t_f, 4) array of [x, y, b_x, b_y]."""
        return np.concatenate([self.mu.data, self.b.data], axis=-1)


def register(registry: dict, cfg: Config) -> None:
    d, K = cfg.d, cfg.modes
    if cfg.context_fusion:
        for proj in ("q", "k", "v", "o"):
            registry[f"fuse.{proj}"] = ((d, d), d)
    register_mlp(registry, "predictor.generators", [2 * d, cfg.hidden_gen, cfg.t_f * 4], stack=K)
    register_mlp(registry, "predictor.prob", [2 * d, K])


def fuse_context(F_i, F_l, lane_mask: np.ndarray, params: ParamStore) -> Tensor:
    """Single-query attention of the interaction feature over lane features.

    ``F_i`` (B, d), ``F_l`` (B, L, d), ``lane_mask`` (B, L). The attended lane
    summary is projected and added to ``F_i``; a scene without lanes keeps
    ``F_c = F_i`` exactly.
    """
    F_i, F_l = as_tensor(F_i), as_tensor(F_l)
    lane_mask = np.asarray(lane_mask, dtype=np.float64)
    if F_l.shape[-2] == 0:
        return F_i
    d = F_i.shape[-1]
    q = (F_i @ params["fuse.q"]).reshape(F_i.shape[:-1] + (1, d))        # (B, 1, d)
    k = F_l @ params["fuse.k"]
    v = F_l @ params["fuse.v"]
    scores = (q @ k.swapaxes(-1, -2)) * (1.0 / math.sqrt(d))               # (B, 1, L)
    w = masked_softmax(scores, lane_mask[..., None, :])
    attended = (w @ v).reshape(F_i.shape)
    return F_i + attended @ params["fuse.o"]


def _positive(x: Tensor, how: str) -> Tensor:
    if how == "exp":
        return exp(x)
    # softplus, written stably as max(x, 0) + log(1 + exp(-|x|))
    return x.relu() + log(exp(-x.abs()) + 1.0)


def predict_modes(F_c, F_a0, params: ParamStore, cfg: Config) -> Prediction:
    """Decode K trajectories from ``[F_c, F_a0]`` (both (B, d)).

    Each generator emits per-step displacements (scaled by ``pos_scale`` and
    accumulated into positions) and log-scales for ``b``.
    """
    z = concat([F_c, F_a0], axis=-1)
    B, K, T = z.shape[0], cfg.modes, cfg.t_f
    zz = z.reshape(B, 1, 1, z.shape[-1])
    out = mlp_forward(params, "predictor.generators", zz, [2 * cfg.d, cfg.hidden_gen, T * 4])
    out = out.reshape(B, K, T, 4)
    steps = out[..., 0:2] * cfg.pos_scale
    mu = Tensor(np.tril(np.ones((T, T)))) @ steps
    b = _positive(out[..., 2:4], cfg.b_activation)
    logits = mlp_forward(params, "predictor.prob", z, [2 * cfg.d, K])
    return Prediction(mu, b, logits, softmax(logits))


def laplace_nll(mu, b, gt) -> Tensor:
    """Per-trajectory Laplace negative log-likelihood averaged over steps.

    ``sum_c [log(2 b_c) + |gt_c - mu_c| / b_c]`` per step, mean over the
    step axis (-2).
    """
    mu, b = as_tensor(mu), as_tensor(b)
    per = log(b * 2.0) + (as_tensor(gt) - mu).abs() / b
    return per.sum(axis=-1).mean(axis=-1)


def displacement(mu: np.ndarray, gt: np.ndarray) -> np.ndarray:
    """Mean Euclidean displacement over steps, broadcasting ``gt`` over modes."""
    return np.linalg.norm(mu - gt, axis=-1).mean(axis=-1)


def training_loss(pred: Prediction, gt: np.ndarray, c_cls: float) -> tuple[Tensor, np.ndarray]:
    """Winner-takes-all Laplace NLL plus mode cross-entropy, averaged over the batch.

    The winner is the mode with the smallest mean displacement, so the
    scales cannot influence which mode is trained. Returns (loss, best index).
    """
    gt = np.asarray(gt, dtype=np.float64)
    B = gt.shape[0]
    best = np.argmin(displacement(pred.mu.data, gt[:, None]), axis=1)
    rows = np.arange(B)
    nll = laplace_nll(pred.mu[rows, best], pred.b[rows, best], gt)
    ce = -log_softmax(pred.logits)[rows, best]
    return (nll + ce * c_cls).mean(), best
