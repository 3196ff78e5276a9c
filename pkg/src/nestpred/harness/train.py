"""Gradient-descent training loop."""

from __future__ import annotations

import csv
import math
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import model
from ..config import Config
from ..numerics import NumericError, ParamStore, RngStream, backward
from ..scenario import Scenario, load_scenarios

log = logging.getLogger(__name__)


class TrainingDiverged(NumericError):
    def __init__(self, step: int, reason: str):
        self.step = step
        super().__init__(f"training diverged at step {step}: {reason}")


class SGD:
    def __init__(self, lr: float, momentum: float = 0.0):
        self.lr, self.momentum = lr, momentum
        self.velocity: dict[str, np.ndarray] = {}

    def step(self, params: ParamStore, grads: dict[str, np.ndarray]) -> None:
        for name, g in grads.items():
            if self.momentum:
                v = self.velocity.get(name)
                v = g if v is None else self.momentum * v + g
                self.velocity[name] = v
                g = v
            params[name].data = params[name].data - self.lr * g


class Adam:
    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.t = 0

    def step(self, params: ParamStore, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for name, g in grads.items():
            m = self.beta1 * self.m.get(name, 0.0) + (1 - self.beta1) * g
            v = self.beta2 * self.v.get(name, 0.0) + (1 - self.beta2) * g * g
            self.m[name], self.v[name] = m, v
            params[name].data = params[name].data - self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def make_optimizer(cfg: Config):
    if cfg.optimizer == "adam":
        return Adam(cfg.lr)
    return SGD(cfg.lr, cfg.momentum)


def learning_rate(cfg: Config, step: int, steps: int) -> float:
    """Step size for update ``step`` of ``steps``; cosine decays to zero."""
    if cfg.lr_schedule == "constant" or steps <= 1:
        return cfg.lr
    return 0.5 * cfg.lr * (1.0 + math.cos(math.pi * step / steps))


def _clip(grads: dict[str, np.ndarray], max_norm: float) -> dict[str, np.ndarray]:
    if max_norm <= 0:
        return grads
    total = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if total <= max_norm:
        return grads
    scale = max_norm / total
    return {k: g * scale for k, g in grads.items()}


def batch_schedule(n: int, batch: int, seed: int):
    """Yield index arrays forever: the whole set if it fits, else shuffled epochs."""
    if batch >= n:
        idx = np.arange(n)
        while True:
            yield idx
    epoch = 0
    while True:
        order = RngStream(seed, f"batch/{epoch}").generator().permutation(n)
        for start in range(0, n - batch + 1, batch):
            yield order[start: start + batch]
        epoch += 1


@dataclass
class TrainResult:
    params: ParamStore
    losses: list[float] = field(default_factory=list)
    checkpoint: Path | None = None
    curve: Path | None = None


def train_model(cfg: Config, scenarios: list[Scenario] | model.Batch,
                params: ParamStore | None = None, steps: int | None = None,
                on_step=None) -> TrainResult:
    """Train in memory. Deterministic for a fixed ``cfg.seed``."""
    data = scenarios if isinstance(scenarios, model.Batch) else model.make_batch(scenarios, cfg)
    params = model.init_params(cfg) if params is None else params
    opt = make_optimizer(cfg)
    steps = cfg.steps if steps is None else steps
    schedule = batch_schedule(len(data), cfg.batch, cfg.seed)
    full = cfg.batch >= len(data)
    losses: list[float] = []
    for step in range(steps):
        batch = data if full else data.subset(next(schedule))
        label = f"step{step}" if cfg.resample_noise else "fixed"
        noise = model.draw_noise(batch, cfg, cfg.seed, label, train=True)
        try:
            loss = model.loss_fn(params, cfg, batch, noise)
            grads = backward(loss, params)
        except NumericError as exc:
            raise TrainingDiverged(step, str(exc)) from None
        value = loss.item()
        losses.append(value)
        opt.lr = learning_rate(cfg, step, steps)
        opt.step(params, _clip(grads, cfg.clip_norm))
        if on_step is not None:
            on_step(step, value, params)
    return TrainResult(params, losses)


def train(cfg: Config, data_path, out_path, log_every: int = 100) -> TrainResult:
    """Train on a scenario file; writes the final checkpoint, periodic
    ``<stem>.step<N>.json`` checkpoints and a ``<stem>.loss.csv`` curve."""
    out_path = Path(out_path)
    scenarios = load_scenarios(data_path)
    ckpt_hash, cfg_doc = cfg.hash(), cfg.to_dict()

    def on_step(step, value, params):
        if log_every and (step + 1) % log_every == 0:
            log.info("step %d loss %.5f", step + 1, value)
        if cfg.checkpoint_every and (step + 1) % cfg.checkpoint_every == 0:
            params.save(out_path.with_name(f"{out_path.stem}.step{step + 1}.json"), ckpt_hash, cfg_doc)

    result = train_model(cfg, scenarios, on_step=on_step)
    result.checkpoint = result.params.save(out_path, ckpt_hash, cfg_doc)
    result.curve = out_path.with_name(f"{out_path.stem}.loss.csv")
    with result.curve.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "loss"])
        for i, v in enumerate(result.losses):
            w.writerow([i, repr(v)])
    return result
