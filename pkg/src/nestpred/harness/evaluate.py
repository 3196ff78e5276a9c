"""Evaluation, prediction export and hypergraph inspection."""

from __future__ import annotations

import json
import time
from pathlib import Path

import numpy as np

from .. import model
from ..config import Config
from ..numerics import ParamStore
from ..numerics.params import CheckpointError, read_checkpoint
from ..scenario import Scenario, denormalize_scales, denormalize_xy, load_scenarios
from .metrics import MetricsReport, dataset_metrics

TIMING_PROTOCOL = (
    "wall-clock time of one single-scenario evaluation forward pass (one target), "
    "averaged over the dataset after one warm-up pass, multiplied by 12 "
    "(one pass per predicted agent); CPU, float64"
)


def load_checkpoint(path, cfg: Config | None = None) -> tuple[ParamStore, Config]:
    """Load parameters and their embedded config; ``cfg`` must match its hash if given."""
    doc = read_checkpoint(path)
    if not isinstance(doc, dict) or "config" not in doc:
        raise CheckpointError(f"{path}: checkpoint carries no config")
    embedded = Config.from_dict(doc["config"])
    if cfg is not None and cfg.hash() != doc.get("config_hash"):
        raise CheckpointError(
            f"config hash mismatch: checkpoint {doc.get('config_hash')} vs config {cfg.hash()}")
    params = ParamStore.from_json(doc, expected_hash=embedded.hash())
    return params, cfg or embedded


def predict(params: ParamStore, cfg: Config, batch: model.Batch) -> model.ForwardResult:
    """Evaluation-mode forward pass (no Gumbel noise, configured rewiring rule)."""
    noise = model.draw_noise(batch, cfg, cfg.seed, "eval", train=False)
    return model.forward(params, cfg, batch, noise)


def time_inference(params: ParamStore, cfg: Config, batch: model.Batch) -> float:
    """Mean per-scenario inference time in ms, scaled to 12 predicted agents."""
    predict(params, cfg, batch.subset([0]))
    times = []
    for i in range(len(batch)):
        one = batch.subset([i])
        t0 = time.perf_counter()
        predict(params, cfg, one)
        times.append(time.perf_counter() - t0)
    return 1000.0 * float(np.mean(times)) * 12


def evaluate_model(params: ParamStore, cfg: Config, scenarios, timing: bool = True) -> MetricsReport:
    batch = scenarios if isinstance(scenarios, model.Batch) else model.make_batch(scenarios, cfg)
    out = predict(params, cfg, batch)
    m = dataset_metrics(out.pred.trajectories(), out.pred.probs.data, batch.gt, cfg.dt)
    ms = time_inference(params, cfg, batch) if timing else float("nan")
    return MetricsReport(m["min_ade"], m["min_fde_1"], m["rmse"], ms, len(batch), TIMING_PROTOCOL)


def evaluate(ckpt_path, data_path, cfg: Config | None = None, timing: bool = True) -> MetricsReport:
    params, cfg = load_checkpoint(ckpt_path, cfg)
    return evaluate_model(params, cfg, load_scenarios(data_path), timing)


def prediction_records(params: ParamStore, cfg: Config, scenarios: list[Scenario]) -> list[dict]:
    """Per-scenario predictions mapped back to each scenario's source frame."""
    batch = model.make_batch(scenarios, cfg, require_future=False)
    out = predict(params, cfg, batch)
    mu, b, probs = out.pred.mu.data, out.pred.b.data, out.pred.probs.data
    records = []
    for i, sid in enumerate(batch.scenario_ids):
        frame = batch.frames[i]
        modes = []
        for k in range(mu.shape[1]):
            xy = denormalize_xy(mu[i, k], frame)
            bxy = denormalize_scales(b[i, k], frame)
            modes.append({"prob": float(probs[i, k]),
                          "traj": np.concatenate([xy, bxy], axis=-1).tolist()})
        records.append({"scenario_id": sid, "modes": modes})
    return records


def hypergraph_records(params: ParamStore, cfg: Config, scenarios: list[Scenario]) -> list[dict]:
    """C, alpha, beta and E per scenario (real agents only, row 0 = target)."""
    if not cfg.hypergraph:
        raise ValueError("inspect needs a model with hypergraph=true")
    batch = model.make_batch(scenarios, cfg, require_future=False)
    hg = predict(params, cfg, batch).hypergraph
    records = []
    for i, sid in enumerate(batch.scenario_ids):
        n = int(batch.mask[i].sum())
        records.append({
            "scenario_id": sid,
            "agent_ids": batch.agent_ids[i][:n],
            "C": hg.C.data[i, :n].tolist(),
            "alpha": hg.alpha.data[i, :n, 0].tolist(),
            "beta": float(hg.beta.data[i, 0, 0]),
            "E": hg.E[i, :n].astype(int).tolist(),
        })
    return records


def write_jsonl(path, records) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(json.dumps(r) + "\n")
    return path
