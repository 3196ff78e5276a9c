"""Model / training configuration and the ablation presets."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Config:
    # architecture
    d: int = 32
    s: int = 8
    K: int = 5
    H: int = 3
    t_h: int = 8
    t_f: int = 12
    h_neuro: int = 16
    hidden_gen: int = 64
    lane_points: int = 10
    lane_segment_length: float = 20.0
    pos_scale: float = 5.0
    b_activation: str = "exp"
    # ablation flags
    neuromodulator: bool = True
    small_world: bool = True
    hypergraph: bool = True
    context_fusion: bool = True
    multimodal: bool = True
    # forward-pass behaviour
    dt: float = 0.5
    tau: float = 1.0
    tau_e: float = 0.5
    alpha_fixed: float = 0.5
    beta_fixed: float = 0.1
    eval_rewire: str = "threshold"
    resample_noise: bool = True
    # training
    lr: float = 1e-2
    momentum: float = 0.0
    optimizer: str = "sgd"
    clip_norm: float = 0.0
    lr_schedule: str = "constant"
    steps: int = 1000
    batch: int = 32
    seed: int = 0
    c_cls: float = 0.5
    checkpoint_every: int = 0

    def __post_init__(self):
        for name in ("d", "s", "K", "t_h", "t_f", "h_neuro", "hidden_gen", "lane_points", "batch"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.H < 0 or self.steps < 0 or self.checkpoint_every < 0:
            raise ConfigError("H, steps and checkpoint_every must be non-negative")
        for name in ("dt", "tau", "tau_e", "lane_segment_length", "pos_scale"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("alpha_fixed", "beta_fixed"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if self.eval_rewire not in ("threshold", "sample"):
            raise ConfigError("eval_rewire must be 'threshold' or 'sample'")
        if self.optimizer not in ("sgd", "adam"):
            raise ConfigError("optimizer must be 'sgd' or 'adam'")
        if self.lr_schedule not in ("constant", "cosine"):
            raise ConfigError("lr_schedule must be 'constant' or 'cosine'")
        if self.b_activation not in ("exp", "softplus"):
            raise ConfigError("b_activation must be 'exp' or 'softplus'")
        if not self.hypergraph and (self.neuromodulator or self.small_world):
            raise ConfigError("neuromodulator and small_world need hypergraph=true")

    @property
    def modes(self) -> int:
        """Number of intention / trajectory modes actually used."""
        return self.K if self.multimodal else 1

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "Config":
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        clean = {}
        for key, value in data.items():
            want = known[key].type
            if want == "bool" and not isinstance(value, bool):
                raise ConfigError(f"{key} must be a boolean")
            if want == "int" and (isinstance(value, bool) or not isinstance(value, int)):
                raise ConfigError(f"{key} must be an integer")
            if want == "float" and (isinstance(value, bool) or not isinstance(value, (int, float))):
                raise ConfigError(f"{key} must be a number")
            if want == "str" and not isinstance(value, str):
                raise ConfigError(f"{key} must be a string")
            clean[key] = float(value) if want == "float" else value
        return cls(**clean)

    @classmethod
    def load(cls, path) -> "Config":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        return cls.from_dict(data)

    def with_method(self, method: str) -> "Config":
        return replace(self, **ABLATION_METHODS[method])

    def hash(self) -> str:
        """Digest of the fields that fix the parameter layout and forward semantics."""
        arch = {k: v for k, v in self.to_dict().items() if k in ARCH_FIELDS}
        return hashlib.sha256(json.dumps(arch, sort_keys=True).encode()).hexdigest()[:16]


ARCH_FIELDS = frozenset({
    "d", "s", "K", "H", "t_h", "t_f", "h_neuro", "hidden_gen", "lane_points",
    "lane_segment_length", "pos_scale", "b_activation", "neuromodulator", "small_world",
    "hypergraph", "context_fusion", "multimodal",
})

_ALL_ON = dict(neuromodulator=True, small_world=True, hypergraph=True,
               context_fusion=True, multimodal=True)

ABLATION_METHODS = {
    "A": {**_ALL_ON, "neuromodulator": False},
    "B": {**_ALL_ON, "neuromodulator": False, "small_world": False},
    "C": {**_ALL_ON, "neuromodulator": False, "small_world": False, "hypergraph": False},
    "D": {**_ALL_ON, "context_fusion": False},
    "E": {**_ALL_ON, "multimodal": False},
    "F": dict(_ALL_ON),
}
