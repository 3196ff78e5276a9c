"""Named parameter storage and JSON checkpoints."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterator, Mapping

import numpy as np

from .rng import RngStream
from .tensor import Tensor

FORMAT_VERSION = "nestpred-ckpt/1"


class CheckpointError(ValueError):
    pass


class ParamStore:
    """Ordered mapping ``name -> Tensor`` of trainable leaves."""

    def __init__(self, tensors: Mapping[str, Tensor] | None = None, version: str = FORMAT_VERSION):
        self.version = version
        self._tensors: dict[str, Tensor] = {}
        for name, t in (tensors or {}).items():
            self.add(name, t)

    def add(self, name: str, value) -> Tensor:
        if name in self._tensors:
            raise KeyError(f"duplicate parameter name '{name}'")
        data = value.data if isinstance(value, Tensor) else value
        t = Tensor(np.array(data, dtype=np.float64), requires_grad=True)
        self._tensors[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        try:
            return self._tensors[name]
        except KeyError:
            raise KeyError(f"unknown parameter '{name}'") from None

    def __contains__(self, name: str) -> bool:
        return name in self._tensors

    def __len__(self) -> int:
        return len(self._tensors)

    def __iter__(self) -> Iterator[str]:
        return iter(self._tensors)

    def names(self) -> list[str]:
        return list(self._tensors)

    def items(self):
        return self._tensors.items()

    def shapes(self) -> dict[str, tuple]:
        return {k: t.shape for k, t in self._tensors.items()}

    def num_values(self) -> int:
        return sum(t.data.size for t in self._tensors.values())

    def copy(self) -> "ParamStore":
        return ParamStore({k: Tensor(t.data.copy()) for k, t in self._tensors.items()}, self.version)

    def equals(self, other: "ParamStore") -> bool:
        """Bit-exact equality of names, shapes and values."""
        if self.names() != other.names():
            return False
        return all(np.array_equal(t.data, other[k].data) for k, t in self._tensors.items())

    # ------------------------------------------------------------ checkpoints
    def to_json(self, config_hash: str, config: dict | None = None) -> dict:
        doc = {"version": self.version, "config_hash": config_hash}
        if config is not None:
            doc["config"] = config
        doc["tensors"] = {
            k: {"shape": list(t.shape), "data": t.data.reshape(-1).tolist()}
            for k, t in self._tensors.items()
        }
        return doc

    def save(self, path, config_hash: str, config: dict | None = None) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_json(config_hash, config)) + "\n", encoding="utf-8")
        return path

    @classmethod
    def from_json(cls, doc: dict, expected_hash: str | None = None) -> "ParamStore":
        if not isinstance(doc, dict) or "tensors" not in doc or "config_hash" not in doc:
            raise CheckpointError("checkpoint must be an object with 'config_hash' and 'tensors'")
        if doc.get("version") != FORMAT_VERSION:
            raise CheckpointError(f"unsupported checkpoint version {doc.get('version')!r}")
        if expected_hash is not None and doc["config_hash"] != expected_hash:
            raise CheckpointError(
                f"config hash mismatch: checkpoint has {doc['config_hash']}, "
                f"active config has {expected_hash}")
        store = cls(version=doc["version"])
        for name, entry in doc["tensors"].items():
            shape = tuple(entry["shape"])
            data = np.array(entry["data"], dtype=np.float64)
            if data.size != math.prod(shape):
                raise CheckpointError(f"tensor '{name}': {data.size} values for shape {shape}")
            store.add(name, data.reshape(shape))
        return store

    @classmethod
    def load(cls, path, expected_hash: str | None = None) -> "ParamStore":
        doc = read_checkpoint(path)
        return cls.from_json(doc, expected_hash)


def read_checkpoint(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"{path}: not valid JSON ({exc})") from None


def init_store(registry: Mapping[str, tuple], seed: int) -> ParamStore:
    """Initialise every registered tensor uniformly in +-1/sqrt(fan_in).

    Each tensor gets its own sub-stream of ``RngStream(seed, "init")`` so adding
    or removing a parameter leaves the others untouched.
    """
    root = RngStream(seed, "init")
    store = ParamStore()
    for name, (shape, fan_in) in registry.items():
        bound = 1.0 / math.sqrt(fan_in)
        store.add(name, root.child(name).uniform_range(-bound, bound, shape))
    return store
