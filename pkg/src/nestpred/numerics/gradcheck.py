"""Central finite-difference gradient checking."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .params import ParamStore
from .tensor import NumericError, Tensor, backward


@dataclass
class TensorCheck:
    name: str
    analytic: np.ndarray
    numeric: np.ndarray
    max_rel_error: float
    nonfinite: bool = False


@dataclass
class GradCheckReport:
    entries: dict[str, TensorCheck] = field(default_factory=dict)

    @property
    def max_rel_error(self) -> float:
        return max((e.max_rel_error for e in self.entries.values()), default=0.0)

    @property
    def flagged(self) -> list[str]:
        return [k for k, e in self.entries.items() if e.nonfinite]

    def ok(self, tol: float) -> bool:
        return not self.flagged and self.max_rel_error < tol

    def worst(self, n: int = 5) -> list[tuple[str, float]]:
        ranked = sorted(self.entries.values(), key=lambda e: -e.max_rel_error)
        return [(e.name, e.max_rel_error) for e in ranked[:n]]


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-6) -> np.ndarray:
    """``|a - n| / max(|a|, |n|, floor)``; the floor keeps near-zero entries from dominating."""
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / scale


def _value(f, params) -> float:
    out = f(params)
    v = out.item() if isinstance(out, Tensor) else float(out)
    if not np.isfinite(v):
        raise NumericError("non-finite loss")
    return v


def grad_check(f: Callable[[ParamStore], Tensor], params: ParamStore, eps: float = 1e-4,
               names: list[str] | None = None, floor: float = 1e-6) -> GradCheckReport:
    """Compare tape gradients of ``f`` against central differences for every entry.

    ``f`` must be a deterministic function of ``params`` (fixed random draws).
    A probe that yields a non-finite loss is flagged instead of raising.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    analytic = backward(f(params), params)
    report = GradCheckReport()
    for name in names or params.names():
        t = params[name]
        original = t.data
        numeric = np.zeros_like(original)
        nonfinite = False
        for idx in np.ndindex(original.shape):
            vals = []
            for sign in (1.0, -1.0):
                probe = original.copy()
                probe[idx] += sign * eps
                t.data = probe
                try:
                    vals.append(_value(f, params))
                except NumericError:
                    vals.append(np.nan)
            t.data = original
            if not np.all(np.isfinite(vals)):
                nonfinite = True
                numeric[idx] = np.nan
            else:
                numeric[idx] = (vals[0] - vals[1]) / (2 * eps)
        rel = relative_error(analytic[name], numeric, floor)
        worst = float(np.nanmax(rel)) if rel.size and not np.all(np.isnan(rel)) else 0.0
        report.entries[name] = TensorCheck(name, analytic[name], numeric, worst, nonfinite)
    return report
