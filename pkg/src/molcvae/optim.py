"""Adam and a hypergradient Adam that also learns its step size.

Both optimizers update a ``dict[str, ndarray]`` of parameters in place
and keep their state as plain arrays so it can be written to and read back
from a checkpoint bit-exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_LR = 0.005
DEFAULT_META_LR = 1e-3


@dataclass
class AdamState:
    alpha: float = DEFAULT_LR
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def _check_grads(params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
    for key, p in params.items():
        g = grads[key]
        if g.shape != p.shape:
            raise ValueError(f"gradient {key} has shape {g.shape}, expected {p.shape}")
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient for {key}")


class Adam:
    """Bias-corrected Adam: ``p <- p - alpha * m_hat / (sqrt(v_hat) + eps)``."""

    name = "adam"

    def __init__(self, alpha: float = DEFAULT_LR, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        if not alpha > 0:
            raise ValueError("learning rate must be positive")
        self.state = AdamState(alpha, beta1, beta2, eps)

    @property
    def alpha(self) -> float:
        return self.state.alpha

    def directions(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        """Advance the moments and return the bias-corrected direction per parameter."""
        _check_grads(params, grads)
        s = self.state
        s.t += 1
        c1 = 1.0 - s.beta1 ** s.t
        c2 = 1.0 - s.beta2 ** s.t
        out = {}
        for key, g in grads.items():
            if key not in s.m:
                s.m[key] = np.zeros_like(g)
                s.v[key] = np.zeros_like(g)
            m = s.m[key]
            v = s.v[key]
            m *= s.beta1
            m += (1.0 - s.beta1) * g
            v *= s.beta2
            v += (1.0 - s.beta2) * (g * g)
            out[key] = (m / c1) / (np.sqrt(v / c2) + s.eps)
        return out

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        for key, u in self.directions(params, grads).items():
            params[key] -= self.state.alpha * u

    def state_arrays(self) -> dict[str, np.ndarray]:
        s = self.state
        out = {}
        for key in s.m:
            out[f"m/{key}"] = s.m[key]
            out[f"v/{key}"] = s.v[key]
        return out

    def state_scalars(self) -> dict:
        s = self.state
        return {"name": self.name, "alpha": s.alpha, "beta1": s.beta1, "beta2": s.beta2, "eps": s.eps, "t": s.t}

    def load_state(self, scalars: dict, arrays: dict[str, np.ndarray]) -> None:
        s = self.state
        s.alpha, s.beta1, s.beta2, s.eps, s.t = (
            scalars["alpha"], scalars["beta1"], scalars["beta2"], scalars["eps"], scalars["t"],
        )
        s.m = {k[2:]: v.copy() for k, v in arrays.items() if k.startswith("m/")}
        s.v = {k[2:]: v.copy() for k, v in arrays.items() if k.startswith("v/")}


class HyperAdam(Adam):
    """Adam whose log learning rate follows its own hypergradient.

    With ``p_t = p_{t-1} - exp(lam) * u_{t-1}`` the loss gradient wrt ``lam``
    is ``<g_t, -exp(lam) * u_{t-1}>``; ``lam`` takes a plain gradient step of
    size ``meta_lr`` before each Adam step. Only the learning rate is tuned.
    """

    name = "hyperadam"

    def __init__(self, alpha: float = DEFAULT_LR, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8,
                 meta_lr: float = DEFAULT_META_LR):
        super().__init__(alpha, beta1, beta2, eps)
        if meta_lr < 0:
            raise ValueError("meta step size must be non-negative")
        self.meta_lr = meta_lr
        self.log_alpha = math.log(alpha)
        self.prev: dict[str, np.ndarray] = {}
        self.last_hypergradient = 0.0

    def hypergradient(self, grads: dict[str, np.ndarray]) -> float:
        if not self.prev:
            return 0.0
        total = 0.0
        for key, g in grads.items():
            total += float(np.vdot(g, self.prev[key]))
        return -self.state.alpha * total

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        _check_grads(params, grads)
        h = self.hypergradient(grads)
        if not math.isfinite(h):
            raise FloatingPointError("non-finite hypergradient")
        self.last_hypergradient = h
        new_log = self.log_alpha - self.meta_lr * h
        # alpha is only recomputed when lam actually moves, so that a zero
        # meta step keeps the exact initial learning rate
        if new_log != self.log_alpha:
            self.log_alpha = new_log
            self.state.alpha = math.exp(new_log)
        dirs = self.directions(params, grads)
        for key, u in dirs.items():
            params[key] -= self.state.alpha * u
        self.prev = dirs

    def state_arrays(self) -> dict[str, np.ndarray]:
        out = super().state_arrays()
        for key, u in self.prev.items():
            out[f"u/{key}"] = u
        return out

    def state_scalars(self) -> dict:
        out = super().state_scalars()
        out.update(meta_lr=self.meta_lr, log_alpha=self.log_alpha, last_hypergradient=self.last_hypergradient)
        return out

    def load_state(self, scalars: dict, arrays: dict[str, np.ndarray]) -> None:
        super().load_state(scalars, arrays)
        self.meta_lr = scalars["meta_lr"]
        self.log_alpha = scalars["log_alpha"]
        self.last_hypergradient = scalars["last_hypergradient"]
        self.prev = {k[2:]: v.copy() for k, v in arrays.items() if k.startswith("u/")}


OPTIMIZERS = {"adam": Adam, "hyperadam": HyperAdam}


def make_optimizer(name: str, alpha: float = DEFAULT_LR, meta_lr: float = DEFAULT_META_LR) -> Adam:
    if name == "adam":
        return Adam(alpha)
    if name == "hyperadam":
        return HyperAdam(alpha, meta_lr=meta_lr)
    raise ValueError(f"unknown optimizer {name!r}; use adam or hyperadam")
