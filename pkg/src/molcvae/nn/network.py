"""Encoder/decoder MLPs with manual backpropagation.

Encoder: ``[x, c] -> hidden... -> (mu, logvar)``; decoder:
``[z, c] -> hidden... -> logits``, followed by a softmax per one-hot
segment. Hidden layers use ReLU; there is no dropout or normalisation.
Everything runs in float64 on plain numpy arrays, batch on axis 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from molcvae.codec import FLAT_DIM, SEGMENTS
from molcvae.nn.losses import (
    LOGVAR_MAX,
    LOGVAR_MIN,
    LossBreakdown,
    check_finite,
    elbo_loss,
    kl_loss,
    recon_loss,
    segment_groups,
    segment_log_softmax,
)


@dataclass(frozen=True)
class Architecture:
    """Layer sizes and the one-hot segment layout of the output."""

    input_dim: int = FLAT_DIM
    cond_dim: int = 0
    encoder_hidden: tuple[int, ...] = (1024, 512)
    latent_dim: int = 128
    decoder_hidden: tuple[int, ...] = (512, 1024)
    segments: tuple[tuple[int, ...], ...] = SEGMENTS
    groups: tuple[tuple[int, int, int], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "encoder_hidden", tuple(int(h) for h in self.encoder_hidden))
        object.__setattr__(self, "decoder_hidden", tuple(int(h) for h in self.decoder_hidden))
        object.__setattr__(self, "segments", tuple(tuple(int(v) for v in s) for s in self.segments))
        groups = tuple(segment_groups(self.segments))
        start, count, width = groups[-1]
        if start + count * width != self.input_dim:
            raise ValueError("segments must cover the whole input vector")
        object.__setattr__(self, "groups", groups)

    @classmethod
    def tiny(cls, cond_dim: int = 0, input_dim: int = 20, hidden: tuple[int, int] = (8, 4),
             latent_dim: int = 3, segment_width: int = 5) -> Architecture:
        """Small network for gradient checks; equal-width output segments."""
        segments = tuple((s, segment_width) for s in range(0, input_dim, segment_width))
        return cls(input_dim, cond_dim, hidden, latent_dim, hidden[::-1], segments)

    def layer_shapes(self) -> list[tuple[str, int, int]]:
        shapes = []
        fan_in = self.input_dim + self.cond_dim
        for k, h in enumerate(self.encoder_hidden):
            shapes.append((f"enc{k}", fan_in, h))
            fan_in = h
        shapes.append(("mu", fan_in, self.latent_dim))
        shapes.append(("logvar", fan_in, self.latent_dim))
        fan_in = self.latent_dim + self.cond_dim
        for k, h in enumerate(self.decoder_hidden):
            shapes.append((f"dec{k}", fan_in, h))
            fan_in = h
        shapes.append(("out", fan_in, self.input_dim))
        return shapes

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "cond_dim": self.cond_dim,
            "encoder_hidden": list(self.encoder_hidden),
            "latent_dim": self.latent_dim,
            "decoder_hidden": list(self.decoder_hidden),
            "segments": [list(s) for s in self.segments],
        }

    @classmethod
    def from_dict(cls, d: dict) -> Architecture:
        return cls(
            d["input_dim"], d["cond_dim"], tuple(d["encoder_hidden"]), d["latent_dim"],
            tuple(d["decoder_hidden"]), tuple(tuple(s) for s in d["segments"]),
        )


class ModelParams:
    """Ordered mapping ``"<layer>.W" / "<layer>.b" -> float64 array``."""

    def __init__(self, arch: Architecture, arrays: dict[str, np.ndarray]):
        expected = []
        for name, fan_in, fan_out in arch.layer_shapes():
            expected += [(f"{name}.W", (fan_in, fan_out)), (f"{name}.b", (fan_out,))]
        if [k for k, _ in expected] != list(arrays):
            raise ValueError("parameter names do not match the architecture")
        for key, shape in expected:
            if arrays[key].shape != shape:
                raise ValueError(f"{key} has shape {arrays[key].shape}, expected {shape}")
        self.arch = arch
        self.arrays = {k: np.ascontiguousarray(v, dtype=np.float64) for k, v in arrays.items()}

    @classmethod
    def initialize(cls, arch: Architecture, rng: np.random.Generator) -> ModelParams:
        """Glorot-uniform weights, zero biases."""
        arrays = {}
        for name, fan_in, fan_out in arch.layer_shapes():
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            arrays[f"{name}.W"] = rng.uniform(-limit, limit, size=(fan_in, fan_out))
            arrays[f"{name}.b"] = np.zeros(fan_out)
        return cls(arch, arrays)

    @classmethod
    def zeros(cls, arch: Architecture) -> ModelParams:
        arrays = {}
        for name, fan_in, fan_out in arch.layer_shapes():
            arrays[f"{name}.W"] = np.zeros((fan_in, fan_out))
            arrays[f"{name}.b"] = np.zeros(fan_out)
        return cls(arch, arrays)

    def copy(self) -> ModelParams:
        return ModelParams(self.arch, {k: v.copy() for k, v in self.arrays.items()})

    def __getitem__(self, key: str) -> np.ndarray:
        return self.arrays[key]

    def __iter__(self) -> Iterator[str]:
        return iter(self.arrays)

    def items(self):
        return self.arrays.items()

    @property
    def size(self) -> int:
        return sum(v.size for v in self.arrays.values())

    def equal(self, other: ModelParams) -> bool:
        return list(self.arrays) == list(other.arrays) and all(
            np.array_equal(v, other.arrays[k]) for k, v in self.arrays.items()
        )


def _check_inputs(arch: Architecture, x: np.ndarray, c: np.ndarray | None, width: int, what: str):
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != width:
        raise ValueError(f"{what} has width {x.shape[1]}, expected {width}")
    if c is None:
        c = np.zeros((x.shape[0], 0))
    c = np.atleast_2d(np.asarray(c, dtype=np.float64))
    if arch.cond_dim == 0 and c.size == 0:
        c = np.zeros((x.shape[0], 0))
    if c.shape != (x.shape[0], arch.cond_dim):
        raise ValueError(f"conditions have shape {c.shape}, expected {(x.shape[0], arch.cond_dim)}")
    return x, c


@dataclass
class EncoderPass:
    inputs: list[np.ndarray]
    pre: list[np.ndarray]
    mu: np.ndarray
    logvar: np.ndarray
    logvar_raw: np.ndarray


@dataclass
class DecoderPass:
    inputs: list[np.ndarray]
    pre: list[np.ndarray]
    logits: np.ndarray
    log_probs: np.ndarray


def encoder_forward(params: ModelParams, x: np.ndarray, c: np.ndarray | None = None) -> EncoderPass:
    arch = params.arch
    x, c = _check_inputs(arch, x, c, arch.input_dim, "encoder input")
    h = np.concatenate([x, c], axis=1)
    inputs, pre = [], []
    for k in range(len(arch.encoder_hidden)):
        inputs.append(h)
        a = h @ params[f"enc{k}.W"] + params[f"enc{k}.b"]
        pre.append(a)
        h = np.maximum(a, 0.0)
    inputs.append(h)
    mu = check_finite(h @ params["mu.W"] + params["mu.b"], "encoder mu")
    raw = check_finite(h @ params["logvar.W"] + params["logvar.b"], "encoder logvar")
    return EncoderPass(inputs, pre, mu, np.clip(raw, LOGVAR_MIN, LOGVAR_MAX), raw)


def reparameterize(mu: np.ndarray, logvar: np.ndarray, eps: np.ndarray) -> np.ndarray:
    """``z = mu + exp(logvar / 2) * eps``."""
    return mu + np.exp(0.5 * logvar) * eps


def decoder_forward(params: ModelParams, z: np.ndarray, c: np.ndarray | None = None) -> DecoderPass:
    arch = params.arch
    z, c = _check_inputs(arch, z, c, arch.latent_dim, "latent input")
    h = np.concatenate([z, c], axis=1)
    inputs, pre = [], []
    for k in range(len(arch.decoder_hidden)):
        inputs.append(h)
        a = h @ params[f"dec{k}.W"] + params[f"dec{k}.b"]
        pre.append(a)
        h = np.maximum(a, 0.0)
    inputs.append(h)
    logits = check_finite(h @ params["out.W"] + params["out.b"], "decoder logits")
    return DecoderPass(inputs, pre, logits, segment_log_softmax(logits, arch.groups))


def decode_probabilities(params: ModelParams, z: np.ndarray, c: np.ndarray | None = None) -> np.ndarray:
    """Per-segment probabilities for latent points ``z``."""
    return np.exp(decoder_forward(params, z, c).log_probs)


def _backprop_mlp(params: ModelParams, prefix: str, n_hidden: int, inputs: list[np.ndarray],
                  pre: list[np.ndarray], out_name: str, d_out: np.ndarray,
                  grads: dict[str, np.ndarray]) -> np.ndarray:
    """Accumulate gradients of an MLP stack; returns the gradient wrt its input."""
    top = inputs[-1]
    grads[f"{out_name}.W"] += top.T @ d_out
    grads[f"{out_name}.b"] += d_out.sum(axis=0)
    dh = d_out @ params[f"{out_name}.W"].T
    for k in range(n_hidden - 1, -1, -1):
        da = dh * (pre[k] > 0)
        grads[f"{prefix}{k}.W"] += inputs[k].T @ da
        grads[f"{prefix}{k}.b"] += da.sum(axis=0)
        dh = da @ params[f"{prefix}{k}.W"].T
    return dh


@dataclass
class StepResult:
    loss: LossBreakdown
    grads: dict[str, np.ndarray]
    min_abs_preactivation: float


def loss_and_grads(params: ModelParams, x: np.ndarray, c: np.ndarray | None, eps: np.ndarray,
                   beta: float, need_grads: bool = True) -> StepResult:
    """Negative β-ELBO on a batch and its exact gradient for every parameter.

    ``eps`` has shape ``(batch, latent)`` or ``(k, batch, latent)`` for a
    ``k``-sample reconstruction estimate. The KL term is analytic.
    """
    arch = params.arch
    eps = np.asarray(eps, dtype=np.float64)
    if eps.ndim == 2:
        eps = eps[None]
    enc = encoder_forward(params, x, c)
    x2, c2 = _check_inputs(arch, x, c, arch.input_dim, "encoder input")
    if eps.shape[1:] != enc.mu.shape:
        raise ValueError(f"eps has shape {eps.shape[1:]}, expected {enc.mu.shape}")
    k_samples = eps.shape[0]
    kl, d_mu_kl, d_lv_kl = kl_loss(enc.mu, enc.logvar)
    grads = {key: np.zeros_like(v) for key, v in params.items()} if need_grads else {}
    d_mu = np.zeros_like(enc.mu)
    d_lv = np.zeros_like(enc.logvar)
    recon = 0.0
    min_pre = min((float(np.abs(a).min()) for a in enc.pre), default=np.inf)
    sigma = np.exp(0.5 * enc.logvar)
    for s in range(k_samples):
        z = enc.mu + sigma * eps[s]
        dec = decoder_forward(params, z, c2)
        r, d_logits = recon_loss(dec.log_probs, x2)
        recon += r
        min_pre = min(min_pre, min((float(np.abs(a).min()) for a in dec.pre), default=np.inf))
        if not need_grads:
            continue
        d_in = _backprop_mlp(params, "dec", len(arch.decoder_hidden), dec.inputs, dec.pre, "out",
                             d_logits / k_samples, grads)
        dz = d_in[:, :arch.latent_dim]
        d_mu += dz
        d_lv += dz * 0.5 * sigma * eps[s]
    recon /= k_samples
    loss = elbo_loss(recon, kl, beta)
    if not np.isfinite(loss.total):
        raise FloatingPointError("non-finite loss")
    if need_grads:
        d_mu += beta * d_mu_kl
        d_lv += beta * d_lv_kl
        # the clamp passes no gradient where it is active
        d_lv *= (enc.logvar_raw >= LOGVAR_MIN) & (enc.logvar_raw <= LOGVAR_MAX)
        top = enc.inputs[-1]
        grads["mu.W"] += top.T @ d_mu
        grads["mu.b"] += d_mu.sum(axis=0)
        grads["logvar.W"] += top.T @ d_lv
        grads["logvar.b"] += d_lv.sum(axis=0)
        d_top = d_mu @ params["mu.W"].T + d_lv @ params["logvar.W"].T
        n_enc = len(arch.encoder_hidden)
        dh = d_top
        for k in range(n_enc - 1, -1, -1):
            da = dh * (enc.pre[k] > 0)
            grads[f"enc{k}.W"] += enc.inputs[k].T @ da
            grads[f"enc{k}.b"] += da.sum(axis=0)
            dh = da @ params[f"enc{k}.W"].T
        for key, g in grads.items():
            check_finite(g, f"gradient {key}")
    return StepResult(loss, grads, min_pre)


def loss_value(params: ModelParams, x: np.ndarray, c: np.ndarray | None, eps: np.ndarray, beta: float) -> float:
    return loss_and_grads(params, x, c, eps, beta, need_grads=False).loss.total
