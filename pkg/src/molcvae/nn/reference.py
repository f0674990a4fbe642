"""Stand-alone objectives for the three classic special cases.

Each function spells out its forward pass without the configuration
switches of :func:`molcvae.nn.network.loss_and_grads`, so the general
objective can be checked against them:

* :func:`vae_objective`: reconstruction + KL, no conditions.
* :func:`beta_vae_objective`: reconstruction + β·KL, no conditions.
* :func:`cvae_objective`: conditional reconstruction + KL.
"""

from __future__ import annotations

import numpy as np

from molcvae.nn.losses import LOGVAR_MAX, LOGVAR_MIN
from molcvae.nn.network import ModelParams


def _mlp(params: ModelParams, prefix: str, n: int, h: np.ndarray) -> np.ndarray:
    for k in range(n):
        h = np.maximum(h @ params[f"{prefix}{k}.W"] + params[f"{prefix}{k}.b"], 0.0)
    return h


def _log_softmax_segments(logits: np.ndarray, segments) -> np.ndarray:
    out = np.empty_like(logits)
    for start, width in segments:
        block = logits[:, start:start + width]
        shifted = block - block.max(axis=1, keepdims=True)
        out[:, start:start + width] = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    return out


def _terms(params: ModelParams, enc_in: np.ndarray, x: np.ndarray, extra: np.ndarray | None,
           eps: np.ndarray) -> tuple[float, float]:
    arch = params.arch
    h = _mlp(params, "enc", len(arch.encoder_hidden), enc_in)
    mu = h @ params["mu.W"] + params["mu.b"]
    logvar = np.clip(h @ params["logvar.W"] + params["logvar.b"], LOGVAR_MIN, LOGVAR_MAX)
    z = mu + np.exp(0.5 * logvar) * eps
    dec_in = z if extra is None else np.concatenate([z, extra], axis=1)
    g = _mlp(params, "dec", len(arch.decoder_hidden), dec_in)
    log_p = _log_softmax_segments(g @ params["out.W"] + params["out.b"], arch.segments)
    recon = float((-(x * log_p).sum(axis=1)).mean())
    kl = float((0.5 * (mu * mu + np.exp(logvar) - 1.0 - logvar).sum(axis=-1)).mean())
    return recon, kl


def vae_objective(params: ModelParams, x: np.ndarray, eps: np.ndarray) -> float:
    if params.arch.cond_dim:
        raise ValueError("the plain VAE objective takes an unconditioned model")
    recon, kl = _terms(params, x, x, None, eps)
    return recon + kl


def beta_vae_objective(params: ModelParams, x: np.ndarray, eps: np.ndarray, beta: float) -> float:
    if params.arch.cond_dim:
        raise ValueError("the β-VAE objective takes an unconditioned model")
    recon, kl = _terms(params, x, x, None, eps)
    return recon + beta * kl


def cvae_objective(params: ModelParams, x: np.ndarray, c: np.ndarray, eps: np.ndarray) -> float:
    if c.shape[1] != params.arch.cond_dim or not params.arch.cond_dim:
        raise ValueError("the CVAE objective needs one condition column per model condition")
    recon, kl = _terms(params, np.concatenate([x, c], axis=1), x, c, eps)
    return recon + kl
