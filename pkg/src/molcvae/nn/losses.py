"""Segment softmax, reconstruction cross-entropy, Gaussian KL and the ELBO."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

LOGVAR_MIN = -10.0
LOGVAR_MAX = 10.0


class NonFiniteError(FloatingPointError):
    """NaN or Inf reached a layer boundary."""

    def __init__(self, where: str):
        super().__init__(f"non-finite values in {where}")
        self.where = where


def check_finite(a: np.ndarray, where: str) -> np.ndarray:
    if not np.all(np.isfinite(a)):
        raise NonFiniteError(where)
    return a


def segment_groups(segments: Sequence[tuple[int, int]]) -> list[tuple[int, int, int]]:
    """Collapse contiguous equal-width segments into ``(start, count, width)`` runs.

    Runs let the softmax reshape a whole block at once instead of looping
    over 137 segments.
    """
    groups: list[tuple[int, int, int]] = []
    pos = 0
    for start, width in segments:
        if start != pos or width < 1:
            raise ValueError("segments must tile the vector contiguously from 0")
        if groups and groups[-1][2] == width:
            s, count, w = groups[-1]
            groups[-1] = (s, count + 1, w)
        else:
            groups.append((start, 1, width))
        pos = start + width
    return groups


def segment_log_softmax(logits: np.ndarray, groups: Sequence[tuple[int, int, int]]) -> np.ndarray:
    """Log-probabilities with an independent softmax per segment (batch on axis 0)."""
    out = np.empty_like(logits)
    batch = logits.shape[0]
    for start, count, width in groups:
        stop = start + count * width
        block = logits[:, start:stop].reshape(batch, count, width)
        shifted = block - block.max(axis=2, keepdims=True)
        lse = np.log(np.exp(shifted).sum(axis=2, keepdims=True))
        out[:, start:stop] = (shifted - lse).reshape(batch, count * width)
    return out


def segment_softmax(logits: np.ndarray, groups: Sequence[tuple[int, int, int]]) -> np.ndarray:
    return np.exp(segment_log_softmax(logits, groups))


def check_one_hot(target: np.ndarray, groups: Sequence[tuple[int, int, int]]) -> None:
    batch = target.shape[0]
    if not np.all((target == 0) | (target == 1)):
        raise ValueError("reconstruction target must be hard one-hot")
    for start, count, width in groups:
        block = target[:, start:start + count * width].reshape(batch, count, width)
        if not np.all(block.sum(axis=2) == 1):
            raise ValueError("reconstruction target must have exactly one 1 per segment")


def recon_loss(log_probs: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Batch-mean summed cross-entropy and its gradient wrt the logits.

    PAD rows are part of the target and contribute like any other row.
    """
    batch = log_probs.shape[0]
    per_sample = -(target * log_probs).sum(axis=1)
    grad = (np.exp(log_probs) - target) / batch
    return float(per_sample.mean()), grad


def kl_terms(mu: np.ndarray, logvar: np.ndarray) -> np.ndarray:
    """Per-sample KL of N(mu, exp(logvar)) from N(0, I)."""
    return 0.5 * (mu * mu + np.exp(logvar) - 1.0 - logvar).sum(axis=-1)


def kl_loss(mu: np.ndarray, logvar: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Batch-mean closed-form KL with gradients wrt ``mu`` and ``logvar``."""
    mu = np.atleast_2d(mu)
    logvar = np.atleast_2d(logvar)
    batch = mu.shape[0]
    value = float(kl_terms(mu, logvar).mean())
    return value, mu / batch, 0.5 * (np.exp(logvar) - 1.0) / batch


def kl_monte_carlo(mu: np.ndarray, logvar: np.ndarray, n: int, rng: np.random.Generator,
                   chunk: int = 100_000) -> float:
    """Sampling estimate of KL(q || p) as the mean of log q(z) - log p(z), z ~ q."""
    mu = np.asarray(mu, dtype=float)
    logvar = np.asarray(logvar, dtype=float)
    sigma = np.exp(0.5 * logvar)
    total = 0.0
    done = 0
    while done < n:
        m = min(chunk, n - done)
        eps = rng.standard_normal((m, mu.size))
        z = mu + sigma * eps
        log_q = -0.5 * (eps * eps + logvar).sum(axis=1)
        log_p = -0.5 * (z * z).sum(axis=1)
        total += float((log_q - log_p).sum())
        done += m
    return total / n


@dataclass(frozen=True)
class LossBreakdown:
    reconstruction: float
    kl: float
    beta: float
    total: float

    def as_row(self) -> tuple[float, float, float]:
        return (self.reconstruction, self.kl, self.total)


def elbo_loss(recon: float, kl: float, beta: float) -> LossBreakdown:
    """Negative β-weighted ELBO: ``recon + beta * kl``."""
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    return LossBreakdown(recon, kl, beta, recon + beta * kl)
