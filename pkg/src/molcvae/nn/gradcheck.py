"""Central finite-difference checks of the analytic gradients on tiny networks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from molcvae.nn.network import Architecture, ModelParams, loss_and_grads, loss_value

BETAS = (0.01, 1.0, 10.0)
# Gradients below this magnitude are compared absolutely: there the central
# difference is dominated by roundoff (eps * |loss| / h), not by the derivative.
GRAD_FLOOR = 1e-6
# Minimum |pre-activation| so that no ReLU kink lies within h of the point.
KINK_MARGIN = 1e-3
# Kept small so the loss stays O(10) and central-difference roundoff stays far below GRAD_FLOOR.
BIAS_JITTER = 0.1


@dataclass(frozen=True)
class GradCheck:
    seed: int
    n_params: int
    worst_relative_error: float
    worst_parameter: str
    resamples: int


def random_one_hot(arch: Architecture, batch: int, rng: np.random.Generator) -> np.ndarray:
    x = np.zeros((batch, arch.input_dim))
    for start, width in arch.segments:
        x[np.arange(batch), start + rng.integers(0, width, batch)] = 1.0
    return x


def relative_error(analytic: float, numeric: float, floor: float = GRAD_FLOOR) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def check_tiny_network(seed: int, h: float = 1e-4, batch: int = 4, cond_dim: int | None = None,
                       beta: float | None = None) -> GradCheck:
    """Compare every analytic partial derivative of one random tiny net against a central difference.

    Biases get Gaussian jitter so that no pre-activation is exactly zero;
    draws with a pre-activation inside the kink margin are redrawn.
    """
    rng = np.random.default_rng(seed)
    arch = Architecture.tiny(cond_dim=seed % 3 if cond_dim is None else cond_dim)
    beta = BETAS[seed % len(BETAS)] if beta is None else beta
    resamples = 0
    while True:
        base = ModelParams.initialize(arch, rng)
        params = ModelParams(arch, {k: v + rng.normal(0.0, BIAS_JITTER, v.shape) if k.endswith(".b") else v
                                    for k, v in base.items()})
        x = random_one_hot(arch, batch, rng)
        c = rng.normal(size=(batch, arch.cond_dim))
        eps = rng.normal(size=(batch, arch.latent_dim))
        result = loss_and_grads(params, x, c, eps, beta)
        if result.min_abs_preactivation >= KINK_MARGIN:
            break
        resamples += 1
    worst, where, count = 0.0, "", 0
    for key, value in params.items():
        grad = result.grads[key]
        for idx in np.ndindex(value.shape):
            orig = value[idx]
            value[idx] = orig + h
            plus = loss_value(params, x, c, eps, beta)
            value[idx] = orig - h
            minus = loss_value(params, x, c, eps, beta)
            value[idx] = orig
            err = relative_error(float(grad[idx]), (plus - minus) / (2 * h))
            count += 1
            if err > worst:
                worst, where = err, f"{key}{list(idx)}"
    return GradCheck(seed, count, worst, where, resamples)
