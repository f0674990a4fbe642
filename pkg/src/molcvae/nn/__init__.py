"""Dense networks, the β-ELBO and its analytic gradients."""

from molcvae.nn.losses import (
    LossBreakdown,
    NonFiniteError,
    elbo_loss,
    kl_loss,
    kl_monte_carlo,
    recon_loss,
    segment_log_softmax,
    segment_softmax,
)
from molcvae.nn.network import (
    Architecture,
    ModelParams,
    StepResult,
    decode_probabilities,
    decoder_forward,
    encoder_forward,
    loss_and_grads,
    loss_value,
    reparameterize,
)

__all__ = [
    "Architecture",
    "LossBreakdown",
    "ModelParams",
    "NonFiniteError",
    "StepResult",
    "decode_probabilities",
    "decoder_forward",
    "elbo_loss",
    "encoder_forward",
    "kl_loss",
    "kl_monte_carlo",
    "loss_and_grads",
    "loss_value",
    "recon_loss",
    "reparameterize",
    "segment_log_softmax",
    "segment_softmax",
]
