"""Scikit-learn style wrapper around training, encoding and sampling."""

from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from molcvae.nn import encoder_forward, decode_probabilities, loss_value
from molcvae.pipeline.sampling import Attempt, sample
from molcvae.pipeline.training import Checkpoint, TrainingConfig, condition_matrix, train
from molcvae.props import ConditionVector
from molcvae.validation import check_inputs


class BetaCVAE(BaseEstimator, TransformerMixin):
    """β-weighted conditional VAE over one-hot molecular graph matrices.

    Parameters mirror :class:`~molcvae.pipeline.training.TrainingConfig`.
    ``X`` is either a sequence of SMILES or an ``(n, 760)`` one-hot array;
    ``y`` optionally supplies ``(n, 4)`` properties (ClogP, CMR, QED, SAS)
    and is required for array input when ``conditions`` is non-empty.
    ``transform`` returns the posterior means.
    """

    def __init__(self, beta: float = 1.0, conditions: Sequence[str] = (), epochs: int = 100,
                 batch_size: int = 256, optimizer: str = "adam", learning_rate: float = 0.005,
                 meta_lr: float = 1e-3, latent_dim: int = 128, encoder_hidden: Sequence[int] = (1024, 512),
                 decoder_hidden: Sequence[int] = (512, 1024), z_samples: int = 1, random_state: int = 0):
        self.beta = beta
        self.conditions = conditions
        self.epochs = epochs
        self.batch_size = batch_size
        self.optimizer = optimizer
        self.learning_rate = learning_rate
        self.meta_lr = meta_lr
        self.latent_dim = latent_dim
        self.encoder_hidden = encoder_hidden
        self.decoder_hidden = decoder_hidden
        self.z_samples = z_samples
        self.random_state = random_state

    def _config(self) -> TrainingConfig:
        return TrainingConfig(
            beta=self.beta, epochs=self.epochs, batch_size=self.batch_size, optimizer=self.optimizer,
            learning_rate=self.learning_rate, meta_lr=self.meta_lr, seed=int(self.random_state),
            conditions=tuple(self.conditions), z_samples=self.z_samples, encoder_hidden=tuple(self.encoder_hidden),
            latent_dim=self.latent_dim, decoder_hidden=tuple(self.decoder_hidden),
        )

    def fit(self, X, y=None) -> BetaCVAE:
        config = self._config()
        flat, props = check_inputs(X, y, need_properties=bool(config.conditions))
        self.checkpoint_ = train(flat, props, config)
        self.history_ = list(self.checkpoint_.history)
        self.n_features_in_ = flat.shape[1]
        return self

    @classmethod
    def from_checkpoint(cls, ckpt: Checkpoint) -> BetaCVAE:
        c = ckpt.config
        est = cls(c.beta, c.conditions, c.epochs, c.batch_size, c.optimizer, c.learning_rate, c.meta_lr,
                  c.latent_dim, c.encoder_hidden, c.decoder_hidden, c.z_samples, c.seed)
        est.checkpoint_ = ckpt
        est.history_ = list(ckpt.history)
        est.n_features_in_ = ckpt.params.arch.input_dim
        return est

    def _conditions(self, props: np.ndarray | None, n: int) -> np.ndarray:
        conds = self.checkpoint_.config.conditions
        return condition_matrix(props, conds) if conds else np.zeros((n, 0))

    def transform(self, X, y=None) -> np.ndarray:
        """Posterior means ``mu`` of shape ``(n, latent_dim)``."""
        check_is_fitted(self, "checkpoint_")
        conds = self.checkpoint_.config.conditions
        flat, props = check_inputs(X, y, need_properties=bool(conds))
        return encoder_forward(self.checkpoint_.params, flat, self._conditions(props, len(flat))).mu

    def fit_transform(self, X, y=None, **fit_params) -> np.ndarray:
        return self.fit(X, y).transform(X, y)

    def score(self, X, y=None) -> float:
        """Negative β-ELBO (higher is better) with a fixed noise draw."""
        check_is_fitted(self, "checkpoint_")
        conds = self.checkpoint_.config.conditions
        flat, props = check_inputs(X, y, need_properties=bool(conds))
        eps = np.random.default_rng(self.random_state).standard_normal((len(flat), self.checkpoint_.params.arch.latent_dim))
        return -loss_value(self.checkpoint_.params, flat, self._conditions(props, len(flat)), eps,
                           self.checkpoint_.config.beta)

    def decode(self, Z, condition: ConditionVector | str | None = None) -> np.ndarray:
        """Per-segment probabilities ``(n, 760)`` for latent points ``Z``."""
        check_is_fitted(self, "checkpoint_")
        cond = _as_condition(condition)
        Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
        return decode_probabilities(self.checkpoint_.params, Z, np.tile(cond.network_input(), (len(Z), 1)))

    def sample(self, n: int, condition: ConditionVector | str | None = None,
               random_state: int | None = None) -> list[Attempt]:
        """Decode ``n`` prior draws; see :func:`molcvae.pipeline.sampling.sample`."""
        check_is_fitted(self, "checkpoint_")
        seed = self.random_state if random_state is None else random_state
        return sample(self.checkpoint_, _as_condition(condition), n, int(seed))


def _as_condition(condition: ConditionVector | str | None) -> ConditionVector:
    if condition is None:
        return ConditionVector.none()
    if isinstance(condition, str):
        return ConditionVector.parse(condition)
    return condition
