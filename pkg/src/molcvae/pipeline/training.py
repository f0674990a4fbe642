"""Training loop, loss curves and checkpoints.

A run is fully determined by its :class:`TrainingConfig`, the training
matrices and the seed: one PCG64 stream initialises the weights, shuffles
every epoch and draws the reparameterisation noise, and BLAS is pinned to
one thread so reductions happen in a fixed order.
"""

from __future__ import annotations

import io
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from molcvae.nn import Architecture, LossBreakdown, ModelParams, NonFiniteError, loss_and_grads
from molcvae.optim import DEFAULT_LR, DEFAULT_META_LR, OPTIMIZERS, Adam, make_optimizer
from molcvae.pipeline.container import read_container, to_bytes
from molcvae.props import PROPERTY_NAMES, ConditionVector, PropertyVector, active_mask

CHECKPOINT_FORMAT = "molcvae-checkpoint"
CHECKPOINT_VERSION = 1
BETA_GRID: tuple[float, ...] = (0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0)


class DivergenceError(FloatingPointError):
    """Training produced a non-finite value."""

    def __init__(self, epoch: int, batch: int, component: str):
        super().__init__(f"non-finite {component} at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch
        self.component = component


@dataclass(frozen=True)
class TrainingConfig:
    beta: float = 1.0
    epochs: int = 100
    batch_size: int = 256
    optimizer: str = "adam"
    learning_rate: float = DEFAULT_LR
    meta_lr: float = DEFAULT_META_LR
    seed: int = 0
    conditions: tuple[str, ...] = ()
    max_atoms: int = 16
    z_samples: int = 1
    checkpoint_every: int = 0
    encoder_hidden: tuple[int, ...] = (1024, 512)
    latent_dim: int = 128
    decoder_hidden: tuple[int, ...] = (512, 1024)

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.epochs < 0 or self.batch_size < 1 or self.z_samples < 1:
            raise ValueError("epochs must be >= 0; batch size and z samples >= 1")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if not self.learning_rate > 0:
            raise ValueError("learning rate must be positive")
        mask = active_mask(self.conditions)
        object.__setattr__(self, "conditions", tuple(n for n, on in zip(PROPERTY_NAMES, mask) if on))
        object.__setattr__(self, "encoder_hidden", tuple(self.encoder_hidden))
        object.__setattr__(self, "decoder_hidden", tuple(self.decoder_hidden))

    @property
    def mask(self) -> tuple[bool, ...]:
        return active_mask(self.conditions)

    def architecture(self) -> Architecture:
        return Architecture(
            cond_dim=len(self.conditions), encoder_hidden=self.encoder_hidden, latent_dim=self.latent_dim,
            decoder_hidden=self.decoder_hidden,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("conditions", "encoder_hidden", "decoder_hidden"):
            d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> TrainingConfig:
        d = dict(d)
        for k in ("conditions", "encoder_hidden", "decoder_hidden"):
            if k in d:
                d[k] = tuple(d[k])
        return cls(**d)


def condition_matrix(properties: np.ndarray, conditions: Sequence[str]) -> np.ndarray:
    """Grid-bucketed, scaled conditions per record (teacher forcing)."""
    mask = list(active_mask(conditions))
    k = sum(mask)
    out = np.zeros((len(properties), k))
    if k:
        for i, row in enumerate(properties):
            out[i] = ConditionVector.from_properties(PropertyVector(*map(float, row)), mask).network_input()
    return out


@dataclass
class Checkpoint:
    config: TrainingConfig
    params: ModelParams
    optimizer: Adam
    epoch: int
    history: list[tuple[float, float, float]] = field(default_factory=list)
    rng_state: dict = field(default_factory=dict)

    def to_bytes(self) -> bytes:
        header = {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "config": self.config.to_dict(),
            "architecture": self.params.arch.to_dict(),
            "epoch": self.epoch,
            "history": [list(row) for row in self.history],
            "rng": _rng_to_json(self.rng_state),
            "optimizer": self.optimizer.state_scalars(),
        }
        arrays = {f"param/{k}": v for k, v in self.params.items()}
        arrays.update({f"opt/{k}": v for k, v in self.optimizer.state_arrays().items()})
        return to_bytes(header, arrays)

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: str | Path) -> Checkpoint:
        header, arrays = read_container(path)
        if header.get("format") != CHECKPOINT_FORMAT:
            raise ValueError(f"{path} is not a checkpoint")
        if header.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {header.get('version')}")
        config = TrainingConfig.from_dict(header["config"])
        arch = Architecture.from_dict(header["architecture"])
        params = ModelParams(arch, {k[6:]: v for k, v in arrays.items() if k.startswith("param/")})
        scalars = header["optimizer"]
        opt = make_optimizer(scalars["name"], scalars["alpha"], scalars.get("meta_lr", DEFAULT_META_LR))
        opt.load_state(scalars, {k[4:]: v for k, v in arrays.items() if k.startswith("opt/")})
        return cls(config, params, opt, header["epoch"], [tuple(r) for r in header["history"]],
                   _rng_from_json(header["rng"]))

    @property
    def condition_mask(self) -> tuple[bool, ...]:
        return self.config.mask


def _rng_to_json(state: dict) -> dict:
    # PCG64 state integers exceed 2**64; store them as decimal strings
    if not state:
        return {}
    s = state["state"]
    return {
        "bit_generator": state["bit_generator"],
        "state": {"state": str(s["state"]), "inc": str(s["inc"])},
        "has_uint32": str(state["has_uint32"]),
        "uinteger": str(state["uinteger"]),
    }


def _rng_from_json(state: dict) -> dict:
    if not state:
        return {}
    s = state["state"]
    return {
        "bit_generator": state["bit_generator"],
        "state": {"state": int(s["state"]), "inc": int(s["inc"])},
        "has_uint32": int(state["has_uint32"]),
        "uinteger": int(state["uinteger"]),
    }


def format_loss_csv(history: Sequence[tuple[float, float, float]]) -> str:
    buf = io.StringIO()
    buf.write("epoch,recon,kl,total\n")
    for k, (r, kl, t) in enumerate(history, start=1):
        buf.write(f"{k},{r!r},{kl!r},{t!r}\n")
    return buf.getvalue()


EpochCallback = Callable[[int, LossBreakdown, "Checkpoint"], None]


def train(x: np.ndarray, properties: np.ndarray | None, config: TrainingConfig,
          resume: Checkpoint | None = None, on_epoch: EpochCallback | None = None) -> Checkpoint:
    """Train (or continue training) on one-hot matrices ``x``.

    ``properties`` holds the true ``(n, 4)`` property rows and is only
    needed when the config has active conditions. The last incomplete
    batch of an epoch is kept; the epoch loss is the sample-weighted mean.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    n = len(x)
    if n == 0:
        raise ValueError("training set is empty")
    if config.conditions:
        if properties is None:
            raise ValueError("conditioned training needs property values")
        cond = condition_matrix(np.asarray(properties, dtype=float), config.conditions)
    else:
        cond = np.zeros((n, 0))
    # overflow is caught by the explicit finiteness checks and reported as divergence
    with threadpool_limits(limits=1), np.errstate(over="ignore", invalid="ignore"):
        if resume is None:
            rng = np.random.Generator(np.random.PCG64(config.seed))
            arch = config.architecture()
            params = ModelParams.initialize(arch, rng)
            opt = make_optimizer(config.optimizer, config.learning_rate, config.meta_lr)
            ckpt = Checkpoint(config, params, opt, 0, [], rng.bit_generator.state)
        else:
            if resume.config.to_dict() | {"epochs": 0} != config.to_dict() | {"epochs": 0}:
                raise ValueError("resume config differs from the checkpoint's config")
            ckpt = resume
            ckpt.config = config
            rng = np.random.Generator(np.random.PCG64())
            rng.bit_generator.state = resume.rng_state
        latent = ckpt.params.arch.latent_dim
        for epoch in range(ckpt.epoch + 1, config.epochs + 1):
            perm = rng.permutation(n)
            sums = np.zeros(3)
            for b, start in enumerate(range(0, n, config.batch_size), start=1):
                idx = perm[start:start + config.batch_size]
                shape = (config.z_samples, len(idx), latent) if config.z_samples > 1 else (len(idx), latent)
                eps = rng.standard_normal(shape)
                try:
                    step = loss_and_grads(ckpt.params, x[idx], cond[idx], eps, config.beta)
                    ckpt.optimizer.step(ckpt.params.arrays, step.grads)
                except NonFiniteError as exc:
                    raise DivergenceError(epoch, b, exc.where) from exc
                except FloatingPointError as exc:
                    raise DivergenceError(epoch, b, str(exc)) from exc
                sums += len(idx) * np.array(step.loss.as_row())
            recon, kl, total = (float(v) for v in sums / n)
            if not np.isfinite(total):
                raise DivergenceError(epoch, 0, "epoch loss")
            ckpt.history.append((recon, kl, total))
            ckpt.epoch = epoch
            ckpt.rng_state = rng.bit_generator.state
            if on_epoch is not None:
                on_epoch(epoch, LossBreakdown(recon, kl, config.beta, total), ckpt)
    return ckpt
