"""Conditional generation from a trained checkpoint."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from molcvae.chem import ChemError, write_smiles
from molcvae.codec import classes_from_flat, decode, hard_from_classes
from molcvae.nn import decode_probabilities
from molcvae.pipeline.training import Checkpoint
from molcvae.props import CONDITION_KEYS, PROPERTY_NAMES, ConditionVector, PropertyVector, compute_properties

GENERATION_COLUMNS = ("smiles", "valid", "clogp", "cmr", "qed", "sas", *CONDITION_KEYS, "reason")


class ConfigMismatchError(ValueError):
    """The requested condition does not fit the checkpoint's training conditions."""


@dataclass(frozen=True)
class Attempt:
    """One decoded latent sample; invalid attempts carry a reason instead of a molecule."""

    smiles: str | None
    valid: bool
    reason: str
    properties: PropertyVector | None
    condition: ConditionVector


def check_condition(ckpt: Checkpoint, condition: ConditionVector) -> None:
    trained = ckpt.condition_mask
    if condition.active != trained:
        want = ",".join(n for n, on in zip(PROPERTY_NAMES, trained) if on) or "none"
        got = ",".join(condition.active_names()) or "none"
        raise ConfigMismatchError(f"checkpoint was trained with conditions [{want}] but [{got}] was requested")


def _properties(mol) -> PropertyVector | None:
    try:
        return compute_properties(mol)
    except ChemError:
        return None


def sample(ckpt: Checkpoint, condition: ConditionVector, n: int, seed: int,
           batch: int = 500) -> list[Attempt]:
    """Decode ``n`` draws ``z ~ N(0, I)`` by per-segment argmax."""
    check_condition(ckpt, condition)
    if n < 0:
        raise ValueError("n must be non-negative")
    rng = np.random.Generator(np.random.PCG64(seed))
    latent = ckpt.params.arch.latent_dim
    c_row = condition.network_input()
    out: list[Attempt] = []
    with threadpool_limits(limits=1):
        for start in range(0, n, batch):
            m = min(batch, n - start)
            z = rng.standard_normal((m, latent))
            probs = decode_probabilities(ckpt.params, z, np.tile(c_row, (m, 1)))
            for row in probs:
                mol = decode(hard_from_classes(*classes_from_flat(row)))
                if not mol:
                    out.append(Attempt(None, False, mol.reason, None, condition))
                    continue
                out.append(Attempt(write_smiles(mol), True, "", _properties(mol), condition))
    return out


def _fmt(x: float | None) -> str:
    return "" if x is None or math.isnan(x) else repr(float(x))


def write_generation(path: str | Path, attempts: Sequence[Attempt]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\t".join(GENERATION_COLUMNS) + "\n")
        for a in attempts:
            props = a.properties.as_tuple() if a.properties else (None,) * 4
            cond = [f"{v:g}" if on else "" for v, on in zip(a.condition.values, a.condition.active)]
            row = [a.smiles or "", "1" if a.valid else "0", *map(_fmt, props), *cond, a.reason]
            fh.write("\t".join(row) + "\n")


def read_generation(path: str | Path) -> list[Attempt]:
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh, delimiter="\t")
        if reader.fieldnames is None:
            return out
        if tuple(reader.fieldnames) != GENERATION_COLUMNS:
            raise ValueError(f"{path} is not a generation file")
        for row in reader:
            valid = row["valid"] == "1"
            props = None
            if valid and row["clogp"]:
                props = PropertyVector(*(float(row[k]) for k in PROPERTY_NAMES))
            active = tuple(bool(row[k]) for k in CONDITION_KEYS)
            values = tuple(float(row[k]) if row[k] else 0.0 for k in CONDITION_KEYS)
            cond = ConditionVector(values, active, allow_offgrid=True)
            out.append(Attempt(row["smiles"] or None, valid, row["reason"], props, cond))
    return out
