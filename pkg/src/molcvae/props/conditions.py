"""Property vectors, condition grids and satisfaction checks.

Conditions are carried in scaled units: CMR is multiplied by 0.1 and QED
by 10, so all four targets live on comparable single-digit grids. The
tolerance checks convert back and compare in property units.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from molcvae.chem.molecule import Molecule
from molcvae.props.crippen import crippen_contributions
from molcvae.props.descriptors import descriptors
from molcvae.props.qed import qed_from_descriptors
from molcvae.props.sas import sas

PROPERTY_NAMES: tuple[str, ...] = ("clogp", "cmr", "qed", "sas")
CONDITION_KEYS: tuple[str, ...] = ("c1", "c2", "c3", "c4")
SCALES: tuple[float, ...] = (1.0, 0.1, 10.0, 1.0)
GRIDS: tuple[tuple[float, ...], ...] = (
    (0.0, 1.0, 2.0, 3.0, 4.0, 5.0),
    (4.0, 5.0, 6.0, 7.0, 8.0),
    (5.0, 6.0, 7.0, 8.0, 9.0),
    (3.0, 4.0, 5.0, 6.0),
)
# satisfaction half-widths, in property units
TOLERANCES: tuple[float, ...] = (0.5, 5.0, 0.05, 0.5)
GHOSE_CLOGP = (-0.4, 5.6)
GHOSE_CMR = (40.0, 130.0)
# absorbs representation error at inclusive boundaries (0.75 - 0.7 > 0.05 in binary)
_SLACK = 1e-9


class ConditionError(ValueError):
    """Malformed or off-grid condition specification."""


@dataclass(frozen=True)
class PropertyVector:
    clogp: float
    cmr: float
    qed: float
    sas: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.clogp, self.cmr, self.qed, self.sas)


def compute_properties(mol: Molecule) -> PropertyVector:
    logp, mr = crippen_contributions(mol)
    return PropertyVector(logp, mr, qed_from_descriptors(descriptors(mol), logp), sas(mol))


def _normalize_active(active: Iterable[str]) -> tuple[bool, ...]:
    wanted = set()
    for name in active:
        name = name.strip().lower()
        if not name or name == "none":
            continue
        if name in PROPERTY_NAMES:
            wanted.add(PROPERTY_NAMES.index(name))
        elif name in CONDITION_KEYS:
            wanted.add(CONDITION_KEYS.index(name))
        else:
            raise ConditionError(f"unknown condition {name!r}; use {', '.join(PROPERTY_NAMES)}")
    return tuple(k in wanted for k in range(4))


def nearest_grid(index: int, scaled: float) -> float:
    """Closest grid value; ties go to the lower value."""
    grid = GRIDS[index]
    return min(grid, key=lambda g: (abs(g - scaled), g))


@dataclass(frozen=True)
class ConditionVector:
    """Scaled targets ``(c1, c2, c3, c4)`` and which of them are in force."""

    values: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    active: tuple[bool, bool, bool, bool] = (False, False, False, False)
    allow_offgrid: bool = field(default=False, compare=False)

    def __post_init__(self):
        if len(self.values) != 4 or len(self.active) != 4:
            raise ConditionError("condition vectors have exactly four slots")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "active", tuple(bool(a) for a in self.active))
        for k, (v, on) in enumerate(zip(self.values, self.active)):
            if not on:
                continue
            if not np.isfinite(v):
                raise ConditionError(f"{CONDITION_KEYS[k]} must be finite")
            if not self.allow_offgrid and not any(abs(v - g) < 1e-9 for g in GRIDS[k]):
                raise ConditionError(
                    f"{CONDITION_KEYS[k]}={v:g} is off the grid {list(GRIDS[k])}"
                )

    @classmethod
    def none(cls) -> ConditionVector:
        return cls()

    @classmethod
    def from_mapping(cls, spec: Mapping[str, float], allow_offgrid: bool = False) -> ConditionVector:
        values = [0.0] * 4
        active = [False] * 4
        for key, value in spec.items():
            key = key.strip().lower()
            if key in CONDITION_KEYS:
                k = CONDITION_KEYS.index(key)
            elif key in PROPERTY_NAMES:
                k = PROPERTY_NAMES.index(key)
            else:
                raise ConditionError(f"unknown condition key {key!r}")
            values[k] = float(value)
            active[k] = True
        return cls(tuple(values), tuple(active), allow_offgrid)

    @classmethod
    def parse(cls, text: str, allow_offgrid: bool = False) -> ConditionVector:
        """Parse ``"c1=2,c2=6.0"`` (scaled units); empty or ``none`` means unconditioned."""
        text = text.strip()
        if not text or text.lower() == "none":
            return cls()
        spec = {}
        for part in text.split(","):
            if "=" not in part:
                raise ConditionError(f"expected key=value, got {part!r}")
            key, value = part.split("=", 1)
            try:
                spec[key] = float(value)
            except ValueError as exc:
                raise ConditionError(f"bad value in {part!r}") from exc
        return cls.from_mapping(spec, allow_offgrid)

    @classmethod
    def from_properties(cls, props: PropertyVector, active: Iterable[str] | Sequence[bool]) -> ConditionVector:
        """Bucket true properties onto the grids (training-time teacher forcing)."""
        items = list(active)
        if items and all(isinstance(a, bool) for a in items):
            if len(items) != 4:
                raise ConditionError("a boolean mask needs four entries")
            mask = tuple(items)
        else:
            mask = _normalize_active(items)
        values = tuple(
            nearest_grid(k, x * SCALES[k]) if on else 0.0
            for k, (x, on) in enumerate(zip(props.as_tuple(), mask))
        )
        return cls(values, mask)

    @property
    def n_active(self) -> int:
        return sum(self.active)

    def active_names(self) -> tuple[str, ...]:
        return tuple(n for n, on in zip(PROPERTY_NAMES, self.active) if on)

    def network_input(self) -> np.ndarray:
        """Scaled values of the active slots, in slot order."""
        return np.array([v for v, on in zip(self.values, self.active) if on], dtype=float)

    def targets(self) -> dict[str, float]:
        """Active targets in property units."""
        return {
            PROPERTY_NAMES[k]: v / SCALES[k] for k, (v, on) in enumerate(zip(self.values, self.active)) if on
        }

    def describe(self) -> str:
        if not self.n_active:
            return "none"
        return ",".join(f"{CONDITION_KEYS[k]}={v:g}" for k, (v, on) in enumerate(zip(self.values, self.active)) if on)


def active_mask(names: Iterable[str]) -> tuple[bool, ...]:
    """Mask from property names or keys, e.g. ``["clogp", "cmr"]``."""
    return _normalize_active(names)


def ghose_pass(p: PropertyVector) -> tuple[bool, bool]:
    """Inclusive interval membership for ClogP and CMR."""
    return (
        GHOSE_CLOGP[0] <= p.clogp <= GHOSE_CLOGP[1],
        GHOSE_CMR[0] <= p.cmr <= GHOSE_CMR[1],
    )


def condition_satisfied(p: PropertyVector, c: ConditionVector) -> dict[str, bool]:
    """Per-property check ``|property - target| <= tolerance``; inactive slots pass."""
    out = {}
    for k, name in enumerate(PROPERTY_NAMES):
        if not c.active[k]:
            out[name] = True
            continue
        target = c.values[k] / SCALES[k]
        out[name] = abs(p.as_tuple()[k] - target) <= TOLERANCES[k] + _SLACK
    return out
