"""Atom-contribution logP (ClogP) and molar refractivity (CMR)."""

from __future__ import annotations

from dataclasses import dataclass

from molcvae.chem.molecule import ChemError, Molecule
from molcvae.chem.smarts import matches_at
from molcvae.props.tables import CrippenTable, crippen_table


class TypingError(ChemError):
    """An atom matched no row of the contribution table."""


@dataclass(frozen=True)
class AtomContribution:
    atom: int  # index in the hydrogen-expanded molecule
    label: str
    logp: float
    mr: float


def assign_types(mol: Molecule, table: CrippenTable | None = None) -> list[AtomContribution]:
    """Type every atom, hydrogens included, by first matching table row.

    Hydrogens are made explicit first so that rows keyed on ``[#1]`` see
    them. Indices below ``mol.num_atoms`` are the heavy atoms of ``mol``.
    """
    table = table or crippen_table()
    full = mol.with_explicit_hydrogens()
    assigned: list[AtomContribution | None] = [None] * full.num_atoms
    remaining = set(range(full.num_atoms))
    for entry in table.entries:
        if not remaining:
            break
        for i in sorted(remaining):
            if matches_at(full, entry.pattern, i):
                assigned[i] = AtomContribution(i, entry.label, entry.logp, entry.mr)
                remaining.discard(i)
    if remaining:
        i = min(remaining)
        raise TypingError(f"atom {i} ({full.atoms[i].element}) matches no contribution pattern")
    return assigned  # type: ignore[return-value]


def crippen_contributions(mol: Molecule, table: CrippenTable | None = None) -> tuple[float, float]:
    """``(logp, mr)`` summed over all typed atoms."""
    contribs = assign_types(mol, table)
    return sum(c.logp for c in contribs), sum(c.mr for c in contribs)


def clogp(mol: Molecule, table: CrippenTable | None = None) -> float:
    return crippen_contributions(mol, table)[0]


def cmr(mol: Molecule, table: CrippenTable | None = None) -> float:
    return crippen_contributions(mol, table)[1]
