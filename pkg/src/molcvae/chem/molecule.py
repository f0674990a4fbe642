"""Molecular graph types and the chemistry exception hierarchy."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from functools import cached_property
from typing import Sequence

from molcvae.chem.elements import ATOMIC_MASS, VALENCES


class ChemError(ValueError):
    """Base class for chemistry input errors."""


class SmilesSyntaxError(ChemError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class VocabularyError(ChemError):
    """Element outside the supported vocabulary."""


class ChargeError(ChemError):
    """Charged or multi-fragment input."""


class ValenceError(ChemError):
    """Valence cannot be satisfied (includes failed kekulization)."""


class BondOrder(IntEnum):
    # values double as adjacency class indices in the graph codec
    SINGLE = 1
    DOUBLE = 2
    TRIPLE = 3
    AROMATIC = 4


@dataclass(frozen=True)
class Atom:
    element: str
    aromatic: bool = False
    implicit_h: int = 0


@dataclass(frozen=True)
class Bond:
    a: int
    b: int
    order: BondOrder

    def __post_init__(self):
        if self.a == self.b:
            raise ChemError("bond endpoints must be distinct")
        if self.a > self.b:
            a, b = self.b, self.a
            object.__setattr__(self, "a", a)
            object.__setattr__(self, "b", b)
        object.__setattr__(self, "order", BondOrder(self.order))

    def other(self, idx: int) -> int:
        return self.b if idx == self.a else self.a


@dataclass(frozen=True)
class Molecule:
    """Undirected labelled graph of heavy atoms with implicit hydrogens.

    Instances are immutable; derived data (adjacency, Kekulé form, rings)
    is computed lazily and cached on the instance.
    """

    atoms: tuple[Atom, ...]
    bonds: tuple[Bond, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        object.__setattr__(self, "bonds", tuple(self.bonds))
        seen = set()
        for bond in self.bonds:
            if bond.b >= len(self.atoms):
                raise ChemError(f"bond ({bond.a}, {bond.b}) references a missing atom")
            key = (bond.a, bond.b)
            if key in seen:
                raise ChemError(f"duplicate bond between atoms {bond.a} and {bond.b}")
            seen.add(key)

    def __len__(self) -> int:
        return len(self.atoms)

    @property
    def num_atoms(self) -> int:
        return len(self.atoms)

    @property
    def num_bonds(self) -> int:
        return len(self.bonds)

    @cached_property
    def neighbors(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        """Per atom, ``(neighbor index, bond index)`` pairs in bond order."""
        adj: list[list[tuple[int, int]]] = [[] for _ in self.atoms]
        for k, bond in enumerate(self.bonds):
            adj[bond.a].append((bond.b, k))
            adj[bond.b].append((bond.a, k))
        return tuple(tuple(x) for x in adj)

    @cached_property
    def bond_index(self) -> dict[tuple[int, int], int]:
        return {(b.a, b.b): k for k, b in enumerate(self.bonds)}

    def bond_between(self, i: int, j: int) -> Bond | None:
        k = self.bond_index.get((i, j) if i < j else (j, i))
        return None if k is None else self.bonds[k]

    def degree(self, i: int) -> int:
        return len(self.neighbors[i])

    def total_degree(self, i: int) -> int:
        return len(self.neighbors[i]) + self.atoms[i].implicit_h

    @cached_property
    def kekule_orders(self) -> tuple[int, ...]:
        """Bond orders with aromatic bonds resolved to single/double."""
        from molcvae.chem.aromaticity import kekulize

        return kekulize(self)

    def valence(self, i: int) -> int:
        """Kekulé bond-order sum plus implicit hydrogens of atom ``i``."""
        orders = self.kekule_orders
        return sum(orders[k] for _, k in self.neighbors[i]) + self.atoms[i].implicit_h

    @cached_property
    def ring_info(self):
        from molcvae.chem.rings import perceive_rings

        return perceive_rings(self)

    def is_connected(self) -> bool:
        if not self.atoms:
            return False
        seen = {0}
        stack = [0]
        while stack:
            i = stack.pop()
            for j, _ in self.neighbors[i]:
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
        return len(seen) == len(self.atoms)

    @property
    def heavy_atom_count(self) -> int:
        return len(self.atoms)

    @property
    def hydrogen_count(self) -> int:
        return sum(a.implicit_h for a in self.atoms)

    def molecular_weight(self) -> float:
        return sum(ATOMIC_MASS[a.element] + a.implicit_h * ATOMIC_MASS["H"] for a in self.atoms)

    def with_explicit_hydrogens(self) -> Molecule:
        """Copy where each implicit hydrogen is a separate ``H`` atom.

        Heavy atoms keep their indices; hydrogens are appended after them.
        """
        atoms = [Atom(a.element, a.aromatic, 0) for a in self.atoms]
        bonds = list(self.bonds)
        for i, a in enumerate(self.atoms):
            for _ in range(a.implicit_h):
                atoms.append(Atom("H"))
                bonds.append(Bond(i, len(atoms) - 1, BondOrder.SINGLE))
        return Molecule(tuple(atoms), tuple(bonds))

    def renumbered(self, order: Sequence[int]) -> Molecule:
        """Return the molecule with atom ``order[k]`` placed at position ``k``."""
        if sorted(order) != list(range(len(self.atoms))):
            raise ValueError("order must be a permutation of atom indices")
        new_index = {old: new for new, old in enumerate(order)}
        atoms = tuple(self.atoms[old] for old in order)
        bonds = sorted(
            (Bond(new_index[b.a], new_index[b.b], b.order) for b in self.bonds),
            key=lambda b: (b.a, b.b),
        )
        return Molecule(atoms, tuple(bonds))


def check_valence(mol: Molecule) -> bool:
    """True iff every atom fits one of its element's allowed valences.

    Aromatic systems are judged on their Kekulé form; a molecule whose
    aromatic bonds cannot be kekulized fails the check.
    """
    try:
        orders = mol.kekule_orders
    except ValenceError:
        return False
    for i, atom in enumerate(mol.atoms):
        if atom.implicit_h < 0:
            return False
        used = sum(orders[k] for _, k in mol.neighbors[i]) + atom.implicit_h
        if used not in VALENCES.get(atom.element, ()):
            return False
    return True
