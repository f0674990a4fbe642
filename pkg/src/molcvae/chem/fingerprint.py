"""Circular (Morgan/ECFP-style) fingerprints and Tanimoto similarity.

Environment identifiers are 32-bit integers built with the classic
``hash_combine`` mixing step, so that sparse identifiers are stable across
runs and usable as keys of fragment-score tables.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from molcvae.chem.elements import ATOMIC_NUMBER
from molcvae.chem.molecule import BondOrder, Molecule

_MASK = 0xFFFFFFFF
_GOLDEN = 0x9E3779B9
# bond type codes used in neighbour hashing
_BOND_CODE = {BondOrder.SINGLE: 1, BondOrder.DOUBLE: 2, BondOrder.TRIPLE: 3, BondOrder.AROMATIC: 12}


def hash_combine(seed: int, value: int) -> int:
    seed &= _MASK
    return (seed ^ ((value + _GOLDEN + ((seed << 6) & _MASK) + (seed >> 2)) & _MASK)) & _MASK


def hash_sequence(values) -> int:
    seed = 0
    for v in values:
        seed = hash_combine(seed, v & _MASK)
    return seed


def atom_invariants(mol: Molecule) -> list[int]:
    """Connectivity invariants: element, total degree, H count, charge, mass shift, ring flag."""
    info = mol.ring_info
    out = []
    for i, atom in enumerate(mol.atoms):
        parts = [ATOMIC_NUMBER[atom.element], mol.total_degree(i), atom.implicit_h, 0, 0]
        if info.in_ring(i):
            parts.append(1)
        out.append(hash_sequence(parts))
    return out


def morgan_environments(mol: Molecule, radius: int = 2) -> list[tuple[int, int, int]]:
    """All non-redundant circular environments as ``(identifier, atom, radius)``.

    An environment covering exactly the same bond set as one already
    emitted (at this or a smaller radius) is dropped and its atom stops
    growing.
    """
    n = mol.num_atoms
    current = atom_invariants(mol)
    envs = [(current[i], i, 0) for i in range(n)]
    dead = [mol.degree(i) == 0 for i in range(n)]
    neighborhoods = [0] * n
    seen: set[int] = set()
    for layer in range(radius):
        round_hoods = list(neighborhoods)
        new_inv = list(current)
        this_round = []
        for i in range(n):
            if dead[i]:
                continue
            nbrs = []
            for j, k in mol.neighbors[i]:
                round_hoods[i] |= 1 << k
                round_hoods[i] |= neighborhoods[j]
                nbrs.append((_BOND_CODE[mol.bonds[k].order], current[j]))
            nbrs.sort()
            inv = hash_combine(layer, current[i])
            for bt, ninv in nbrs:
                inv = hash_combine(inv, hash_sequence((bt, ninv)))
            new_inv[i] = inv
            this_round.append((round_hoods[i], inv, i))
        this_round.sort()
        for hood, inv, i in this_round:
            if hood not in seen:
                envs.append((inv, i, layer + 1))
                seen.add(hood)
            else:
                dead[i] = True
        neighborhoods = round_hoods
        current = new_inv
    return envs


def morgan_counts(mol: Molecule, radius: int = 2) -> Counter:
    """Sparse count fingerprint: identifier -> occurrences."""
    return Counter(inv for inv, _, _ in morgan_environments(mol, radius))


@dataclass(frozen=True)
class Fingerprint:
    bits: np.ndarray  # bool, length nbits
    radius: int = 2

    @property
    def nbits(self) -> int:
        return int(self.bits.shape[0])

    def on_bits(self) -> list[int]:
        return np.flatnonzero(self.bits).tolist()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Fingerprint):
            return NotImplemented
        return self.radius == other.radius and np.array_equal(self.bits, other.bits)

    def __hash__(self) -> int:
        return hash((self.radius, self.bits.tobytes()))


def morgan_fingerprint(mol: Molecule, radius: int = 2, nbits: int = 2048) -> Fingerprint:
    """Folded bit fingerprint; radius 2 corresponds to ECFP4."""
    if nbits <= 0:
        raise ValueError("nbits must be positive")
    bits = np.zeros(nbits, dtype=bool)
    for inv in morgan_counts(mol, radius):
        bits[inv % nbits] = True
    return Fingerprint(bits, radius)


def tanimoto(a: Fingerprint, b: Fingerprint) -> float:
    """|a & b| / |a | b|; two empty fingerprints are identical (1.0)."""
    if a.nbits != b.nbits:
        raise ValueError(f"fingerprint length mismatch: {a.nbits} vs {b.nbits}")
    union = int(np.count_nonzero(a.bits | b.bits))
    if union == 0:
        return 1.0
    return int(np.count_nonzero(a.bits & b.bits)) / union


def bulk_tanimoto(query: Fingerprint, matrix: np.ndarray) -> np.ndarray:
    """Similarity of ``query`` against each row of a boolean fingerprint matrix."""
    if matrix.shape[1] != query.nbits:
        raise ValueError("fingerprint length mismatch")
    inter = np.count_nonzero(matrix & query.bits, axis=1)
    union = np.count_nonzero(matrix | query.bits, axis=1)
    out = np.ones(matrix.shape[0], dtype=float)
    nz = union > 0
    out[nz] = inter[nz] / union[nz]
    return out
