"""Ring perception: smallest set of smallest rings and derived counts."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from molcvae.chem.molecule import Molecule


@dataclass(frozen=True)
class RingInfo:
    """Ring data for one molecule.

    ``rings`` is the SSSR (a minimum cycle basis, size equal to the
    cyclomatic number). ``symmetric_rings`` adds every other relevant cycle,
    i.e. cycles that are not sums of strictly shorter ones, so symmetric
    cages report all equivalent rings. Membership counts, spiro and
    bridgehead counts are taken over ``symmetric_rings``.
    """

    rings: tuple[tuple[int, ...], ...]
    symmetric_rings: tuple[tuple[int, ...], ...]
    atom_ring_count: tuple[int, ...]
    ring_bonds: frozenset[int]
    smallest_ring_size: tuple[int, ...]
    num_spiro: int
    num_bridgehead: int

    def in_ring(self, atom: int) -> bool:
        return self.atom_ring_count[atom] > 0

    def in_ring_of_size(self, atom: int, size: int) -> bool:
        return any(len(r) == size and atom in r for r in self.symmetric_rings)

    def bond_in_ring(self, bond: int) -> bool:
        return bond in self.ring_bonds

    @property
    def num_rings(self) -> int:
        return len(self.rings)


def _bridges(mol: Molecule) -> set[int]:
    """Indices of bonds that are not in any cycle (Tarjan low-link)."""
    n = mol.num_atoms
    disc = [-1] * n
    low = [0] * n
    bridges: set[int] = set()
    timer = 0
    for root in range(n):
        if disc[root] != -1:
            continue
        stack = [(root, -1, iter(mol.neighbors[root]))]
        disc[root] = low[root] = timer
        timer += 1
        while stack:
            v, parent_bond, it = stack[-1]
            advanced = False
            for w, k in it:
                if k == parent_bond:
                    continue
                if disc[w] == -1:
                    disc[w] = low[w] = timer
                    timer += 1
                    stack.append((w, k, iter(mol.neighbors[w])))
                    advanced = True
                    break
                low[v] = min(low[v], disc[w])
            if not advanced:
                stack.pop()
                if stack:
                    u = stack[-1][0]
                    low[u] = min(low[u], low[v])
                    if low[v] > disc[u]:
                        bridges.add(parent_bond)
    return bridges


def _simple_cycles(mol: Molecule, ring_bonds: set[int]) -> list[tuple[int, ...]]:
    """All simple cycles over ring bonds, each listed once from its lowest atom."""
    adj: list[list[int]] = [[] for _ in range(mol.num_atoms)]
    for k in ring_bonds:
        b = mol.bonds[k]
        adj[b.a].append(b.b)
        adj[b.b].append(b.a)
    for nbrs in adj:
        nbrs.sort()
    cycles = []
    for start in range(mol.num_atoms):
        if not adj[start]:
            continue
        path = [start]
        on_path = {start}

        def extend(v: int) -> None:
            for w in adj[v]:
                if w == start and len(path) > 2 and path[1] < path[-1]:
                    cycles.append(tuple(path))
                elif w > start and w not in on_path:
                    path.append(w)
                    on_path.add(w)
                    extend(w)
                    path.pop()
                    on_path.discard(w)

        extend(start)
    return cycles


def _edge_mask(mol: Molecule, cycle: tuple[int, ...]) -> int:
    mask = 0
    for i in range(len(cycle)):
        k = mol.bond_index[tuple(sorted((cycle[i], cycle[i - 1])))]
        mask |= 1 << k
    return mask


class _GF2Basis:
    """Incremental row-reduced basis over GF(2) with integer bitmasks."""

    def __init__(self):
        self.pivots: dict[int, int] = {}

    def reduce(self, v: int) -> int:
        while v:
            top = v.bit_length() - 1
            row = self.pivots.get(top)
            if row is None:
                return v
            v ^= row
        return 0

    def add(self, v: int) -> bool:
        v = self.reduce(v)
        if not v:
            return False
        self.pivots[v.bit_length() - 1] = v
        return True


def perceive_rings(mol: Molecule) -> RingInfo:
    n = mol.num_atoms
    bridges = _bridges(mol)
    ring_bonds = {k for k in range(mol.num_bonds) if k not in bridges}
    cycles = _simple_cycles(mol, ring_bonds)
    cycles.sort(key=lambda c: (len(c), sorted(c)))
    masks = [_edge_mask(mol, c) for c in cycles]

    sssr: list[tuple[int, ...]] = []
    basis = _GF2Basis()
    for c, m in zip(cycles, masks):
        if basis.add(m):
            sssr.append(c)

    # relevant cycles: independent of all strictly shorter cycles
    relevant: list[tuple[int, ...]] = []
    shorter = _GF2Basis()
    i = 0
    while i < len(cycles):
        size = len(cycles[i])
        j = i
        while j < len(cycles) and len(cycles[j]) == size:
            j += 1
        for c, m in zip(cycles[i:j], masks[i:j]):
            if shorter.reduce(m):
                relevant.append(c)
        for m in masks[i:j]:
            shorter.add(m)
        i = j

    counts = [0] * n
    smallest = [0] * n
    for ring in relevant:
        for a in ring:
            counts[a] += 1
            if smallest[a] == 0 or len(ring) < smallest[a]:
                smallest[a] = len(ring)

    atom_sets = [set(r) for r in relevant]
    bond_sets = [{_pair_index(mol, r, t) for t in range(len(r))} for r in relevant]
    spiro: set[int] = set()
    bridgehead: set[int] = set()
    for p, q in combinations(range(len(relevant)), 2):
        shared = atom_sets[p] & atom_sets[q]
        if len(shared) == 1:
            spiro |= shared
        shared_bonds = bond_sets[p] & bond_sets[q]
        if len(shared_bonds) > 1:
            seen: dict[int, int] = {}
            for k in shared_bonds:
                b = mol.bonds[k]
                seen[b.a] = seen.get(b.a, 0) + 1
                seen[b.b] = seen.get(b.b, 0) + 1
            bridgehead |= {a for a, c in seen.items() if c == 1}

    return RingInfo(
        rings=tuple(sssr),
        symmetric_rings=tuple(relevant),
        atom_ring_count=tuple(counts),
        ring_bonds=frozenset(ring_bonds),
        smallest_ring_size=tuple(smallest),
        num_spiro=len(spiro),
        num_bridgehead=len(bridgehead),
    )


def _pair_index(mol: Molecule, ring: tuple[int, ...], t: int) -> int:
    a, b = ring[t], ring[t - 1]
    return mol.bond_index[(a, b) if a < b else (b, a)]
