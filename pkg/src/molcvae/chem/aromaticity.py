"""Kekulization and Hückel aromaticity perception."""

from __future__ import annotations

from enum import IntEnum
from itertools import combinations
from typing import Sequence

import networkx as nx

from molcvae.chem.elements import AROMATIC_CAPABLE, OUTER_ELECTRONS, VALENCES, default_valence
from molcvae.chem.molecule import Atom, Bond, BondOrder, Molecule, ValenceError

# Pauling electronegativities; decides whether an exocyclic double bond
# withdraws the ring atom's pi electron
ELECTRONEGATIVITY = {
    "H": 2.20, "C": 2.55, "N": 3.04, "O": 3.44, "F": 3.98,
    "Si": 1.90, "S": 2.58, "Cl": 3.16, "Br": 2.96,
}


def max_weight_pi_matching(
    n: int,
    edges: Sequence[tuple[int, int]],
    required: set[int],
    optional: set[int],
) -> dict[int, int] | None:
    """Pair atoms along aromatic bonds so each paired bond becomes double.

    Every ``required`` atom must be paired; ``optional`` atoms are paired
    where possible. Returns a partner map, or ``None`` when no assignment
    covers all required atoms.
    """
    cand = required | optional
    if not cand:
        return {}
    g = nx.Graph()
    g.add_nodes_from(sorted(cand))
    big = 4 * n + 4
    for a, b in edges:
        if a in cand and b in cand:
            w = (big if a in required else 1) + (big if b in required else 1)
            g.add_edge(a, b, weight=w)
    matching = nx.max_weight_matching(g, maxcardinality=False)
    partner: dict[int, int] = {}
    for a, b in matching:
        partner[a] = b
        partner[b] = a
    if any(a not in partner for a in required):
        return None
    return partner


def kekulize(mol: Molecule) -> tuple[int, ...]:
    """Resolve aromatic bonds into single/double bonds.

    Hydrogen counts are taken as given: an aromatic atom needs a double
    bond exactly when its default valence exceeds its sigma bonds plus
    hydrogens by one.
    """
    orders = [int(b.order) for b in mol.bonds]
    arom = [k for k, b in enumerate(mol.bonds) if b.order == BondOrder.AROMATIC]
    if not arom:
        return tuple(orders)
    required: set[int] = set()
    for i, atom in enumerate(mol.atoms):
        nbrs = mol.neighbors[i]
        n_arom = sum(1 for _, k in nbrs if mol.bonds[k].order == BondOrder.AROMATIC)
        if not n_arom:
            continue
        sigma = atom.implicit_h + sum(
            1 if mol.bonds[k].order == BondOrder.AROMATIC else int(mol.bonds[k].order)
            for _, k in nbrs
        )
        target = default_valence(atom.element, sigma)
        if target is None:
            raise _impossible(i)
        need = target - sigma
        if need == 1:
            required.add(i)
        elif need != 0:
            raise _impossible(i)
    edges = [(mol.bonds[k].a, mol.bonds[k].b) for k in arom]
    partner = max_weight_pi_matching(mol.num_atoms, edges, required, set())
    if partner is None:
        raise ValenceError("aromatic system cannot be kekulized")
    for k in arom:
        b = mol.bonds[k]
        orders[k] = 2 if partner.get(b.a) == b.b else 1
    return tuple(orders)


def _impossible(i: int) -> ValenceError:
    return ValenceError(f"aromatic atom {i} has an impossible valence")


class Donor(IntEnum):
    VACANT = 0
    ONE = 1
    TWO = 2
    NONE = 5


def _donor_type(
    mol: Molecule, orders: Sequence[int], i: int, ring_bonds: frozenset[int]
) -> Donor:
    atom = mol.atoms[i]
    if atom.element not in AROMATIC_CAPABLE:
        return Donor.NONE
    nbrs = mol.neighbors[i]
    dv = VALENCES[atom.element][0]
    degree = len(nbrs) + atom.implicit_h
    if degree > 3:
        return Donor.NONE
    nlp = OUTER_ELECTRONS[atom.element] - dv
    nelec = (dv - degree) + nlp
    bond_sum = sum(orders[k] for _, k in nbrs)
    if nelec > 1 and bond_sum - len(nbrs) > 1:
        nelec = 1
    exo = next(((j, k) for j, k in nbrs if k not in ring_bonds and orders[k] >= 2), None)
    cyclic_multiple = any(k in ring_bonds and orders[k] >= 2 for _, k in nbrs)

    def withdraws(j: int) -> bool:
        return ELECTRONEGATIVITY[mol.atoms[j].element] > ELECTRONEGATIVITY[atom.element]

    if nelec < 0:
        return Donor.NONE
    if nelec == 0:
        if exo is not None:
            return Donor.VACANT
        return Donor.ONE if cyclic_multiple else Donor.NONE
    if nelec == 1:
        if exo is not None:
            return Donor.VACANT if withdraws(exo[0]) else Donor.ONE
        return Donor.ONE if bond_sum > len(nbrs) else Donor.NONE
    if exo is not None and withdraws(exo[0]):
        nelec -= 1
    return Donor.ONE if nelec % 2 else Donor.TWO


def _is_candidate(mol: Molecule, orders: Sequence[int], i: int, donor: Donor) -> bool:
    if donor == Donor.NONE:
        return False
    nbrs = mol.neighbors[i]
    n_multiple = sum(1 for _, k in nbrs if orders[k] >= 2)
    return n_multiple <= 1


def perceive_aromaticity(mol: Molecule, max_fused: int = 6) -> Molecule:
    """Return ``mol`` with aromatic flags and bonds set by the 4n+2 rule.

    The input is first reduced to its Kekulé form. Each ring whose atoms
    are all candidates is tested alone; fused groups of up to
    ``max_fused`` bond-sharing candidate rings are tested on the union of
    their atoms. Bonds of a passing ring become aromatic; for a passing
    group only its perimeter bonds do, so a fusion bond stays localized
    unless one of its rings is aromatic by itself.
    """
    orders = mol.kekule_orders
    kekule = Molecule(
        tuple(Atom(a.element, False, a.implicit_h) for a in mol.atoms),
        tuple(Bond(b.a, b.b, BondOrder(o)) for b, o in zip(mol.bonds, orders)),
    )
    info = kekule.ring_info
    donors = [_donor_type(kekule, orders, i, info.ring_bonds) for i in range(mol.num_atoms)]
    cand = [_is_candidate(kekule, orders, i, donors[i]) for i in range(mol.num_atoms)]

    rings = [r for r in info.symmetric_rings if all(cand[a] for a in r)]
    ring_bond_sets = [
        frozenset(kekule.bond_index[tuple(sorted((r[t], r[t - 1])))] for t in range(len(r)))
        for r in rings
    ]

    # group candidate rings into fused systems (shared bonds)
    systems: list[list[int]] = []
    unassigned = set(range(len(rings)))
    while unassigned:
        seed = min(unassigned)
        unassigned.discard(seed)
        group = [seed]
        frontier = [seed]
        while frontier:
            p = frontier.pop()
            for q in sorted(unassigned):
                if ring_bond_sets[p] & ring_bond_sets[q]:
                    unassigned.discard(q)
                    group.append(q)
                    frontier.append(q)
        systems.append(sorted(group))

    aromatic_bonds: set[int] = set()
    for group in systems:
        done: set[int] = set()
        for size in range(1, min(len(group), max_fused) + 1):
            for combo in combinations(group, size):
                if size > 1 and not _bond_connected(combo, ring_bond_sets):
                    continue
                # fusion bonds (shared inside the combination) are not
                # marked; only perimeter bonds are
                counts: dict[int, int] = {}
                for p in combo:
                    for k in ring_bond_sets[p]:
                        counts[k] = counts.get(k, 0) + 1
                perimeter = {k for k, c in counts.items() if c == 1}
                if perimeter <= done:
                    continue
                atoms = set().union(*(rings[p] for p in combo))
                electrons = sum(int(donors[a]) for a in atoms)
                if electrons % 4 == 2:
                    done |= perimeter
        aromatic_bonds |= done

    if not aromatic_bonds:
        return kekule
    arom_atoms = set()
    for k in aromatic_bonds:
        arom_atoms.add(kekule.bonds[k].a)
        arom_atoms.add(kekule.bonds[k].b)
    atoms = tuple(Atom(a.element, i in arom_atoms, a.implicit_h) for i, a in enumerate(kekule.atoms))
    bonds = tuple(
        Bond(b.a, b.b, BondOrder.AROMATIC if k in aromatic_bonds else b.order)
        for k, b in enumerate(kekule.bonds)
    )
    return Molecule(atoms, bonds)


def _bond_connected(combo: Sequence[int], bond_sets: Sequence[frozenset[int]]) -> bool:
    reached = {combo[0]}
    frontier = [combo[0]]
    while frontier:
        p = frontier.pop()
        for q in combo:
            if q not in reached and bond_sets[p] & bond_sets[q]:
                reached.add(q)
                frontier.append(q)
    return len(reached) == len(combo)
