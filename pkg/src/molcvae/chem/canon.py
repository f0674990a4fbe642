"""Canonical atom ranking by iterative neighbourhood refinement."""

from __future__ import annotations

from typing import Callable, Sequence

from molcvae.chem.elements import VOCABULARY
from molcvae.chem.molecule import Molecule

_ELEMENT_RANK = {s: i for i, s in enumerate(VOCABULARY)}


def initial_invariants(mol: Molecule) -> list[tuple]:
    """Per-atom starting invariant: degree, element, H count, aromaticity, ring flag."""
    info = mol.ring_info
    return [
        (
            mol.degree(i),
            _ELEMENT_RANK.get(a.element, len(VOCABULARY)),
            a.implicit_h,
            int(a.aromatic),
            int(info.in_ring(i)),
        )
        for i, a in enumerate(mol.atoms)
    ]


def _dense_ranks(keys: Sequence) -> list[int]:
    order = sorted(set(keys))
    lookup = {k: r for r, k in enumerate(order)}
    return [lookup[k] for k in keys]


def refine(mol: Molecule, ranks: Sequence[int]) -> list[int]:
    """Refine ranks until neighbourhoods stop splitting classes."""
    ranks = list(ranks)
    n_classes = len(set(ranks))
    while True:
        keys = [
            (ranks[i], tuple(sorted((ranks[j], int(mol.bonds[k].order)) for j, k in mol.neighbors[i])))
            for i in range(mol.num_atoms)
        ]
        new = _dense_ranks(keys)
        new_classes = len(set(new))
        if new_classes == n_classes:
            return new
        ranks, n_classes = new, new_classes


def canonical_search(mol: Molecule, render: Callable[[Sequence[int]], str]) -> tuple[str, list[int]]:
    """Pick the ranking whose rendering is lexicographically smallest.

    Ties left after refinement are broken by individualising each member
    of the lowest tied class in turn and recursing, so the result does not
    depend on the input atom order.
    """
    base = refine(mol, _dense_ranks(initial_invariants(mol)))
    best: tuple[str, list[int]] | None = None

    def search(ranks: list[int]) -> None:
        nonlocal best
        counts: dict[int, int] = {}
        for r in ranks:
            counts[r] = counts.get(r, 0) + 1
        tied = [r for r, c in counts.items() if c > 1]
        if not tied:
            text = render(ranks)
            if best is None or text < best[0]:
                best = (text, list(ranks))
            return
        target = min(tied)
        for i in range(mol.num_atoms):
            if ranks[i] != target:
                continue
            # individualise atom i ahead of its class mates
            trial = [2 * r + (1 if (r == target and j != i) else 0) for j, r in enumerate(ranks)]
            search(refine(mol, _dense_ranks(trial)))

    search(base)
    assert best is not None
    return best
