"""One-hot graph matrices: the model's input and output representation.

Flat layout (760 entries, a stability contract shared with checkpoints)::

    [0, 16)     length block, one-hot over 1..16
    [16, 160)   16 annotation rows x 9 classes (C N O F Si S Cl Br PAD)
    [160, 760)  120 upper-triangle pairs x 5 classes
                (none single double triple aromatic)

Pairs are ordered row-major over ``i < j``: (0,1), (0,2), ..., (14,15).
Atoms appear in canonical order and bonds in their Kekulé form, which,
together with the default-valence model, fixes hydrogen placement.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from molcvae.chem.elements import VOCABULARY
from molcvae.chem.molecule import BondOrder, ChemError, Molecule, VocabularyError, check_valence
from molcvae.chem.elements import AROMATIC_CAPABLE
from molcvae.chem.smiles import _bond_is_ring, build_molecule, canonical_order

MAX_ATOMS = 16
ATOM_CLASSES: tuple[str, ...] = VOCABULARY + ("PAD",)
PAD = len(VOCABULARY)
BOND_CLASSES: tuple[str, ...] = ("none", "single", "double", "triple", "aromatic")
N_PAIRS = MAX_ATOMS * (MAX_ATOMS - 1) // 2
LENGTH_SLICE = slice(0, MAX_ATOMS)
ANNOTATION_SLICE = slice(MAX_ATOMS, MAX_ATOMS + MAX_ATOMS * len(ATOM_CLASSES))
ADJACENCY_SLICE = slice(ANNOTATION_SLICE.stop, ANNOTATION_SLICE.stop + N_PAIRS * len(BOND_CLASSES))
FLAT_DIM = ADJACENCY_SLICE.stop
# (offset, width) of every softmax segment in the flat vector
SEGMENTS: tuple[tuple[int, int], ...] = (
    ((0, MAX_ATOMS),)
    + tuple((ANNOTATION_SLICE.start + r * len(ATOM_CLASSES), len(ATOM_CLASSES)) for r in range(MAX_ATOMS))
    + tuple((ADJACENCY_SLICE.start + p * len(BOND_CLASSES), len(BOND_CLASSES)) for p in range(N_PAIRS))
)

PAIRS: tuple[tuple[int, int], ...] = tuple(
    (i, j) for i in range(MAX_ATOMS) for j in range(i + 1, MAX_ATOMS)
)
PAIR_INDEX: dict[tuple[int, int], int] = {p: k for k, p in enumerate(PAIRS)}
_ELEMENT_CLASS = {s: k for k, s in enumerate(VOCABULARY)}

InvalidReason = Literal["disconnected", "valence", "pad-inconsistency"]


class OversizeError(ChemError):
    """Molecule has more atoms than the matrix can hold."""


@dataclass(frozen=True, eq=False)
class GraphMatrix:
    """Length (16,), annotation (16, 9) and adjacency (120, 5) blocks."""

    length: np.ndarray
    annotation: np.ndarray
    adjacency: np.ndarray

    def __post_init__(self):
        shapes = {
            "length": (MAX_ATOMS,),
            "annotation": (MAX_ATOMS, len(ATOM_CLASSES)),
            "adjacency": (N_PAIRS, len(BOND_CLASSES)),
        }
        for name, shape in shapes.items():
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != shape:
                raise ValueError(f"{name} block has shape {arr.shape}, expected {shape}")
            object.__setattr__(self, name, arr)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GraphMatrix):
            return NotImplemented
        return (
            np.array_equal(self.length, other.length)
            and np.array_equal(self.annotation, other.annotation)
            and np.array_equal(self.adjacency, other.adjacency)
        )

    def is_hard(self) -> bool:
        """Every row is exactly one-hot."""
        for block in (self.length[None, :], self.annotation, self.adjacency):
            if not (np.all((block == 0) | (block == 1)) and np.all(block.sum(axis=1) == 1)):
                return False
        return True

    @property
    def declared_length(self) -> int:
        return int(np.argmax(self.length)) + 1

    def atom_classes(self) -> np.ndarray:
        return np.argmax(self.annotation, axis=1)

    def bond_classes(self) -> np.ndarray:
        return np.argmax(self.adjacency, axis=1)


@dataclass(frozen=True)
class InvalidDecode:
    """A matrix that does not describe a valid molecule."""

    reason: InvalidReason
    detail: str = ""

    def __bool__(self) -> bool:
        return False


def encode(mol: Molecule) -> GraphMatrix:
    """Hard one-hot matrix of ``mol`` in canonical atom order."""
    n = mol.num_atoms
    if n > MAX_ATOMS:
        raise OversizeError(f"{n} atoms exceed the maximum of {MAX_ATOMS}")
    if n == 0:
        raise ChemError("cannot encode an empty molecule")
    for atom in mol.atoms:
        if atom.element not in _ELEMENT_CLASS:
            raise VocabularyError(f"element {atom.element} is outside the vocabulary")
    ordered = mol.renumbered(canonical_order(mol))
    orders = ordered.kekule_orders
    length = np.zeros(MAX_ATOMS)
    length[n - 1] = 1.0
    annotation = np.zeros((MAX_ATOMS, len(ATOM_CLASSES)))
    for i in range(MAX_ATOMS):
        annotation[i, _ELEMENT_CLASS[ordered.atoms[i].element] if i < n else PAD] = 1.0
    adjacency = np.zeros((N_PAIRS, len(BOND_CLASSES)))
    adjacency[:, 0] = 1.0
    for bond, order in zip(ordered.bonds, orders):
        k = PAIR_INDEX[(bond.a, bond.b)]
        adjacency[k, 0] = 0.0
        adjacency[k, order] = 1.0
    return GraphMatrix(length, annotation, adjacency)


def flatten(g: GraphMatrix) -> np.ndarray:
    return np.concatenate([g.length, g.annotation.ravel(), g.adjacency.ravel()])


def unflatten(v: np.ndarray) -> GraphMatrix:
    """Hard matrix by per-row argmax; ties go to the lowest class index."""
    v = np.asarray(v, dtype=float)
    if v.shape != (FLAT_DIM,):
        raise ValueError(f"flat vector must have length {FLAT_DIM}, got shape {v.shape}")
    if np.any(v < 0) or not np.all(np.isfinite(v)):
        raise ValueError("flat vector entries must be finite and non-negative")
    return hard_from_classes(*classes_from_flat(v))


def classes_from_flat(v: np.ndarray) -> tuple[int, np.ndarray, np.ndarray]:
    """``(length index, atom classes, bond classes)`` by argmax."""
    length = int(np.argmax(v[LENGTH_SLICE]))
    atoms = np.argmax(v[ANNOTATION_SLICE].reshape(MAX_ATOMS, len(ATOM_CLASSES)), axis=1)
    bonds = np.argmax(v[ADJACENCY_SLICE].reshape(N_PAIRS, len(BOND_CLASSES)), axis=1)
    return length, atoms, bonds


def hard_from_classes(length: int, atoms: np.ndarray, bonds: np.ndarray) -> GraphMatrix:
    eye_a = np.eye(len(ATOM_CLASSES))
    eye_b = np.eye(len(BOND_CLASSES))
    return GraphMatrix(np.eye(MAX_ATOMS)[length], eye_a[atoms], eye_b[bonds])


def decode(g: GraphMatrix) -> Molecule | InvalidDecode:
    """Molecule described by a hard matrix, or the reason it is invalid.

    Rows past the declared length are ignored; a real atom slot marked PAD
    or a bond touching a slot past the length is a pad inconsistency.
    Nothing is repaired.
    """
    n = g.declared_length
    atoms = g.atom_classes()
    bonds_cls = g.bond_classes()
    if np.any(atoms[:n] == PAD):
        return InvalidDecode("pad-inconsistency", "PAD inside the declared length")
    bonds = []
    for k, cls in enumerate(bonds_cls):
        if cls == 0:
            continue
        i, j = PAIRS[k]
        if j >= n:
            return InvalidDecode("pad-inconsistency", f"bond ({i}, {j}) reaches past length {n}")
        bonds.append((i, j, BondOrder(int(cls))))
    elements = [VOCABULARY[int(c)] for c in atoms[:n]]
    return build_checked(elements, bonds)


def build_checked(elements: list[str], bonds: list[tuple[int, int, BondOrder]]) -> Molecule | InvalidDecode:
    n = len(elements)
    adj: list[set[int]] = [set() for _ in range(n)]
    for i, j, _ in bonds:
        adj[i].add(j)
        adj[j].add(i)
    seen = {0}
    stack = [0]
    while stack:
        for j in adj[stack.pop()]:
            if j not in seen:
                seen.add(j)
                stack.append(j)
    if len(seen) != n:
        return InvalidDecode("disconnected", f"{n - len(seen)} atoms unreachable from atom 0")
    aromatic = [False] * n
    pairs = [(i, j) for i, j, _ in bonds]
    for k, (i, j, order) in enumerate(bonds):
        if order == BondOrder.AROMATIC:
            if not _bond_is_ring(n, pairs, k):
                return InvalidDecode("valence", f"aromatic bond ({i}, {j}) outside a ring")
            aromatic[i] = aromatic[j] = True
    for i, el in enumerate(elements):
        if aromatic[i] and el not in AROMATIC_CAPABLE:
            return InvalidDecode("valence", f"{el} cannot be aromatic")
    try:
        mol = build_molecule(elements, aromatic, bonds)
    except ChemError as exc:
        return InvalidDecode("valence", str(exc))
    if not check_valence(mol):
        return InvalidDecode("valence", "valence check failed")
    return mol


def encode_flat(mol: Molecule) -> np.ndarray:
    return flatten(encode(mol))


def decode_flat(v: np.ndarray) -> Molecule | InvalidDecode:
    return decode(unflatten(v))
