"""SMILES reading and canonical writing.

The reader covers the organic subset, uncharged bracket atoms, the bond
symbols ``- = # : ~``-free subset (``-``, ``=``, ``#``, ``:``), branches,
ring closures (digits and ``%nn``) and lowercase aromatic atoms.
Stereo marks (``@``, ``/``, ``\\``) are accepted and dropped.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

from molcvae.chem.aromaticity import max_weight_pi_matching, perceive_aromaticity
from molcvae.chem.canon import canonical_search
from molcvae.chem.elements import (
    AROMATIC_CAPABLE,
    KNOWN_SYMBOLS,
    ORGANIC_SUBSET,
    VALENCES,
    VOCABULARY,
    default_valence,
)
from molcvae.chem.molecule import (
    Atom,
    Bond,
    BondOrder,
    ChargeError,
    Molecule,
    SmilesSyntaxError,
    ValenceError,
    VocabularyError,
)

_BOND_SYMBOLS = {"-": BondOrder.SINGLE, "=": BondOrder.DOUBLE, "#": BondOrder.TRIPLE, ":": BondOrder.AROMATIC}
_ORGANIC_TWO = ("Cl", "Br")
_ORGANIC_ONE = set("BCNOPSFI")
_AROMATIC_ORGANIC = set("bcnops")


@dataclass
class _RawAtom:
    element: str
    aromatic: bool
    bracket_h: int | None  # None for organic-subset atoms
    position: int


@dataclass
class _Raw:
    atoms: list[_RawAtom] = field(default_factory=list)
    # (a, b, explicit order or None)
    bonds: list[tuple[int, int, BondOrder | None]] = field(default_factory=list)


def _check_element(symbol: str, pos: int, allow_h: bool = False) -> str:
    if symbol not in KNOWN_SYMBOLS:
        raise SmilesSyntaxError(f"unknown element {symbol!r}", pos)
    if symbol not in VOCABULARY and not (allow_h and symbol == "H"):
        raise VocabularyError(f"element {symbol} at position {pos} is outside the vocabulary")
    return symbol


def _parse_bracket(text: str, start: int) -> tuple[_RawAtom, int]:
    end = text.find("]", start)
    if end < 0:
        raise SmilesSyntaxError("unclosed bracket atom", start)
    body = text[start + 1:end]
    if not body:
        raise SmilesSyntaxError("empty bracket atom", start)
    if "+" in body or "-" in body:
        raise ChargeError(f"charged atom [{body}] at position {start}")
    i = 0
    while i < len(body) and body[i].isdigit():
        i += 1  # isotope, ignored
    if i >= len(body):
        raise SmilesSyntaxError("bracket atom without element", start)
    if body[i] == "*":
        raise VocabularyError(f"wildcard atom at position {start}")
    aromatic = body[i].islower()
    if aromatic:
        sym = body[i:i + 2] if body[i:i + 2] in ("se", "as", "si") else body[i]
        element = sym[0].upper() + sym[1:]
    else:
        two = body[i:i + 2]
        sym = two if len(two) == 2 and two[1].islower() and two in KNOWN_SYMBOLS else body[i]
        element = sym
    i += len(sym)
    _check_element(element, start, allow_h=not aromatic)
    if aromatic and element not in AROMATIC_CAPABLE:
        raise SmilesSyntaxError(f"element {element} cannot be aromatic", start)
    while i < len(body) and body[i] == "@":
        i += 1
    h = 0
    if i < len(body) and body[i] == "H":
        i += 1
        j = i
        while j < len(body) and body[j].isdigit():
            j += 1
        h = int(body[i:j]) if j > i else 1
        i = j
    if i < len(body) and body[i] == ":":
        j = i + 1
        while j < len(body) and body[j].isdigit():
            j += 1
        i = j
    if i != len(body):
        raise SmilesSyntaxError(f"unexpected {body[i]!r} in bracket atom", start + 1 + i)
    return _RawAtom(element, aromatic, h, start), end + 1


def _tokenize(text: str) -> _Raw:
    raw = _Raw()
    prev: int | None = None
    pending: BondOrder | None = None
    pending_pos = 0
    branches: list[int | None] = []
    rings: dict[int, tuple[int, BondOrder | None, int]] = {}
    i = 0
    n = len(text)

    def add_atom(atom: _RawAtom) -> None:
        nonlocal prev, pending
        raw.atoms.append(atom)
        idx = len(raw.atoms) - 1
        if prev is not None:
            raw.bonds.append((prev, idx, pending))
        elif pending is not None:
            raise SmilesSyntaxError("bond without preceding atom", pending_pos)
        prev = idx
        pending = None

    while i < n:
        ch = text[i]
        if ch == "[":
            atom, i = _parse_bracket(text, i)
            add_atom(atom)
            continue
        if text.startswith(_ORGANIC_TWO, i) and text[i:i + 2] in _ORGANIC_TWO:
            add_atom(_RawAtom(text[i:i + 2], False, None, i))
            i += 2
            continue
        if ch in _ORGANIC_ONE:
            _check_element(ch, i)
            add_atom(_RawAtom(ch, False, None, i))
            i += 1
            continue
        if ch in _AROMATIC_ORGANIC:
            element = ch.upper()
            _check_element(element, i)
            add_atom(_RawAtom(element, True, None, i))
            i += 1
            continue
        if ch in _BOND_SYMBOLS:
            if pending is not None:
                raise SmilesSyntaxError("consecutive bond symbols", i)
            pending, pending_pos = _BOND_SYMBOLS[ch], i
            i += 1
            continue
        if ch in "/\\":
            if pending is not None:
                raise SmilesSyntaxError("consecutive bond symbols", i)
            pending, pending_pos = BondOrder.SINGLE, i
            i += 1
            continue
        if ch == "(":
            if prev is None:
                raise SmilesSyntaxError("branch without preceding atom", i)
            branches.append(prev)
            i += 1
            continue
        if ch == ")":
            if not branches:
                raise SmilesSyntaxError("unbalanced ')'", i)
            if pending is not None:
                raise SmilesSyntaxError("bond before ')'", i)
            prev = branches.pop()
            i += 1
            continue
        if ch.isdigit() or ch == "%":
            if prev is None:
                raise SmilesSyntaxError("ring closure without preceding atom", i)
            if ch == "%":
                if len(text[i + 1:i + 3]) != 2 or not text[i + 1:i + 3].isdigit():
                    raise SmilesSyntaxError("'%' must be followed by two digits", i)
                label, width = int(text[i + 1:i + 3]), 3
            else:
                label, width = int(ch), 1
            if label in rings:
                other, order, pos = rings.pop(label)
                if other == prev:
                    raise SmilesSyntaxError("ring closure to the same atom", i)
                if order is not None and pending is not None and order != pending:
                    raise SmilesSyntaxError("conflicting ring-closure bond orders", i)
                raw.bonds.append((other, prev, pending if pending is not None else order))
            else:
                rings[label] = (prev, pending, i)
            pending = None
            i += width
            continue
        if ch == ".":
            raise ChargeError(f"multi-fragment input ('.' at position {i})")
        if ch == "+":
            raise ChargeError(f"charge token at position {i}")
        if ch == "*":
            raise VocabularyError(f"wildcard atom at position {i}")
        if ch.isalpha():
            two = text[i:i + 2]
            if len(two) == 2 and two in KNOWN_SYMBOLS:
                raise VocabularyError(f"element {two} at position {i} must be bracketed and is outside the vocabulary")
            if ch in KNOWN_SYMBOLS:
                raise VocabularyError(f"element {ch} at position {i} is outside the vocabulary")
        raise SmilesSyntaxError(f"unexpected character {ch!r}", i)

    if pending is not None:
        raise SmilesSyntaxError("dangling bond symbol", pending_pos)
    if branches:
        raise SmilesSyntaxError("unbalanced '('", len(text))
    if rings:
        label, (_, _, pos) = next(iter(rings.items()))
        raise SmilesSyntaxError(f"unclosed ring {label}", pos)
    if not raw.atoms:
        raise SmilesSyntaxError("no atoms", 0)
    return raw


def _bond_is_ring(n: int, bonds: Sequence[tuple[int, int]], k: int) -> bool:
    """True when removing bond ``k`` leaves its endpoints connected."""
    a, b = bonds[k]
    adj: list[list[int]] = [[] for _ in range(n)]
    for t, (x, y) in enumerate(bonds):
        if t != k:
            adj[x].append(y)
            adj[y].append(x)
    seen = {a}
    stack = [a]
    while stack:
        v = stack.pop()
        if v == b:
            return True
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return False


def assign_hydrogens(
    elements: Sequence[str],
    aromatic: Sequence[bool],
    bonds: Sequence[tuple[int, int, BondOrder]],
    fixed_h: Sequence[int | None],
) -> list[int]:
    """Implicit hydrogen counts from the default-valence model.

    Atoms with ``fixed_h`` set keep it. Aromatic atoms are resolved by
    pairing them along aromatic bonds: carbon must take a double bond,
    two-connected nitrogen takes one if it can and otherwise carries a
    hydrogen (pyrrole type). Raises ``ValenceError`` when impossible.
    """
    n = len(elements)
    sigma = [0] * n
    n_arom = [0] * n
    for a, b, order in bonds:
        w = 1 if order == BondOrder.AROMATIC else int(order)
        sigma[a] += w
        sigma[b] += w
        if order == BondOrder.AROMATIC:
            n_arom[a] += 1
            n_arom[b] += 1
    hs = [0] * n
    required: set[int] = set()
    optional: set[int] = set()
    for i, el in enumerate(elements):
        if fixed_h[i] is not None:
            hs[i] = fixed_h[i]
            if n_arom[i]:
                used = sigma[i] + hs[i]
                target = default_valence(el, used)
                if target is None or target - used > 1:
                    raise ValenceError(f"atom {i} ({el}) has an impossible valence")
                if target - used == 1:
                    required.add(i)
            elif default_valence(el, sigma[i] + hs[i]) is None:
                raise ValenceError(f"atom {i} ({el}) exceeds its allowed valence")
            continue
        if not n_arom[i]:
            target = default_valence(el, sigma[i])
            if target is None:
                raise ValenceError(f"atom {i} ({el}) exceeds its allowed valence")
            hs[i] = target - sigma[i]
            continue
        target = default_valence(el, sigma[i])
        if target is None:
            raise ValenceError(f"atom {i} ({el}) exceeds its allowed valence")
        spare = target - sigma[i]
        if spare == 0:
            continue
        if el == "N" and sigma[i] == 2:
            optional.add(i)
        else:
            required.add(i)
    arom_edges = [(a, b) for a, b, o in bonds if o == BondOrder.AROMATIC]
    partner = max_weight_pi_matching(n, arom_edges, required, optional)
    if partner is None:
        raise ValenceError("aromatic system cannot be kekulized")
    for i in required | optional:
        if fixed_h[i] is not None:
            continue
        target = default_valence(elements[i], sigma[i])
        hs[i] = target - sigma[i] - (1 if i in partner else 0)
    return hs


def build_molecule(
    elements: Sequence[str],
    aromatic: Sequence[bool],
    bonds: Sequence[tuple[int, int, BondOrder]],
    fixed_h: Sequence[int | None] | None = None,
) -> Molecule:
    """Assemble a perceived Molecule from raw atoms and bonds."""
    n = len(elements)
    if fixed_h is None:
        fixed_h = [None] * n
    pairs = [(a, b) for a, b, _ in bonds]
    cleaned = []
    for k, (a, b, order) in enumerate(bonds):
        if order == BondOrder.AROMATIC and not _bond_is_ring(n, pairs, k):
            order = BondOrder.SINGLE
        cleaned.append((a, b, order))
    hs = assign_hydrogens(elements, aromatic, cleaned, fixed_h)
    has_arom = [False] * n
    for a, b, order in cleaned:
        if order == BondOrder.AROMATIC:
            has_arom[a] = has_arom[b] = True
    mol = Molecule(
        tuple(Atom(el, has_arom[i], hs[i]) for i, el in enumerate(elements)),
        tuple(Bond(a, b, order) for a, b, order in cleaned),
    )
    return perceive_aromaticity(mol)


def parse_smiles(text: str) -> Molecule:
    """Parse a SMILES string into a perceived Molecule.

    Raises:
        SmilesSyntaxError: malformed input (carries ``position``).
        VocabularyError: element outside C, N, O, F, Si, S, Cl, Br (+H).
        ChargeError: charge tokens or ``.``-separated fragments.
        ValenceError: unsatisfiable valence or aromatic system.
    """
    if not text or not text.isascii():
        raise SmilesSyntaxError("SMILES must be non-empty ASCII", 0)
    text = text.strip()
    raw = _tokenize(text)
    seen = set()
    bonds = []
    for a, b, order in raw.bonds:
        key = (min(a, b), max(a, b))
        if key in seen:
            raise SmilesSyntaxError("duplicate bond", raw.atoms[b].position)
        seen.add(key)
        if order is None:
            both = raw.atoms[a].aromatic and raw.atoms[b].aromatic
            order = BondOrder.AROMATIC if both else BondOrder.SINGLE
        bonds.append((a, b, order))
    for a, b, order in bonds:
        if order == BondOrder.AROMATIC and not (raw.atoms[a].aromatic and raw.atoms[b].aromatic):
            raise ValenceError("aromatic bond between non-aromatic atoms")
    raw, bonds = _fold_hydrogens(raw, bonds)
    elements = [a.element for a in raw.atoms]
    return build_molecule(elements, [a.aromatic for a in raw.atoms], bonds, [a.bracket_h for a in raw.atoms])


def _fold_hydrogens(
    raw: _Raw, bonds: list[tuple[int, int, BondOrder]]
) -> tuple[_Raw, list[tuple[int, int, BondOrder]]]:
    """Turn explicit ``[H]`` atoms into hydrogen counts on their neighbours."""
    h_atoms = {i for i, a in enumerate(raw.atoms) if a.element == "H"}
    if not h_atoms:
        return raw, bonds
    if len(h_atoms) == len(raw.atoms):
        raise VocabularyError("molecule without heavy atoms")
    extra = [0] * len(raw.atoms)
    sigma = [0] * len(raw.atoms)
    attached = dict.fromkeys(h_atoms, 0)
    for a, b, order in bonds:
        for h, other in ((a, b), (b, a)):
            if h in h_atoms:
                if other in h_atoms or order != BondOrder.SINGLE:
                    raise ValenceError("explicit hydrogen must carry one single bond to a heavy atom")
                attached[h] += 1
                extra[other] += 1 + (raw.atoms[h].bracket_h or 0)
        if a not in h_atoms and b not in h_atoms:
            w = 1 if order == BondOrder.AROMATIC else int(order)
            sigma[a] += w
            sigma[b] += w
    if any(c != 1 for c in attached.values()):
        raise ValenceError("explicit hydrogen must carry one single bond to a heavy atom")
    keep = [i for i in range(len(raw.atoms)) if i not in h_atoms]
    new_index = {old: new for new, old in enumerate(keep)}
    atoms = []
    for i in keep:
        atom = raw.atoms[i]
        h = atom.bracket_h
        if extra[i]:
            if h is not None or atom.aromatic:
                h = (h or 0) + extra[i]
            else:
                target = default_valence(atom.element, sigma[i] + extra[i])
                if target is None:
                    raise ValenceError(f"atom {i} ({atom.element}) exceeds its allowed valence")
                h = target - sigma[i]
        atoms.append(_RawAtom(atom.element, atom.aromatic, h, atom.position))
    kept_bonds = [
        (new_index[a], new_index[b], o) for a, b, o in bonds if a not in h_atoms and b not in h_atoms
    ]
    return _Raw(atoms, []), kept_bonds


# ---------------------------------------------------------------- writing

def _default_h(mol: Molecule, i: int) -> int | None:
    """Hydrogen count the reader would infer for an unbracketed atom."""
    atom = mol.atoms[i]
    sigma = 0
    n_arom = 0
    for _, k in mol.neighbors[i]:
        order = mol.bonds[k].order
        if order == BondOrder.AROMATIC:
            sigma += 1
            n_arom += 1
        else:
            sigma += int(order)
    target = default_valence(atom.element, sigma)
    if target is None:
        return None
    if not atom.aromatic:
        return target - sigma
    spare = target - sigma
    if spare == 0:
        return 0
    if atom.element == "N" and sigma == 2:
        return 0 if atom.implicit_h == 0 else None
    return spare - 1


def _atom_symbol(mol: Molecule, i: int) -> str:
    atom = mol.atoms[i]
    sym = atom.element.lower() if atom.aromatic else atom.element
    if atom.element in ORGANIC_SUBSET and _default_h(mol, i) == atom.implicit_h:
        return sym
    h = "" if atom.implicit_h == 0 else ("H" if atom.implicit_h == 1 else f"H{atom.implicit_h}")
    return f"[{sym}{h}]"


def _bond_symbol(mol: Molecule, i: int, j: int, order: BondOrder) -> str:
    if order == BondOrder.DOUBLE:
        return "="
    if order == BondOrder.TRIPLE:
        return "#"
    if order == BondOrder.SINGLE and mol.atoms[i].aromatic and mol.atoms[j].aromatic:
        return "-"
    return ""


def render_smiles(mol: Molecule, ranks: Sequence[int]) -> tuple[str, list[int]]:
    """Write ``mol`` by depth-first traversal in rank order.

    Returns the string and the order in which atoms were emitted.
    """
    n = mol.num_atoms
    visited = [False] * n
    emitted: list[int] = []
    out: list[str] = []
    # pass 1: spanning forest and ring-closure bonds
    closures: dict[int, list[tuple[int, int]]] = {i: [] for i in range(n)}
    tree_children: dict[int, list[tuple[int, int]]] = {i: [] for i in range(n)}
    order_seen = [False] * n
    closure_bonds: set[int] = set()
    starts = []

    def nbrs_sorted(i: int):
        return sorted(mol.neighbors[i], key=lambda t: ranks[t[0]])

    for root in sorted(range(n), key=lambda i: ranks[i]):
        if order_seen[root]:
            continue
        starts.append(root)
        order_seen[root] = True
        stack = [(root, -1, iter(nbrs_sorted(root)))]
        while stack:
            v, parent_bond, it = stack[-1]
            pushed = False
            for w, k in it:
                if k == parent_bond or k in closure_bonds:
                    continue
                if order_seen[w]:
                    closure_bonds.add(k)
                    closures[v].append((w, k))
                    closures[w].append((v, k))
                    continue
                order_seen[w] = True
                tree_children[v].append((w, k))
                stack.append((w, k, iter(nbrs_sorted(w))))
                pushed = True
                break
            if not pushed:
                stack.pop()

    # pass 2: emit
    free_digits: list[int] = []
    next_digit = 1
    open_rings: dict[int, int] = {}

    def take_digit() -> int:
        nonlocal next_digit
        if free_digits:
            free_digits.sort()
            return free_digits.pop(0)
        d = next_digit
        next_digit += 1
        return d

    def digit_text(d: int) -> str:
        return str(d) if d < 10 else f"%{d:02d}"

    def emit(v: int, from_atom: int | None) -> None:
        visited[v] = True
        emitted.append(v)
        out.append(_atom_symbol(mol, v))
        for w, k in sorted(closures[v], key=lambda t: ranks[t[0]]):
            if k in open_rings:
                d = open_rings.pop(k)
                out.append(digit_text(d))
                free_digits.append(d)
            else:
                d = take_digit()
                open_rings[k] = d
                out.append(_bond_symbol(mol, v, w, mol.bonds[k].order) + digit_text(d))
        children = tree_children[v]
        for idx, (w, k) in enumerate(children):
            last = idx == len(children) - 1
            if not last:
                out.append("(")
            out.append(_bond_symbol(mol, v, w, mol.bonds[k].order))
            emit(w, v)
            if not last:
                out.append(")")

    for s, root in enumerate(starts):
        if s:
            out.append(".")
        emit(root, None)
    return "".join(out), emitted


@lru_cache(maxsize=65536)
def _canonical_cached(mol: Molecule) -> tuple[str, tuple[int, ...]]:
    text, ranks = canonical_search(mol, lambda r: render_smiles(mol, r)[0])
    _, emitted = render_smiles(mol, ranks)
    return text, tuple(emitted)


def canonical_order(mol: Molecule) -> tuple[int, ...]:
    """Atom indices in the order the canonical SMILES emits them."""
    return _canonical_cached(mol)[1]


def write_smiles(mol: Molecule) -> str:
    """Deterministic canonical SMILES; isomorphic graphs give equal strings."""
    return _canonical_cached(mol)[0]


def canonicalize(text: str) -> str:
    return write_smiles(parse_smiles(text))
