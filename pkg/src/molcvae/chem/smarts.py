"""A SMARTS-subset pattern language and substructure matcher.

Supported atom primitives: element symbols (aliphatic upper case, aromatic
lower case), ``*``, ``a``, ``A``, ``#n``, ``Hn``, ``Dn``, ``Xn``, ``vn``,
``R``/``Rn``, ``r``/``rn``, charge (``+``, ``-``, ``+0``, ``-2``...),
isotope prefixes and recursive ``$(...)``. Bond primitives: ``-``, ``=``,
``#``, ``:``, ``~``, ``@``. Operators ``!``, ``&`` (or juxtaposition),
``,`` and ``;`` with the usual precedence. ``.`` separates disconnected
pattern components.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Callable

from molcvae.chem.elements import ATOMIC_NUMBER
from molcvae.chem.molecule import ChemError, Molecule

AtomTest = Callable[["MolView", int], bool]
BondTest = Callable[["MolView", int], bool]

_PERIODIC = {
    **ATOMIC_NUMBER,
    "He": 2, "Li": 3, "Be": 4, "B": 5, "Ne": 10, "Na": 11, "Mg": 12, "Al": 13, "P": 15,
    "Ar": 18, "K": 19, "Ca": 20, "Sc": 21, "Ti": 22, "V": 23, "Cr": 24, "Mn": 25, "Fe": 26,
    "Co": 27, "Ni": 28, "Cu": 29, "Zn": 30, "Ga": 31, "Ge": 32, "As": 33, "Se": 34, "Kr": 36,
    "Rb": 37, "Sr": 38, "Y": 39, "Zr": 40, "Nb": 41, "Mo": 42, "Tc": 43, "Ru": 44, "Rh": 45,
    "Pd": 46, "Ag": 47, "Cd": 48, "In": 49, "Sn": 50, "Sb": 51, "Te": 52, "I": 53, "Xe": 54,
    "Cs": 55, "Ba": 56, "La": 57, "Hf": 72, "Ta": 73, "W": 74, "Re": 75, "Os": 76, "Ir": 77,
    "Pt": 78, "Au": 79, "Hg": 80, "Tl": 81, "Pb": 82, "Bi": 83, "Po": 84, "At": 85, "Rn": 86,
}
_AROMATIC_SYMBOLS = {"c": 6, "n": 7, "o": 8, "s": 16, "p": 15, "b": 5, "se": 34, "as": 33, "si": 14, "te": 52}
_ORGANIC = ("Cl", "Br", "B", "C", "N", "O", "P", "S", "F", "I")


class PatternError(ChemError):
    def __init__(self, message: str, text: str, position: int):
        super().__init__(f"{message} at position {position} in {text!r}")
        self.position = position


class MolView:
    """Per-molecule atom/bond properties used by pattern tests."""

    def __init__(self, mol: Molecule):
        self.mol = mol
        n = mol.num_atoms
        info = mol.ring_info
        orders = mol.kekule_orders
        self.z = [ATOMIC_NUMBER[a.element] for a in mol.atoms]
        self.aromatic = [a.aromatic for a in mol.atoms]
        h_nbrs = [0] * n
        for b in mol.bonds:
            if mol.atoms[b.a].element == "H":
                h_nbrs[b.b] += 1
            if mol.atoms[b.b].element == "H":
                h_nbrs[b.a] += 1
        self.total_h = [a.implicit_h + h_nbrs[i] for i, a in enumerate(mol.atoms)]
        self.degree = [mol.degree(i) for i in range(n)]
        self.total_degree = [mol.total_degree(i) for i in range(n)]
        self.valence = [
            sum(orders[k] for _, k in mol.neighbors[i]) + mol.atoms[i].implicit_h for i in range(n)
        ]
        self.ring_count = list(info.atom_ring_count)
        self.ring_sizes = [set() for _ in range(n)]
        for ring in info.symmetric_rings:
            for a in ring:
                self.ring_sizes[a].add(len(ring))
        self.ring_bond = [k in info.ring_bonds for k in range(mol.num_bonds)]
        self.bond_order = [int(b.order) for b in mol.bonds]
        self.memo: dict[tuple[int, int], bool] = {}


def mol_view(mol: Molecule) -> MolView:
    """The cached view of ``mol`` (stored on the instance, like ring info)."""
    view = mol.__dict__.get("_pattern_view")
    if view is None:
        view = MolView(mol)
        mol.__dict__["_pattern_view"] = view
    return view


@dataclass(frozen=True)
class Pattern:
    """Compiled pattern: atom tests, bonds ``(i, j, test)`` and adjacency."""

    text: str
    atom_tests: tuple[AtomTest, ...]
    bonds: tuple[tuple[int, int, BondTest], ...]
    # per pattern atom: bonds to lower-indexed atoms, and one such neighbour
    # (-1 when the atom starts a new component)
    back_bonds: tuple[tuple[tuple[int, BondTest], ...], ...] = ()
    parents: tuple[int, ...] = ()

    def __post_init__(self):
        back: list[list[tuple[int, BondTest]]] = [[] for _ in self.atom_tests]
        for a, b, test in self.bonds:
            lo, hi = min(a, b), max(a, b)
            back[hi].append((lo, test))
        object.__setattr__(self, "back_bonds", tuple(tuple(x) for x in back))
        object.__setattr__(self, "parents", tuple(x[0][0] if x else -1 for x in back))

    @property
    def num_atoms(self) -> int:
        return len(self.atom_tests)


# ---------------------------------------------------------------- parsing

class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, message: str, pos: int | None = None) -> PatternError:
        return PatternError(message, self.text, self.pos if pos is None else pos)

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def number(self) -> int | None:
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        return int(self.text[start:self.pos]) if self.pos > start else None

    # atom expressions: ';' < ',' < '&' < '!'
    def atom_expr(self) -> AtomTest:
        left = self.atom_or()
        while self.peek() == ";":
            self.pos += 1
            right = self.atom_or()
            left = _and(left, right)
        return left

    def atom_or(self) -> AtomTest:
        left = self.atom_and()
        while self.peek() == ",":
            self.pos += 1
            right = self.atom_and()
            left = _or(left, right)
        return left

    def atom_and(self) -> AtomTest:
        left = self.atom_not()
        while True:
            ch = self.peek()
            if ch == "&":
                self.pos += 1
                left = _and(left, self.atom_not())
            elif ch and ch not in ";,]" and ch != ")":
                left = _and(left, self.atom_not())
            else:
                return left

    def atom_not(self) -> AtomTest:
        if self.peek() == "!":
            self.pos += 1
            inner = self.atom_not()
            return lambda v, i: not inner(v, i)
        return self.atom_primitive()

    def atom_primitive(self) -> AtomTest:
        t = self.text
        start = self.pos
        ch = self.peek()
        if not ch or ch in ";,&]":
            raise self.error("empty atom expression")
        if ch.isdigit():
            iso = self.number()
            return lambda v, i, iso=iso: False if iso else True
        if ch == "$":
            if t[self.pos + 1:self.pos + 2] != "(":
                raise self.error("'$' must be followed by '('")
            depth = 0
            j = self.pos + 1
            while j < len(t):
                if t[j] == "(":
                    depth += 1
                elif t[j] == ")":
                    depth -= 1
                    if depth == 0:
                        break
                j += 1
            if j >= len(t):
                raise self.error("unclosed recursive pattern")
            sub = compile_pattern(t[self.pos + 2:j])
            self.pos = j + 1
            return lambda v, i, sub=sub: _anchored(v, sub, i)
        if ch == "*":
            self.pos += 1
            return lambda v, i: True
        if ch == "#":
            self.pos += 1
            z = self.number()
            if z is None:
                raise self.error("'#' needs an atomic number")
            return lambda v, i, z=z: v.z[i] == z
        if ch == "+" or ch == "-":
            sign = 1 if ch == "+" else -1
            self.pos += 1
            count = 1
            num = self.number()
            if num is not None:
                count = num
            else:
                while self.peek() == ch:
                    self.pos += 1
                    count += 1
            charge = sign * count
            return lambda v, i, c=charge: c == 0
        if ch == "@":
            while self.peek() == "@":
                self.pos += 1
            return lambda v, i: True
        # two-letter element symbols take precedence
        two = t[self.pos:self.pos + 2]
        if len(two) == 2 and two[1].islower() and two in _PERIODIC:
            self.pos += 2
            z = _PERIODIC[two]
            return lambda v, i, z=z: v.z[i] == z and not v.aromatic[i]
        if two in _AROMATIC_SYMBOLS and len(two) == 2:
            self.pos += 2
            z = _AROMATIC_SYMBOLS[two]
            return lambda v, i, z=z: v.z[i] == z and v.aromatic[i]
        self.pos += 1
        if ch == "H":
            num = self.number()
            n_h = 1 if num is None else num
            return lambda v, i, n=n_h: v.total_h[i] == n
        if ch == "D":
            num = self.number()
            d = 1 if num is None else num
            return lambda v, i, d=d: v.degree[i] == d
        if ch == "X":
            num = self.number()
            x = 1 if num is None else num
            return lambda v, i, x=x: v.total_degree[i] == x
        if ch == "v":
            num = self.number()
            val = 1 if num is None else num
            return lambda v, i, val=val: v.valence[i] == val
        if ch == "R":
            num = self.number()
            if num is None:
                return lambda v, i: v.ring_count[i] > 0
            return lambda v, i, r=num: v.ring_count[i] == r
        if ch == "r":
            num = self.number()
            if num is None:
                return lambda v, i: v.ring_count[i] > 0
            if num == 0:
                return lambda v, i: v.ring_count[i] == 0
            return lambda v, i, r=num: r in v.ring_sizes[i]
        if ch == "a":
            return lambda v, i: v.aromatic[i]
        if ch == "A":
            return lambda v, i: not v.aromatic[i]
        if ch in _AROMATIC_SYMBOLS:
            z = _AROMATIC_SYMBOLS[ch]
            return lambda v, i, z=z: v.z[i] == z and v.aromatic[i]
        if ch in _PERIODIC:
            z = _PERIODIC[ch]
            return lambda v, i, z=z: v.z[i] == z and not v.aromatic[i]
        raise self.error(f"unknown atom primitive {ch!r}", start)

    # bond expressions
    def bond_expr(self) -> BondTest:
        left = self.bond_or()
        while self.peek() == ";":
            self.pos += 1
            left = _and(left, self.bond_or())
        return left

    def bond_or(self) -> BondTest:
        left = self.bond_and()
        while self.peek() == ",":
            self.pos += 1
            left = _or(left, self.bond_and())
        return left

    def bond_and(self) -> BondTest:
        left = self.bond_not()
        while True:
            ch = self.peek()
            if ch == "&":
                self.pos += 1
                left = _and(left, self.bond_not())
            elif ch and ch in "-=#:~@!":
                left = _and(left, self.bond_not())
            else:
                return left

    def bond_not(self) -> BondTest:
        if self.peek() == "!":
            self.pos += 1
            inner = self.bond_not()
            return lambda v, k: not inner(v, k)
        ch = self.peek()
        self.pos += 1
        if ch == "-":
            return lambda v, k: v.bond_order[k] == 1
        if ch == "=":
            return lambda v, k: v.bond_order[k] == 2
        if ch == "#":
            return lambda v, k: v.bond_order[k] == 3
        if ch == ":":
            return lambda v, k: v.bond_order[k] == 4
        if ch == "~":
            return lambda v, k: True
        if ch == "@":
            return lambda v, k: v.ring_bond[k]
        raise self.error(f"unknown bond primitive {ch!r}", self.pos - 1)


def _and(f, g):
    return lambda v, i: f(v, i) and g(v, i)


def _or(f, g):
    return lambda v, i: f(v, i) or g(v, i)


def _default_bond(v: MolView, k: int) -> bool:
    return v.bond_order[k] in (1, 4)


@lru_cache(maxsize=2048)
def compile_pattern(text: str) -> Pattern:
    """Parse a pattern string; raises ``PatternError`` on malformed input."""
    text = text.strip()
    if not text:
        raise PatternError("empty pattern", text, 0)
    p = _Parser(text)
    atoms: list[AtomTest] = []
    bonds: list[tuple[int, int, BondTest]] = []
    prev: int | None = None
    pending: BondTest | None = None
    stack: list[int | None] = []
    rings: dict[int, tuple[int, BondTest | None]] = {}

    def add(test: AtomTest) -> None:
        nonlocal prev, pending
        atoms.append(test)
        idx = len(atoms) - 1
        if prev is not None:
            bonds.append((prev, idx, pending or _default_bond))
        elif pending is not None:
            raise p.error("bond without a preceding atom")
        prev, pending = idx, None

    while p.pos < len(text):
        ch = p.peek()
        if ch == "[":
            p.pos += 1
            test = p.atom_expr()
            if p.peek() != "]":
                raise p.error("expected ']'")
            p.pos += 1
            add(test)
        elif ch == "(":
            if prev is None:
                raise p.error("branch without a preceding atom")
            stack.append(prev)
            p.pos += 1
        elif ch == ")":
            if not stack:
                raise p.error("unbalanced ')'")
            prev = stack.pop()
            p.pos += 1
        elif ch == ".":
            prev = None
            p.pos += 1
        elif ch.isdigit() or ch == "%":
            if prev is None:
                raise p.error("ring closure without a preceding atom")
            if ch == "%":
                label = int(text[p.pos + 1:p.pos + 3])
                p.pos += 3
            else:
                label = int(ch)
                p.pos += 1
            if label in rings:
                other, test = rings.pop(label)
                bonds.append((other, prev, pending or test or _default_bond))
            else:
                rings[label] = (prev, pending)
            pending = None
        elif ch in "-=#:~@!":
            pending = p.bond_expr()
        else:
            matched = next((s for s in _ORGANIC if text.startswith(s, p.pos)), None)
            if matched is not None:
                p.pos += len(matched)
                z = _PERIODIC[matched]
                add(lambda v, i, z=z: v.z[i] == z and not v.aromatic[i])
            elif ch in "cnospb":
                p.pos += 1
                z = _AROMATIC_SYMBOLS[ch]
                add(lambda v, i, z=z: v.z[i] == z and v.aromatic[i])
            elif ch == "*":
                p.pos += 1
                add(lambda v, i: True)
            elif ch == "a":
                p.pos += 1
                add(lambda v, i: v.aromatic[i])
            elif ch == "A":
                p.pos += 1
                add(lambda v, i: not v.aromatic[i])
            else:
                raise p.error(f"unexpected character {ch!r}")
    if stack or rings or pending is not None:
        raise p.error("incomplete pattern")
    return Pattern(text, tuple(atoms), tuple(bonds))


# ---------------------------------------------------------------- matching

def _search(v: MolView, pat: Pattern, anchor: int | None, limit: int) -> list[tuple[int, ...]]:
    """Depth-first subgraph monomorphism search in pattern-atom order.

    Pattern atom ``p`` is checked against bonds to atoms ``< p`` only; all
    of those are mapped already, so each check is complete.
    """
    n_p = pat.num_atoms
    tests = pat.atom_tests
    back = pat.back_bonds
    parent = pat.parents
    nbrs = v.mol.neighbors
    bond_index = v.mol.bond_index
    everything = range(v.mol.num_atoms)
    mapping = [-1] * n_p
    used = [False] * v.mol.num_atoms
    out: list[tuple[int, ...]] = []

    def rec(p: int) -> bool:
        if p == n_p:
            out.append(tuple(mapping))
            return len(out) >= limit
        if p == 0 and anchor is not None:
            pool = (anchor,)
        elif parent[p] >= 0:
            pool = [j for j, _ in nbrs[mapping[parent[p]]]]
        else:
            pool = everything
        test = tests[p]
        for m in pool:
            if used[m] or not test(v, m):
                continue
            ok = True
            for q, bond_test in back[p]:
                mq = mapping[q]
                k = bond_index.get((m, mq) if m < mq else (mq, m))
                if k is None or not bond_test(v, k):
                    ok = False
                    break
            if not ok:
                continue
            mapping[p] = m
            used[m] = True
            if rec(p + 1):
                return True
            used[m] = False
            mapping[p] = -1
        return False

    rec(0)
    return out


def _anchored(v: MolView, pat: Pattern, atom: int) -> bool:
    if not pat.atom_tests[0](v, atom):
        return False
    if pat.num_atoms == 1:
        return True
    key = (id(pat), atom)
    hit = v.memo.get(key)
    if hit is None:
        hit = bool(_search(v, pat, atom, 1))
        v.memo[key] = hit
    return hit


def matches_at(mol: Molecule, pat: Pattern, atom: int) -> bool:
    """True if some match maps the first pattern atom onto ``atom``."""
    return _anchored(mol_view(mol), pat, atom)


def find_matches(mol: Molecule, pat: Pattern, unique: bool = True) -> list[tuple[int, ...]]:
    """All matches; with ``unique`` only one per distinct matched atom set."""
    v = mol_view(mol)
    if pat.num_atoms == 1:
        test = pat.atom_tests[0]
        return [(i,) for i in range(mol.num_atoms) if test(v, i)]
    out = []
    seen = set()
    for m in _search(v, pat, None, 1 << 60):
        if unique:
            key = frozenset(m)
            if key in seen:
                continue
            seen.add(key)
        out.append(m)
    return out


def has_match(mol: Molecule, pat: Pattern) -> bool:
    v = mol_view(mol)
    if pat.num_atoms == 1:
        test = pat.atom_tests[0]
        return any(test(v, i) for i in range(mol.num_atoms))
    return bool(_search(v, pat, None, 1))


def substructure_match(mol: Molecule, pat: Pattern | str) -> int:
    """Number of distinct matches (deduplicated by matched atom set)."""
    if isinstance(pat, str):
        pat = compile_pattern(pat)
    return len(find_matches(mol, pat))


def load_patterns(path: str | Path) -> list[Pattern]:
    """Read a pattern file: one pattern per line (first whitespace-separated
    field), lines starting with ``#`` are comments."""
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            out.append(compile_pattern(line.split()[0]))
    return out
