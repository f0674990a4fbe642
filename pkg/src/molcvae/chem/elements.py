"""Element data for the supported vocabulary."""

from __future__ import annotations

VOCABULARY: tuple[str, ...] = ("C", "N", "O", "F", "Si", "S", "Cl", "Br")

ATOMIC_NUMBER: dict[str, int] = {
    "H": 1, "C": 6, "N": 7, "O": 8, "F": 9, "Si": 14, "S": 16, "Cl": 17, "Br": 35,
}

SYMBOL_BY_NUMBER: dict[int, str] = {z: s for s, z in ATOMIC_NUMBER.items()}

# average atomic weights (g/mol)
ATOMIC_MASS: dict[str, float] = {
    "H": 1.008, "C": 12.011, "N": 14.007, "O": 15.999, "F": 18.998,
    "Si": 28.086, "S": 32.067, "Cl": 35.453, "Br": 79.904,
}

# allowed valences, smallest first
VALENCES: dict[str, tuple[int, ...]] = {
    "H": (1,), "C": (4,), "N": (3,), "O": (2,), "F": (1,),
    "Si": (4,), "S": (2, 4, 6), "Cl": (1,), "Br": (1,),
}

OUTER_ELECTRONS: dict[str, int] = {
    "H": 1, "C": 4, "N": 5, "O": 6, "F": 7, "Si": 4, "S": 6, "Cl": 7, "Br": 7,
}

# elements written without brackets in SMILES
ORGANIC_SUBSET = frozenset({"C", "N", "O", "F", "S", "Cl", "Br"})
# elements that may carry a lowercase aromatic symbol
AROMATIC_CAPABLE = frozenset({"C", "N", "O", "S", "Si"})

# every symbol the SMILES reader recognises, so that out-of-vocabulary
# elements are reported as such rather than as syntax errors
KNOWN_SYMBOLS = frozenset({
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si",
    "P", "S", "Cl", "Ar", "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni",
    "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr", "Nb",
    "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In", "Sn", "Sb", "Te", "I", "Xe",
    "Cs", "Ba", "La", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl",
    "Pb", "Bi", "Po", "At", "Rn",
})


def default_valence(symbol: str, used: int) -> int | None:
    """Smallest allowed valence that accommodates ``used`` bond orders."""
    for v in VALENCES[symbol]:
        if v >= used:
            return v
    return None
