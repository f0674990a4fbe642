"""Chemical graph model: SMILES, rings, aromaticity, fingerprints, patterns."""

from molcvae.chem.molecule import (
    Atom,
    Bond,
    BondOrder,
    ChargeError,
    ChemError,
    Molecule,
    SmilesSyntaxError,
    ValenceError,
    VocabularyError,
    check_valence,
)
from molcvae.chem.rings import RingInfo, perceive_rings
from molcvae.chem.smiles import canonical_order, canonicalize, parse_smiles, write_smiles

__all__ = [
    "Atom",
    "Bond",
    "BondOrder",
    "ChargeError",
    "ChemError",
    "Molecule",
    "RingInfo",
    "SmilesSyntaxError",
    "ValenceError",
    "VocabularyError",
    "canonical_order",
    "canonicalize",
    "check_valence",
    "parse_smiles",
    "perceive_rings",
    "write_smiles",
]
