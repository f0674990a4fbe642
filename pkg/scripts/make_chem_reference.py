"""Regenerate tests/data/chem_reference.jsonl from RDKit (oracle only).

Records aromaticity flags, implicit hydrogen counts, SSSR size, unfolded
Morgan radius-2 counts and Tanimoto similarities to the first molecule::

    python scripts/make_chem_reference.py corpus.smi tests/data/chem_reference.jsonl
"""

from __future__ import annotations

import json
import sys

from rdkit import Chem, DataStructs, RDLogger
from rdkit.Chem import rdMolDescriptors

sys.path.insert(0, __file__.rsplit("/", 1)[0])
from make_golden import CURATED  # noqa: E402


def main(corpus: str, out_path: str, n: int = 80) -> None:
    RDLogger.DisableLog("rdApp.*")
    smiles = list(CURATED)
    lines = [line.split()[0] for line in open(corpus) if line.strip() and not line.startswith("#")]
    stride = len(lines) // (n - len(smiles))
    smiles += lines[1::stride][: n - len(smiles)]
    mols = [Chem.MolFromSmiles(s) for s in smiles]
    fps = [rdMolDescriptors.GetMorganFingerprintAsBitVect(m, 2, nBits=2048) for m in mols]
    with open(out_path, "w") as out:
        for smi, mol, fp in zip(smiles, mols, fps):
            counts = rdMolDescriptors.GetMorganFingerprint(mol, 2).GetNonzeroElements()
            row = {
                "smiles": smi,
                "aromatic": [int(a.GetIsAromatic()) for a in mol.GetAtoms()],
                "hydrogens": [a.GetTotalNumHs() for a in mol.GetAtoms()],
                "rings": mol.GetRingInfo().NumRings(),
                "morgan": sorted([int(k), int(v)] for k, v in counts.items()),
                "tanimoto_to_first": DataStructs.TanimotoSimilarity(fps[0], fp),
            }
            out.write(json.dumps(row) + "\n")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
