"""Regenerate tests/data/golden_props.tsv from RDKit (oracle only).

Run with an interpreter that has RDKit installed; the package itself never
imports it::

    python scripts/make_golden.py corpus.smi tests/data/golden_props.tsv
"""

from __future__ import annotations

import os
import sys

from rdkit import Chem, RDLogger
from rdkit.Chem import QED, Crippen, RDConfig

sys.path.append(os.path.join(RDConfig.RDContribDir, "SA_Score"))
import sascorer  # noqa: E402

# hand-picked edge cases: fused aromatics, tautomers, cages, S(VI), Si, halogens
CURATED = [
    "c1ccccc1", "Cc1ccccc1O", "c1ccc2ccccc2c1", "c1ccc-2cccc2cc1", "O=C1C=CC(=O)C=C1",
    "c1cc[nH]c1", "Cc1cc(C)n[nH]1", "c1ncc2[nH]cnc2n1", "O=c1cc[nH]c(=O)[nH]1", "Cn1cnc2c1c(=O)n(C)c(=O)n2C",
    "C1C2CC3CC1CC(C2)C3", "C1CC2(C1)CCC2", "N#CCc1ccccc1", "CS(C)(=O)=O", "CCOC(=O)N=S(N)(=O)c1ccc(Cl)cc1",
    "C[Si](C)(C)Oc1ccccc1", "FC(F)(F)c1ccc(Br)cc1", "ClC(Cl)(Cl)Cl", "CC(=O)NCC(F)(F)Br", "C#CCO",
    "c1ccsc1", "c1ccoc1",
]


def main(corpus: str, out_path: str) -> None:
    RDLogger.DisableLog("rdApp.*")
    smiles = list(CURATED)
    lines = [line.split()[0] for line in open(corpus) if line.strip()]
    stride = len(lines) // (50 - len(smiles))
    smiles += lines[::stride][: 50 - len(smiles)]
    with open(out_path, "w") as out:
        out.write("# reference values computed with RDKit (BSD licence)\n")
        out.write("smiles\tclogp\tcmr\tqed\tsas\tmw\thba\thbd\tpsa\trotb\tarom\talerts\n")
        for smi in smiles:
            mol = Chem.MolFromSmiles(smi)
            q = QED.properties(mol)
            row = [
                smi, Crippen.MolLogP(mol), Crippen.MolMR(mol), QED.qed(mol), sascorer.calculateScore(mol),
                q.MW, q.HBA, q.HBD, q.PSA, q.ROTB, q.AROM, q.ALERTS,
            ]
            out.write("\t".join(x if isinstance(x, str) else f"{x:.6f}" if isinstance(x, float) else str(x) for x in row))
            out.write("\n")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
