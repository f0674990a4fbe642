"""Build the bundled desk-scale corpora from a larger SMILES file.

The shipped files were made from the MOSES benchmark set (a ZINC Clean
Leads subset, MIT licence), keeping molecules with at most 16 heavy atoms::

    python scripts/build_corpus.py moses_le16.smi src/molcvae/data

Writes ``corpus20k.smi`` (20 000 molecules drawn with seed 2024) and
``mini.smi`` (its first 200 lines, used by ``selfcheck``).
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

from molcvae.chem import ChemError, parse_smiles, write_smiles

SIZE = 20_000
MINI = 200
SEED = 2024


def main(source: str, out_dir: str) -> None:
    seen = set()
    pool = []
    for line in open(source):
        smi = line.split()[0] if line.strip() else ""
        if not smi:
            continue
        try:
            mol = parse_smiles(smi)
        except ChemError:
            continue
        can = write_smiles(mol)
        if mol.num_atoms <= 16 and can not in seen:
            seen.add(can)
            pool.append(smi)
    rng = np.random.default_rng(SEED)
    chosen = [pool[i] for i in rng.choice(len(pool), size=SIZE, replace=False)]
    out = Path(out_dir)
    header = f"# {SIZE} molecules from the MOSES set (ZINC-derived, MIT licence), seed {SEED}\n"
    (out / "corpus20k.smi").write_text(header + "\n".join(chosen) + "\n")
    (out / "mini.smi").write_text(f"# first {MINI} molecules of corpus20k.smi\n" + "\n".join(chosen[:MINI]) + "\n")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
