"""Ingestion, property precomputation, splitting and the dataset cache."""

from __future__ import annotations

import hashlib
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from molcvae.chem import (
    ChargeError,
    ChemError,
    SmilesSyntaxError,
    ValenceError,
    VocabularyError,
    parse_smiles,
    write_smiles,
)
from molcvae.codec import FLAT_DIM, MAX_ATOMS, encode_flat
from molcvae.pipeline.container import read_container, write_container
from molcvae.props import ConditionVector, PropertyVector, compute_properties

CACHE_FORMAT = "molcvae-dataset"
CACHE_VERSION = 1
# a charge sign inside a bracket atom; a bare '-' elsewhere is a single bond
_CHARGE = re.compile(r"\[[^\]]*[+-][^\]]*\]|\+")


@dataclass(frozen=True)
class Rejection:
    line: int
    smiles: str
    reason: str


@dataclass
class IngestResult:
    smiles: list[str]
    rejections: list[Rejection]


def classify(smiles: str, max_atoms: int = MAX_ATOMS) -> tuple[str | None, str]:
    """``(canonical SMILES, "")`` for an accepted molecule, else ``(None, reason)``."""
    if "." in smiles:
        return None, "fragments"
    if _CHARGE.search(smiles):
        return None, "charge"
    try:
        mol = parse_smiles(smiles)
    except ChargeError:
        return None, "charge"
    except VocabularyError:
        return None, "vocabulary"
    except SmilesSyntaxError:
        return None, "syntax"
    except ValenceError:
        return None, "valence"
    except ChemError:
        return None, "parse"
    if mol.num_atoms > max_atoms:
        return None, "size"
    return write_smiles(mol), ""


def read_smiles_lines(path: str | Path) -> list[tuple[int, str]]:
    """Numbered first fields of non-blank, non-comment lines (1-based)."""
    out = []
    with open(path, encoding="utf-8", errors="replace") as fh:
        for k, line in enumerate(fh, start=1):
            text = line.strip()
            if text and not text.startswith("#"):
                out.append((k, text.split()[0]))
    return out


def ingest_lines(lines: Iterable[tuple[int, str]], max_atoms: int = MAX_ATOMS) -> IngestResult:
    """Filter, canonicalise and deduplicate; every dropped line is logged."""
    kept: list[str] = []
    seen: set[str] = set()
    rejections = []
    for line_no, smi in lines:
        can, reason = classify(smi, max_atoms)
        if can is None:
            rejections.append(Rejection(line_no, smi, reason))
        elif can in seen:
            rejections.append(Rejection(line_no, smi, "duplicate"))
        else:
            seen.add(can)
            kept.append(can)
    return IngestResult(kept, rejections)


def ingest(path: str | Path, max_atoms: int = MAX_ATOMS) -> IngestResult:
    return ingest_lines(read_smiles_lines(path), max_atoms)


def write_rejections(path: str | Path, rejections: Sequence[Rejection]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("line\tsmiles\treason\n")
        for r in rejections:
            fh.write(f"{r.line}\t{r.smiles}\t{r.reason}\n")


def split_indices(n: int, seed: int, test_fraction: float = 0.2) -> tuple[np.ndarray, np.ndarray]:
    """Seeded shuffle, then the first ``n - round(n * test_fraction)`` go to training."""
    perm = np.random.default_rng(seed).permutation(n)
    n_test = int(np.floor(n * test_fraction + 0.5))
    return np.sort(perm[: n - n_test]), np.sort(perm[n - n_test:])


def _featurize(smiles: str) -> tuple[np.ndarray, tuple[float, float, float, float]]:
    mol = parse_smiles(smiles)
    return encode_flat(mol).astype(np.uint8), compute_properties(mol).as_tuple()


def featurize(smiles: Sequence[str], workers: int = 1, chunksize: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """One-hot matrices ``(n, 760)`` as uint8 and properties ``(n, 4)``.

    With ``workers > 1`` records are processed in a pool; results come
    back in input order, so the output does not depend on the pool size.
    """
    if workers > 1 and len(smiles) > chunksize:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_featurize, smiles, chunksize=chunksize))
    else:
        results = [_featurize(s) for s in smiles]
    flat = np.zeros((len(smiles), FLAT_DIM), dtype=np.uint8)
    props = np.zeros((len(smiles), 4))
    for k, (f, p) in enumerate(results):
        flat[k] = f
        props[k] = p
    return flat, props


@dataclass(frozen=True)
class DatasetRecord:
    canonical_smiles: str
    flat: np.ndarray
    properties: PropertyVector

    def conditions(self, active: Sequence[bool]) -> np.ndarray:
        return ConditionVector.from_properties(self.properties, list(active)).network_input()


@dataclass
class Dataset:
    """Canonical SMILES, one-hot matrices, properties and the train/test split."""

    smiles: list[str]
    flat: np.ndarray
    properties: np.ndarray
    train_idx: np.ndarray
    test_idx: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.smiles)
        if self.flat.shape != (n, FLAT_DIM) or self.properties.shape != (n, 4):
            raise ValueError("dataset arrays disagree on the number of records")
        both = np.concatenate([self.train_idx, self.test_idx])
        if len(np.unique(both)) != len(both) or (len(both) and (both.min() < 0 or both.max() >= n)):
            raise ValueError("train/test indices must be disjoint and in range")

    def __len__(self) -> int:
        return len(self.smiles)

    def record(self, i: int) -> DatasetRecord:
        return DatasetRecord(self.smiles[i], self.flat[i], PropertyVector(*map(float, self.properties[i])))

    def train_smiles(self) -> list[str]:
        return [self.smiles[i] for i in self.train_idx]

    def save(self, path: str | Path) -> None:
        header = {
            "format": CACHE_FORMAT,
            "version": CACHE_VERSION,
            "n_records": len(self.smiles),
            "meta": self.meta,
        }
        arrays = {
            "smiles": np.frombuffer("\n".join(self.smiles).encode("ascii"), dtype=np.uint8),
            "flat": self.flat.astype(np.uint8),
            "properties": self.properties.astype(np.float64),
            "train_idx": self.train_idx.astype(np.int64),
            "test_idx": self.test_idx.astype(np.int64),
        }
        write_container(path, header, arrays)

    @classmethod
    def load(cls, path: str | Path, spot_check: int = 0) -> Dataset:
        """Read a cache; ``spot_check`` records are re-derived and compared."""
        header, arrays = read_container(path)
        if header.get("format") != CACHE_FORMAT:
            raise ValueError(f"{path} is not a dataset cache")
        if header.get("version") != CACHE_VERSION:
            raise ValueError(f"unsupported dataset cache version {header.get('version')}")
        text = arrays["smiles"].tobytes().decode("ascii")
        smiles = text.split("\n") if text else []
        ds = cls(smiles, arrays["flat"], arrays["properties"], arrays["train_idx"], arrays["test_idx"],
                 header.get("meta", {}))
        for i in np.linspace(0, len(ds) - 1, num=min(spot_check, len(ds)), dtype=int):
            flat, props = _featurize(ds.smiles[i])
            if not (np.array_equal(flat, ds.flat[i]) and np.allclose(props, ds.properties[i], rtol=0, atol=1e-9)):
                raise ValueError(f"cache record {i} ({ds.smiles[i]}) does not match its SMILES")
        return ds


def build_dataset(smiles: Sequence[str], seed: int = 0, subsample: int | None = None, workers: int = 1,
                  meta: dict | None = None) -> Dataset:
    """Optional seeded subsample, featurization and an 8:2 split."""
    smiles = list(smiles)
    if subsample is not None and subsample < len(smiles):
        pick = np.sort(np.random.default_rng(seed).choice(len(smiles), size=subsample, replace=False))
        smiles = [smiles[i] for i in pick]
    flat, props = featurize(smiles, workers)
    train, test = split_indices(len(smiles), seed)
    return Dataset(smiles, flat, props, train, test, dict(meta or {}, seed=seed, subsample=subsample))


def bundled_path(name: str) -> Path:
    """Path of a data file shipped with the package (``corpus20k.smi``, ``mini.smi``)."""
    return Path(str(resources.files("molcvae") / "data" / name))


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
