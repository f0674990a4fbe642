"""Generation metrics, condition satisfaction, nearest neighbours and reports.

All percentages are exact floats; rounding to two decimals happens only
when a report is rendered.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from molcvae.chem import parse_smiles
from molcvae.chem.fingerprint import Fingerprint, bulk_tanimoto, morgan_fingerprint
from molcvae.props import PROPERTY_NAMES, ConditionVector, PropertyVector, condition_satisfied, ghose_pass

REPORT_SCHEMA = 1
_LABELS = {"clogp": "ClogP", "cmr": "CMR", "qed": "QED", "sas": "SAS"}


class EmptySetError(ValueError):
    """A metric was asked for on an empty set."""


def validity_score(valid_flags: Sequence[bool]) -> float:
    """``100 * |valid| / n_s``."""
    if not len(valid_flags):
        raise EmptySetError("validity of an empty attempt set")
    return 100.0 * sum(bool(v) for v in valid_flags) / len(valid_flags)


def novelty_score(valid_smiles: Iterable[str], training: set[str] | frozenset[str]) -> float:
    """``100 * (1 - |C ∩ D| / |C|)`` over distinct canonical SMILES."""
    c = set(valid_smiles)
    if not c:
        raise EmptySetError("novelty of an empty valid set")
    return 100.0 * (1.0 - len(c & set(training)) / len(c))


def uniqueness_score(valid_smiles: Iterable[str], n_total: int) -> float:
    """``100 * |distinct valid| / n_s``; the denominator counts every attempt."""
    if n_total <= 0:
        raise EmptySetError("uniqueness of an empty attempt set")
    return 100.0 * len(set(valid_smiles)) / n_total


def uniqueness_among_valid(valid_smiles: Sequence[str]) -> float:
    """Secondary column: distinct valid over all valid."""
    if not len(valid_smiles):
        raise EmptySetError("uniqueness of an empty valid set")
    return 100.0 * len(set(valid_smiles)) / len(valid_smiles)


def fingerprint(smiles: str) -> Fingerprint:
    return morgan_fingerprint(parse_smiles(smiles), 2, 2048)


class FingerprintIndex:
    """Radius-2, 2048-bit fingerprints of a dataset, sorted by canonical SMILES."""

    def __init__(self, smiles: Iterable[str]):
        self.smiles = sorted(set(smiles))
        if not self.smiles:
            raise EmptySetError("nearest-neighbour search needs a non-empty dataset")
        self.bits = np.stack([fingerprint(s).bits for s in self.smiles])
        self.position = {s: k for k, s in enumerate(self.smiles)}

    def __len__(self) -> int:
        return len(self.smiles)

    def nearest(self, query: Fingerprint) -> tuple[str, float]:
        """Most similar entry; ties go to the lexicographically smallest SMILES."""
        sims = bulk_tanimoto(query, self.bits)
        k = int(np.argmax(sims))
        return self.smiles[k], float(sims[k])

    def max_similarity(self, query: Fingerprint) -> float:
        return float(bulk_tanimoto(query, self.bits).max())


def nearest_in_dataset(smiles: str, index: FingerprintIndex) -> tuple[str, float]:
    return index.nearest(fingerprint(smiles))


def novelty_similarity(valid_smiles: Iterable[str], index: FingerprintIndex, threshold: float) -> float:
    """Novelty where a molecule counts as known if any dataset entry reaches ``threshold`` Tanimoto."""
    c = sorted(set(valid_smiles))
    if not c:
        raise EmptySetError("novelty of an empty valid set")
    known = sum(index.max_similarity(fingerprint(s)) >= threshold for s in c)
    return 100.0 * (1.0 - known / len(c))


def uniqueness_similarity(valid_smiles: Iterable[str], n_total: int, threshold: float) -> float:
    """Uniqueness over greedy clusters: a molecule is new unless an earlier
    representative (canonical order) reaches ``threshold`` Tanimoto."""
    if n_total <= 0:
        raise EmptySetError("uniqueness of an empty attempt set")
    reps: list[np.ndarray] = []
    for s in sorted(set(valid_smiles)):
        fp = fingerprint(s)
        if reps and bulk_tanimoto(fp, np.stack(reps)).max() >= threshold:
            continue
        reps.append(fp.bits)
    return 100.0 * len(reps) / n_total


@dataclass(frozen=True)
class ObjectiveScores:
    single: dict[str, float]
    multi: float


def objective_scores(properties: Sequence[PropertyVector | None], condition: ConditionVector) -> ObjectiveScores:
    """Satisfaction percentages over valid molecules; missing properties count as misses."""
    names = condition.active_names()
    n = len(properties)
    if not names:
        return ObjectiveScores({}, 0.0)
    if n == 0:
        return ObjectiveScores({k: 0.0 for k in names}, 0.0)
    hits = {k: 0 for k in names}
    both = 0
    for p in properties:
        if p is None:
            continue
        ok = condition_satisfied(p, condition)
        for k in names:
            hits[k] += ok[k]
        both += all(ok[k] for k in names)
    single = {k: 100.0 * v / n for k, v in hits.items()}
    scores = ObjectiveScores(single, 100.0 * both / n)
    assert scores.multi <= min(single.values()), "multi-objective rate exceeds a single-objective rate"
    return scores


def ghose_rates(properties: Sequence[PropertyVector | None]) -> dict[str, float]:
    n = len(properties)
    if n == 0:
        return {"clogp": 0.0, "cmr": 0.0, "both": 0.0}
    flags = [ghose_pass(p) if p is not None else (False, False) for p in properties]
    return {
        "clogp": 100.0 * sum(a for a, _ in flags) / n,
        "cmr": 100.0 * sum(b for _, b in flags) / n,
        "both": 100.0 * sum(a and b for a, b in flags) / n,
    }


def distribution(values: Sequence[float]) -> dict[str, float]:
    """Box-plot numbers: quartiles, whiskers at 1.5 IQR and the outlier count."""
    a = np.asarray([v for v in values if v is not None and math.isfinite(v)], dtype=float)
    if a.size == 0:
        return {"n": 0}
    q1, med, q3 = (float(v) for v in np.percentile(a, [25, 50, 75]))
    iqr = q3 - q1
    lo, hi = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = a[(a >= lo) & (a <= hi)]
    return {
        "n": int(a.size), "mean": float(a.mean()), "q1": q1, "median": med, "q3": q3,
        "whisker_low": float(inside.min()), "whisker_high": float(inside.max()),
        "outliers": int(a.size - inside.size),
    }


@dataclass
class Exemplar:
    generated: str
    nearest: str
    similarity: float
    delta_qed: float
    delta_sas: float


@dataclass
class EvalReport:
    n_generated: int
    validity: float
    novelty: float
    uniqueness: float
    uniqueness_of_valid: float
    ghose: dict[str, float]
    single_objective: dict[str, float]
    multi_objective: float | None
    distributions: dict[str, dict[str, float]]
    exemplars: list[Exemplar] = field(default_factory=list)
    similarity: dict[str, float] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    schema: int = REPORT_SCHEMA

    def check(self) -> None:
        for name in ("validity", "novelty", "uniqueness", "uniqueness_of_valid"):
            v = getattr(self, name)
            if not 0.0 <= v <= 100.0:
                raise ValueError(f"{name} = {v} is outside [0, 100]")
        if self.single_objective and self.multi_objective is not None:
            if self.multi_objective > min(self.single_objective.values()):
                raise ValueError("multi-objective rate exceeds a single-objective rate")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Mapping) -> EvalReport:
        d = dict(d)
        d["exemplars"] = [Exemplar(**e) for e in d.get("exemplars", [])]
        return cls(**d)

    def to_json(self) -> str:
        self.check()
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_markdown(self) -> str:
        self.check()
        meta = self.metadata
        lines = [f"# Evaluation: {meta.get('condition', 'none')}", ""]
        if meta:
            lines += [f"- {k}: {v}" for k, v in sorted(meta.items())] + [""]
        lines += [
            "| Generated | Validity (%) | Novelty (%) | Uniqueness (%) | Uniqueness of valid (%) |",
            "|---:|---:|---:|---:|---:|",
            f"| {self.n_generated} | {self.validity:.2f} | {self.novelty:.2f} | {self.uniqueness:.2f} "
            f"| {self.uniqueness_of_valid:.2f} |",
            "",
        ]
        if self.similarity:
            lines += ["| Tanimoto-threshold metric | Value (%) |", "|---|---:|"]
            lines += [f"| {k} | {v:.2f} |" for k, v in sorted(self.similarity.items())] + [""]
        lines += ["| Ghose filter | Pass (%) |", "|---|---:|"]
        lines += [f"| {_LABELS.get(k, 'Both')} | {v:.2f} |" for k, v in self.ghose.items()] + [""]
        if self.single_objective:
            lines += ["| Objective | Satisfied (%) |", "|---|---:|"]
            lines += [f"| {_LABELS[k]} | {v:.2f} |" for k, v in self.single_objective.items()]
            if len(self.single_objective) > 1 and self.multi_objective is not None:
                lines.append(f"| All conditions | {self.multi_objective:.2f} |")
            lines.append("")
        lines += ["| Property | n | Mean | Q1 | Median | Q3 | Outliers |", "|---|---:|---:|---:|---:|---:|---:|"]
        for name, d in self.distributions.items():
            if d.get("n"):
                lines.append(
                    f"| {_LABELS[name]} | {d['n']} | {d['mean']:.2f} | {d['q1']:.2f} | {d['median']:.2f} "
                    f"| {d['q3']:.2f} | {d['outliers']} |"
                )
            else:
                lines.append(f"| {_LABELS[name]} | 0 | | | | | |")
        if self.exemplars:
            lines += ["", "| Generated | Nearest in dataset | Tanimoto | ΔQED | ΔSAS |", "|---|---|---:|---:|---:|"]
            lines += [
                f"| {e.generated} | {e.nearest} | {e.similarity:.2f} | {e.delta_qed:+.2f} | {e.delta_sas:+.2f} |"
                for e in self.exemplars
            ]
        return "\n".join(lines) + "\n"

    def write(self, stem: str | Path) -> tuple[Path, Path]:
        stem = Path(stem)
        js = stem.with_suffix(".json")
        md = stem.with_suffix(".md")
        js.write_text(self.to_json())
        md.write_text(self.to_markdown())
        return js, md


def evaluate(
    smiles: Sequence[str | None],
    valid: Sequence[bool],
    properties: Sequence[PropertyVector | None],
    condition: ConditionVector,
    training_smiles: Iterable[str],
    dataset_properties: Mapping[str, PropertyVector] | None = None,
    n_exemplars: int = 3,
    similarity_threshold: float | None = None,
    metadata: dict | None = None,
) -> EvalReport:
    """Full report for one generation set.

    ``dataset_properties`` (canonical SMILES -> properties) enables the
    nearest-neighbour exemplars for the highest-QED generated molecules.
    """
    n = len(valid)
    if n == 0:
        raise EmptySetError("cannot evaluate an empty generation set")
    training = set(training_smiles)
    good = [k for k in range(n) if valid[k]]
    valid_smiles = [smiles[k] for k in good]
    valid_props = [properties[k] for k in good]
    scores = objective_scores(valid_props, condition)
    report = EvalReport(
        n_generated=n,
        validity=validity_score(valid),
        novelty=novelty_score(valid_smiles, training) if valid_smiles else 0.0,
        uniqueness=uniqueness_score(valid_smiles, n),
        uniqueness_of_valid=uniqueness_among_valid(valid_smiles) if valid_smiles else 0.0,
        ghose=ghose_rates(valid_props),
        single_objective=scores.single,
        multi_objective=scores.multi if scores.single else None,
        distributions={
            name: distribution([p.as_tuple()[k] for p in valid_props if p is not None])
            for k, name in enumerate(PROPERTY_NAMES)
        },
        metadata=dict(metadata or {}, condition=condition.describe()),
    )
    if dataset_properties and n_exemplars and valid_smiles:
        index = FingerprintIndex(dataset_properties)
        ranked = sorted(
            {s: p for s, p in zip(valid_smiles, valid_props) if p is not None}.items(),
            key=lambda kv: (-kv[1].qed, kv[0]),
        )
        for s, p in ranked[:n_exemplars]:
            near, sim = nearest_in_dataset(s, index)
            q = dataset_properties[near]
            report.exemplars.append(Exemplar(s, near, sim, p.qed - q.qed, p.sas - q.sas))
    if similarity_threshold is not None and valid_smiles:
        index = FingerprintIndex(training)
        report.similarity = {
            f"novelty@{similarity_threshold:g}": novelty_similarity(valid_smiles, index, similarity_threshold),
            f"uniqueness@{similarity_threshold:g}": uniqueness_similarity(valid_smiles, n, similarity_threshold),
        }
    report.check()
    return report
