"""Command line: ``molcvae preprocess | train | sample | eval | props | selfcheck | sweep``.

Exit codes:

    0  success
    1  selfcheck failure
    2  I/O error (missing or unreadable input, unwritable output) or bad usage
    3  empty result (nothing survived preprocessing)
    4  training diverged (non-finite loss or gradient)
    5  condition/config mismatch, or an off-grid condition without --allow-offgrid
"""

from __future__ import annotations

import json
import platform
import sys
import time
from datetime import datetime, timezone
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Sequence

import click
import numpy as np

from molcvae.chem import ChemError, parse_smiles
from molcvae.pipeline.container import ContainerError

EXIT_OK = 0
EXIT_SELFCHECK = 1
EXIT_IO = 2
EXIT_EMPTY = 3
EXIT_DIVERGED = 4
EXIT_MISMATCH = 5


def tool_version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "0+unknown"


def fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    raise click.exceptions.Exit(code)


def _sha256(path: Path) -> str | None:
    from molcvae.pipeline.dataset import file_digest

    return file_digest(path) if path.is_file() else None


def write_manifest(path: Path, command: str, config: dict, inputs: Sequence[Path], outputs: Sequence[Path],
                   started: float, seeds: dict | None = None) -> None:
    """Run record next to the outputs; only ``finished_at``/``runtime_s`` vary between identical runs."""
    manifest = {
        "command": command,
        "config": config,
        "seeds": seeds or {},
        "inputs": {str(p): _sha256(Path(p)) for p in inputs},
        "outputs": {str(p): _sha256(Path(p)) for p in outputs},
        "tool_version": tool_version(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "finished_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "runtime_s": round(time.time() - started, 3),
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _out_dir(path: str) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        fail(EXIT_IO, f"cannot create {out}: {exc}")
    return out


def _parse_condition(text: str | None, allow_offgrid: bool):
    from molcvae.props import ConditionError, ConditionVector

    try:
        return ConditionVector.parse(text or "", allow_offgrid=allow_offgrid)
    except ConditionError as exc:
        fail(EXIT_MISMATCH, str(exc))


def _parse_names(text: str) -> tuple[str, ...]:
    from molcvae.props import PROPERTY_NAMES, ConditionError, active_mask

    try:
        mask = active_mask(text.split(",")) if text else (False,) * 4
    except ConditionError as exc:
        raise click.BadParameter(str(exc)) from exc
    return tuple(n for n, on in zip(PROPERTY_NAMES, mask) if on)


def _load_dataset(path: str):
    from molcvae.pipeline import Dataset

    try:
        return Dataset.load(path, spot_check=3)
    except (OSError, ContainerError, KeyError) as exc:
        fail(EXIT_IO, f"cannot read dataset cache {path}: {exc}")
    except ValueError as exc:
        fail(EXIT_IO, f"invalid dataset cache {path}: {exc}")


def _load_checkpoint(path: str):
    from molcvae.pipeline import Checkpoint

    try:
        return Checkpoint.load(path)
    except (OSError, ContainerError, KeyError, ValueError) as exc:
        fail(EXIT_IO, f"cannot read checkpoint {path}: {exc}")


def _parse_layers(ctx, param, value: str) -> tuple[int, ...]:
    try:
        layers = tuple(int(v) for v in value.split(",") if v.strip())
    except ValueError as exc:
        raise click.BadParameter(f"expected comma-separated integers, got {value!r}") from exc
    if not layers or min(layers) < 1:
        raise click.BadParameter("layer widths must be positive")
    return layers


def architecture_options(fn):
    fn = click.option("--decoder-hidden", default="512,1024", show_default=True, callback=_parse_layers,
                      help="Decoder hidden widths.")(fn)
    fn = click.option("--latent-dim", default=128, show_default=True, type=click.IntRange(min=1))(fn)
    fn = click.option("--encoder-hidden", default="1024,512", show_default=True, callback=_parse_layers,
                      help="Encoder hidden widths.")(fn)
    return fn


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(tool_version(), prog_name="molcvae")
def main() -> None:
    """β-CVAE molecule generation toolkit."""


@main.command()
@click.argument("in_path", required=False)
@click.argument("out_dir", required=False, default="data_cache")
@click.option("--max-atoms", default=16, show_default=True, help="Heavy-atom limit.")
@click.option("--seed", default=0, show_default=True, help="Subsample and split seed.")
@click.option("--subsample", type=int, default=None, help="Keep this many molecules (seeded).")
@click.option("--workers", default=1, show_default=True, help="Processes for property precomputation.")
def preprocess(in_path: str | None, out_dir: str, max_atoms: int, seed: int, subsample: int | None,
               workers: int) -> None:
    """Ingest SMILES, compute properties, split 8:2 and write a dataset cache.

    IN_PATH defaults to the bundled 20k-molecule corpus. Writes
    OUT_DIR/dataset.bin, OUT_DIR/rejections.tsv and a manifest.
    """
    from molcvae.pipeline import build_dataset, bundled_path, ingest, write_rejections

    started = time.time()
    src = Path(in_path) if in_path else bundled_path("corpus20k.smi")
    try:
        result = ingest(src, max_atoms)
    except OSError as exc:
        fail(EXIT_IO, f"cannot read {src}: {exc}")
    out = _out_dir(out_dir)
    cache = out / "dataset.bin"
    rejects = out / "rejections.tsv"
    try:
        write_rejections(rejects, result.rejections)
    except OSError as exc:
        fail(EXIT_IO, f"cannot write {rejects}: {exc}")
    if not result.smiles:
        fail(EXIT_EMPTY, f"no molecules survived preprocessing ({len(result.rejections)} rejected)")
    ds = build_dataset(result.smiles, seed=seed, subsample=subsample, workers=workers,
                       meta={"source": src.name, "max_atoms": max_atoms, "rejected": len(result.rejections)})
    try:
        ds.save(cache)
    except OSError as exc:
        fail(EXIT_IO, f"cannot write {cache}: {exc}")
    click.echo(f"{len(ds)} molecules ({len(ds.train_idx)} train / {len(ds.test_idx)} test), "
               f"{len(result.rejections)} rejected -> {cache}")
    write_manifest(out / "manifest.json", "preprocess",
                   {"max_atoms": max_atoms, "subsample": subsample, "workers": workers},
                   [src], [cache, rejects], started, {"seed": seed})


@main.command(name="train")
@click.argument("cache")
@click.argument("out_dir")
@click.option("--beta", default=1.0, show_default=True, help="KL weight.")
@click.option("--optimizer", type=click.Choice(["adam", "hyperadam"]), default="adam", show_default=True)
@click.option("--epochs", default=100, show_default=True)
@click.option("--batch", "batch_size", default=256, show_default=True)
@click.option("--lr", "learning_rate", default=0.005, show_default=True)
@click.option("--meta-lr", default=1e-3, show_default=True, help="Hypergradient step (hyperadam only).")
@click.option("--conditions", default="", help="Comma list of clogp,cmr,qed,sas or 'none'.")
@click.option("--seed", default=0, show_default=True)
@click.option("--checkpoint-every", default=0, show_default=True, help="Also checkpoint every k epochs.")
@click.option("--z-samples", default=1, show_default=True, help="Latent draws per input.")
@click.option("--resume", type=click.Path(), default=None, help="Continue from this checkpoint.")
@architecture_options
def train_cmd(cache: str, out_dir: str, beta: float, optimizer: str, epochs: int, batch_size: int,
              learning_rate: float, meta_lr: float, conditions: str, seed: int, checkpoint_every: int,
              z_samples: int, resume: str | None, encoder_hidden: tuple[int, ...], latent_dim: int,
              decoder_hidden: tuple[int, ...]) -> None:
    """Train on the training split of CACHE; writes checkpoint.bin and loss.csv."""
    from molcvae.pipeline import DivergenceError, TrainingConfig, format_loss_csv, train

    started = time.time()
    try:
        config = TrainingConfig(beta=beta, epochs=epochs, batch_size=batch_size, optimizer=optimizer,
                                learning_rate=learning_rate, meta_lr=meta_lr, seed=seed,
                                conditions=_parse_names(conditions), checkpoint_every=checkpoint_every,
                                z_samples=z_samples, encoder_hidden=encoder_hidden, latent_dim=latent_dim,
                                decoder_hidden=decoder_hidden)
    except ValueError as exc:
        raise click.BadParameter(str(exc)) from exc
    ds = _load_dataset(cache)
    start = _load_checkpoint(resume) if resume else None
    out = _out_dir(out_dir)
    ckpt_path = out / "checkpoint.bin"
    csv_path = out / "loss.csv"
    x = ds.flat[ds.train_idx]
    props = ds.properties[ds.train_idx]

    def on_epoch(epoch, loss, ckpt):
        click.echo(f"epoch {epoch:4d}  recon {loss.reconstruction:.4f}  kl {loss.kl:.4f}  total {loss.total:.4f}")
        csv_path.write_text(format_loss_csv(ckpt.history))
        if checkpoint_every and epoch % checkpoint_every == 0:
            ckpt.save(out / f"checkpoint_epoch{epoch:04d}.bin")

    try:
        ckpt = train(x, props, config, resume=start, on_epoch=on_epoch)
    except DivergenceError as exc:
        fail(EXIT_DIVERGED, f"training diverged: {exc}")
    except ValueError as exc:
        fail(EXIT_MISMATCH, str(exc))
    except OSError as exc:
        fail(EXIT_IO, str(exc))
    try:
        ckpt.save(ckpt_path)
        csv_path.write_text(format_loss_csv(ckpt.history))
    except OSError as exc:
        fail(EXIT_IO, f"cannot write outputs: {exc}")
    inputs = [Path(cache)] + ([Path(resume)] if resume else [])
    write_manifest(out / "manifest.json", "train", config.to_dict(), inputs, [ckpt_path, csv_path], started,
                   {"seed": seed})


@main.command()
@click.argument("checkpoint")
@click.argument("out_path")
@click.option("--condition", default="", help="Scaled targets, e.g. c1=2,c2=6.0 (CMR 60).")
@click.option("-n", "n", default=1000, show_default=True, help="Number of latent draws.")
@click.option("--seed", default=0, show_default=True)
@click.option("--allow-offgrid", is_flag=True, help="Accept targets off the condition grids.")
def sample(checkpoint: str, out_path: str, condition: str, n: int, seed: int, allow_offgrid: bool) -> None:
    """Generate molecules into a TSV (smiles, valid, properties, condition, reason)."""
    from molcvae.evaluation import validity_score
    from molcvae.pipeline import ConfigMismatchError, write_generation
    from molcvae.pipeline import sample as run_sample

    started = time.time()
    cond = _parse_condition(condition, allow_offgrid)
    ckpt = _load_checkpoint(checkpoint)
    out = Path(out_path)
    try:
        attempts = run_sample(ckpt, cond, n, seed)
    except ConfigMismatchError as exc:
        fail(EXIT_MISMATCH, str(exc))
    try:
        if n == 0:
            out.write_text("")
        else:
            write_generation(out, attempts)
    except OSError as exc:
        fail(EXIT_IO, f"cannot write {out}: {exc}")
    if attempts:
        click.echo(f"{n} attempts, validity {validity_score([a.valid for a in attempts]):.2f}% -> {out}")
    else:
        click.echo(f"0 attempts -> {out}")
    write_manifest(out.with_name(out.stem + ".manifest.json"), "sample",
                   {"condition": cond.describe(), "n": n, "allow_offgrid": allow_offgrid},
                   [Path(checkpoint)], [out], started, {"seed": seed})


@main.command(name="eval")
@click.argument("generation")
@click.argument("cache")
@click.argument("out_stem")
@click.option("--condition", default=None, help="Score against this condition instead of the file's.")
@click.option("--allow-offgrid", is_flag=True)
@click.option("--exemplars", default=3, show_default=True, help="Nearest-neighbour pairs to report.")
@click.option("--similarity-threshold", type=float, default=None,
              help="Also report Tanimoto-threshold novelty/uniqueness.")
def eval_cmd(generation: str, cache: str, out_stem: str, condition: str | None, allow_offgrid: bool,
             exemplars: int, similarity_threshold: float | None) -> None:
    """Score a generation TSV; writes OUT_STEM.json and OUT_STEM.md."""
    from molcvae.evaluation import evaluate
    from molcvae.pipeline import read_generation
    from molcvae.props import PropertyVector

    started = time.time()
    try:
        attempts = read_generation(generation)
    except (OSError, ValueError) as exc:
        fail(EXIT_IO, f"cannot read {generation}: {exc}")
    if not attempts:
        fail(EXIT_EMPTY, f"{generation} holds no attempts")
    ds = _load_dataset(cache)
    cond = _parse_condition(condition, allow_offgrid) if condition is not None else attempts[0].condition
    dataset_props = {s: PropertyVector(*map(float, p)) for s, p in zip(ds.smiles, ds.properties)}
    report = evaluate(
        [a.smiles for a in attempts], [a.valid for a in attempts], [a.properties for a in attempts], cond,
        ds.train_smiles(), dataset_props, exemplars, similarity_threshold,
        {"generation": Path(generation).name, "cache": Path(cache).name},
    )
    try:
        Path(out_stem).parent.mkdir(parents=True, exist_ok=True)
        js, md = report.write(out_stem)
    except OSError as exc:
        fail(EXIT_IO, f"cannot write report: {exc}")
    click.echo(report.to_markdown())
    write_manifest(Path(str(out_stem) + ".manifest.json"), "eval",
                   {"condition": cond.describe(), "exemplars": exemplars,
                    "similarity_threshold": similarity_threshold},
                   [Path(generation), Path(cache)], [js, md], started)


@main.command()
@click.argument("smiles", nargs=-1)
@click.option("--file", "file_", type=click.Path(), default=None, help="Read SMILES from a file, one per line.")
@click.option("--json", "as_json", is_flag=True, help="Emit a JSON array.")
@click.option("--manifest", type=click.Path(), default=None, help="Write a run manifest here.")
def props(smiles: tuple[str, ...], file_: str | None, as_json: bool, manifest: str | None) -> None:
    """Print ClogP, CMR, QED, SAS and Ghose flags per molecule."""
    from molcvae.props import compute_properties, ghose_pass

    started = time.time()
    items = list(smiles)
    if file_:
        try:
            items += [ln.split()[0] for ln in Path(file_).read_text().splitlines() if ln.strip()]
        except OSError as exc:
            fail(EXIT_IO, f"cannot read {file_}: {exc}")
    rows = []
    for s in items:
        try:
            p = compute_properties(parse_smiles(s))
        except ChemError as exc:
            rows.append({"smiles": s, "error": str(exc)})
            continue
        g = ghose_pass(p)
        rows.append({"smiles": s, "clogp": p.clogp, "cmr": p.cmr, "qed": p.qed, "sas": p.sas,
                     "ghose_clogp": g[0], "ghose_cmr": g[1]})
    if as_json:
        click.echo(json.dumps(rows, indent=2))
    else:
        click.echo("smiles\tclogp\tcmr\tqed\tsas\tghose_clogp\tghose_cmr")
        for r in rows:
            if "error" in r:
                click.echo(f"{r['smiles']}\tERROR\t{r['error']}")
            else:
                click.echo(f"{r['smiles']}\t{r['clogp']:.4f}\t{r['cmr']:.4f}\t{r['qed']:.4f}\t{r['sas']:.4f}"
                           f"\t{int(r['ghose_clogp'])}\t{int(r['ghose_cmr'])}")
    if manifest:
        write_manifest(Path(manifest), "props", {"n": len(items), "json": as_json},
                       [Path(file_)] if file_ else [], [], started)


@main.command()
@click.option("--nets", default=20, show_default=True, help="Random tiny networks for gradient checks.")
@click.option("--manifest", type=click.Path(), default=None, help="Write a run manifest here.")
def selfcheck(nets: int, manifest: str | None) -> None:
    """Gradient, KL, codec and data-table checks; exit 1 on any failure."""
    from molcvae.selfcheck import run_checks

    started = time.time()
    results = run_checks(n_nets=nets, echo=click.echo)
    ok = all(r.passed for r in results)
    click.echo(f"selfcheck {'PASS' if ok else 'FAIL'} ({time.time() - started:.1f} s)")
    if manifest:
        write_manifest(Path(manifest), "selfcheck", {"nets": nets, "passed": ok}, [], [], started)
    if not ok:
        raise click.exceptions.Exit(EXIT_SELFCHECK)


@main.command()
@click.argument("cache")
@click.argument("out_dir")
@click.option("--betas", default="0.01,0.1,0.5,1,2,5,10", show_default=True)
@click.option("--conditions", default="clogp,cmr", show_default=True)
@click.option("--condition", default="c1=2,c2=6.0", show_default=True, help="Sampling condition.")
@click.option("--epochs", default=100, show_default=True)
@click.option("--batch", "batch_size", default=256, show_default=True)
@click.option("--optimizer", type=click.Choice(["adam", "hyperadam"]), default="adam", show_default=True)
@click.option("-n", "n", default=1000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@architecture_options
def sweep(cache: str, out_dir: str, betas: str, conditions: str, condition: str, epochs: int, batch_size: int,
          optimizer: str, n: int, seed: int, encoder_hidden: tuple[int, ...], latent_dim: int,
          decoder_hidden: tuple[int, ...]) -> None:
    """Train, sample and evaluate over a β grid; writes a uniqueness-vs-β table."""
    from molcvae.evaluation import evaluate
    from molcvae.pipeline import (
        ConfigMismatchError,
        DivergenceError,
        TrainingConfig,
        format_loss_csv,
        train,
        write_generation,
    )
    from molcvae.pipeline import sample as run_sample

    started = time.time()
    try:
        grid = [float(b) for b in betas.split(",") if b.strip()]
    except ValueError as exc:
        raise click.BadParameter(f"bad beta list: {exc}") from exc
    names = _parse_names(conditions)
    cond = _parse_condition(condition if names else "", False)
    ds = _load_dataset(cache)
    out = _out_dir(out_dir)
    x = ds.flat[ds.train_idx]
    props = ds.properties[ds.train_idx]
    train_smiles = ds.train_smiles()
    rows = []
    outputs = []
    for beta in grid:
        tag = f"beta_{beta:g}"
        config = TrainingConfig(beta=beta, epochs=epochs, batch_size=batch_size, optimizer=optimizer,
                                seed=seed, conditions=names, encoder_hidden=encoder_hidden,
                                latent_dim=latent_dim, decoder_hidden=decoder_hidden)
        try:
            ckpt = train(x, props, config)
            attempts = run_sample(ckpt, cond, n, seed)
        except DivergenceError as exc:
            fail(EXIT_DIVERGED, f"β={beta:g}: {exc}")
        except ConfigMismatchError as exc:
            fail(EXIT_MISMATCH, str(exc))
        ckpt.save(out / f"{tag}.checkpoint.bin")
        (out / f"{tag}.loss.csv").write_text(format_loss_csv(ckpt.history))
        write_generation(out / f"{tag}.tsv", attempts)
        report = evaluate([a.smiles for a in attempts], [a.valid for a in attempts],
                          [a.properties for a in attempts], cond, train_smiles, None, 0, None,
                          {"beta": beta, "seed": seed})
        report.write(out / f"{tag}.report")
        outputs += [out / f"{tag}.checkpoint.bin", out / f"{tag}.tsv"]
        rows.append({"beta": beta, "validity": report.validity, "novelty": report.novelty,
                     "uniqueness": report.uniqueness, "single": report.single_objective,
                     "multi": report.multi_objective})
        click.echo(f"β={beta:g}: validity {report.validity:.2f}  uniqueness {report.uniqueness:.2f}")
    table = ["| β | Validity (%) | Novelty (%) | Uniqueness (%) |", "|---:|---:|---:|---:|"]
    table += [f"| {r['beta']:g} | {r['validity']:.2f} | {r['novelty']:.2f} | {r['uniqueness']:.2f} |" for r in rows]
    (out / "sweep.md").write_text("\n".join(table) + "\n")
    (out / "sweep.json").write_text(json.dumps(rows, indent=2, sort_keys=True) + "\n")
    click.echo("\n".join(table))
    write_manifest(out / "manifest.json", "sweep",
                   {"betas": grid, "conditions": list(names), "condition": cond.describe(), "epochs": epochs,
                    "batch": batch_size, "optimizer": optimizer, "n": n, "encoder_hidden": list(encoder_hidden),
                    "latent_dim": latent_dim, "decoder_hidden": list(decoder_hidden)},
                   [Path(cache)], outputs + [out / "sweep.md", out / "sweep.json"], started, {"seed": seed})


if __name__ == "__main__":
    sys.exit(main())
