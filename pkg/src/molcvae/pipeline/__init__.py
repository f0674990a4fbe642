"""Ingestion, training, checkpoints and sampling."""

from molcvae.pipeline.dataset import (
    Dataset,
    DatasetRecord,
    IngestResult,
    Rejection,
    build_dataset,
    bundled_path,
    ingest,
    ingest_lines,
    split_indices,
    write_rejections,
)
from molcvae.pipeline.sampling import (
    Attempt,
    ConfigMismatchError,
    read_generation,
    sample,
    write_generation,
)
from molcvae.pipeline.training import (
    BETA_GRID,
    Checkpoint,
    DivergenceError,
    TrainingConfig,
    format_loss_csv,
    train,
)

__all__ = [
    "BETA_GRID",
    "Attempt",
    "Checkpoint",
    "ConfigMismatchError",
    "Dataset",
    "DatasetRecord",
    "DivergenceError",
    "IngestResult",
    "Rejection",
    "TrainingConfig",
    "build_dataset",
    "bundled_path",
    "format_loss_csv",
    "ingest",
    "ingest_lines",
    "read_generation",
    "sample",
    "split_indices",
    "train",
    "write_generation",
    "write_rejections",
]
