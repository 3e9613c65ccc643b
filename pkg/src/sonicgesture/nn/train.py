"""Mini-batch SGD training, evaluation and history export."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from sonicgesture.core.config import NoiseInjectionParams, PipelineConfig, TrainConfig
from sonicgesture.core.dataset import (
    ImageCache,
    assemble_split,
    augment_batch,
    stratified_split,
)
from sonicgesture.core.errors import DataError, NumericalError
from sonicgesture.core.metrics import ConfusionMatrix
from sonicgesture.core.models import FusionMode, Manifest, Split
from sonicgesture.core.seeding import rng_for
from sonicgesture.nn.fusion import FusionModel, predict_batch
from sonicgesture.nn.layers import softmax_crossentropy

logger = logging.getLogger(__name__)

HISTORY_HEADER = ("epoch", "train_loss", "train_acc", "val_loss", "val_acc")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: Optional[float] = None
    val_acc: Optional[float] = None


Arrays = tuple[np.ndarray, ...]


def sgd_step(model: FusionModel, learning_rate: float) -> None:
    """In-place update p -= lr * dL/dp for every parameter."""
    grads = dict(model.named_grads())
    for name, param in model.named_params():
        param -= learning_rate * grads[name]


def evaluate_arrays(
    model: FusionModel, inputs: Sequence[np.ndarray], labels: np.ndarray, batch_size: int = 64
) -> tuple[float, float, np.ndarray]:
    """Mean loss, accuracy and predicted labels without touching the weights."""
    predicted, probabilities = predict_batch(model, inputs, batch_size)
    picked = probabilities[np.arange(labels.shape[0]), labels]
    loss = float(-np.mean(np.log(np.maximum(picked, 1e-300))))
    return loss, float(np.mean(predicted == labels)), predicted


def fit(
    model: FusionModel,
    inputs: Sequence[np.ndarray],
    labels: np.ndarray,
    cfg: TrainConfig,
    val: tuple[Sequence[np.ndarray], np.ndarray] | None = None,
) -> list[EpochRecord]:
    """
    Train ``model`` in place on already-assembled arrays.

    Each epoch visits the examples in the order of
    ``rng_for(cfg.seed, "shuffle", epoch)``; the reported training loss and
    accuracy are averaged over batches as they were seen, before each update.
    """
    n = int(labels.shape[0])
    if n == 0:
        raise DataError("training set is empty")
    dtype = np.dtype(cfg.dtype)
    model.astype(dtype)
    data = [np.asarray(x, dtype=dtype) for x in inputs]
    labels = np.asarray(labels, dtype=np.int64)

    history: list[EpochRecord] = []
    for epoch in range(1, cfg.epochs + 1):
        order = rng_for(cfg.seed, "shuffle", epoch).permutation(n)
        total_loss = 0.0
        correct = 0
        for batch, start in enumerate(range(0, n, cfg.batch_size)):
            index = order[start : start + cfg.batch_size]
            logits = model.forward([x[index] for x in data])
            loss, grad = softmax_crossentropy(logits, labels[index])
            if not math.isfinite(loss) or not np.all(np.isfinite(logits)):
                raise NumericalError("non-finite training loss", epoch=epoch, batch=batch)
            total_loss += loss * index.shape[0]
            correct += int(np.sum(logits.argmax(axis=1) == labels[index]))
            model.backward(grad)
            sgd_step(model, cfg.learning_rate)

        record = EpochRecord(epoch=epoch, train_loss=total_loss / n, train_acc=correct / n)
        if val is not None and val[1].shape[0] > 0:
            val_loss, val_acc, _ = evaluate_arrays(model, val[0], val[1], cfg.batch_size)
            record = EpochRecord(epoch, record.train_loss, record.train_acc, val_loss, val_acc)
        history.append(record)
        logger.info(
            "epoch %d/%d train_loss=%.4f train_acc=%.3f val_loss=%s val_acc=%s",
            epoch,
            cfg.epochs,
            record.train_loss,
            record.train_acc,
            "-" if record.val_loss is None else f"{record.val_loss:.4f}",
            "-" if record.val_acc is None else f"{record.val_acc:.3f}",
        )
    return history


def train(
    model: FusionModel,
    manifest: Manifest,
    mode: FusionMode,
    cfg: TrainConfig,
    root: str | Path,
    pipeline: PipelineConfig | None = None,
    injection: NoiseInjectionParams | None = None,
    cache: ImageCache | None = None,
    workers: int = 1,
) -> tuple[FusionModel, list[EpochRecord]]:
    """
    Train on the manifest's training rows, validating on its validation rows.

    When the manifest carries no validation rows, ``cfg.val_fraction`` of the
    training rows are split off per class first. Augmented copies are added to
    the training arrays only.
    """
    if model.mode is not mode:
        raise ValueError(f"model is {model.mode.value} but training mode is {mode.value}")
    if len(manifest.split(Split.VAL)) == 0:
        manifest = stratified_split(manifest, cfg.val_fraction, cfg.seed)
    train_rows = manifest.split(Split.TRAIN)
    if len(train_rows) == 0:
        raise DataError("manifest has no training rows")

    inputs, labels = assemble_split(train_rows, root, mode, pipeline, injection, cache, workers)
    inputs, labels = augment_batch(inputs, labels, cfg.augmentation, cfg.seed)
    val_rows = manifest.split(Split.VAL)
    val: tuple[Arrays, np.ndarray] | None = None
    if len(val_rows):
        val = assemble_split(val_rows, root, mode, pipeline, None, cache, workers)
    logger.info(
        "training %s model on %d examples (%d originals), %d validation",
        mode.value,
        labels.shape[0],
        len(train_rows),
        0 if val is None else val[1].shape[0],
    )
    history = fit(model, inputs, labels, cfg, val)
    return model, history


def evaluate(
    model: FusionModel,
    manifest: Manifest,
    mode: FusionMode,
    root: str | Path,
    pipeline: PipelineConfig | None = None,
    cache: ImageCache | None = None,
    workers: int = 1,
) -> tuple[float, ConfusionMatrix]:
    """Accuracy and confusion matrix over every row of ``manifest``."""
    if model.mode is not mode:
        raise ValueError(f"model is {model.mode.value} but inputs are {mode.value}")
    if len(manifest) == 0:
        raise DataError("no rows to evaluate")
    inputs, labels = assemble_split(manifest, root, mode, pipeline, None, cache, workers)
    predicted, _ = predict_batch(model, inputs)
    matrix = ConfusionMatrix.from_predictions(labels, predicted)
    return matrix.accuracy(), matrix


def history_to_csv(history: Sequence[EpochRecord]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(HISTORY_HEADER)
    for record in history:
        writer.writerow(
            [
                record.epoch,
                f"{record.train_loss:.6f}",
                f"{record.train_acc:.6f}",
                "" if record.val_loss is None else f"{record.val_loss:.6f}",
                "" if record.val_acc is None else f"{record.val_acc:.6f}",
            ]
        )
    return buffer.getvalue()


def write_history(history: Sequence[EpochRecord], path: str | Path) -> Path:
    file_path = Path(path)
    try:
        file_path.parent.mkdir(parents=True, exist_ok=True)
        file_path.write_text(history_to_csv(history), encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot write history: {exc.strerror}", path=file_path) from exc
    return file_path
