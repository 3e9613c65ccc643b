"""Tests for SGD training, evaluation, history export and checkpoints."""

from pathlib import Path

import numpy as np
import pytest

from sonicgesture.core.config import AugmentationPolicy, SimConfig, TrainConfig
from sonicgesture.core.doppler import synth_dataset
from sonicgesture.core.errors import CheckpointError, DataError, NumericalError
from sonicgesture.core.models import FusionMode, Manifest, Split
from sonicgesture.nn.checkpoint import (
    MAGIC,
    checkpoint_bytes,
    checkpoint_from_bytes,
    load_checkpoint,
    save_checkpoint,
)
from sonicgesture.nn.fusion import build_model
from sonicgesture.nn.train import (
    EpochRecord,
    evaluate,
    evaluate_arrays,
    fit,
    history_to_csv,
    train,
    write_history,
)

SMALL = {"input_size": 32, "channels": (4, 4, 4, 4, 4)}
NO_AUGMENT = AugmentationPolicy(copies=0)


def _config(**overrides) -> TrainConfig:
    values = {"epochs": 1, "batch_size": 2, "augmentation": NO_AUGMENT}
    values.update(overrides)
    return TrainConfig(**values)


def _data(n: int, seed: int = 0) -> tuple[list[np.ndarray], np.ndarray]:
    rng = np.random.default_rng(seed)
    return [rng.uniform(size=(n, 1, 32, 32))], rng.integers(0, 6, size=n)


@pytest.fixture(scope="module")
def corpus(tmp_path_factory: pytest.TempPathFactory) -> tuple[Path, Manifest]:
    root = tmp_path_factory.mktemp("corpus")
    manifest = synth_dataset(2, SimConfig(), seed=11, out_dir=root, test_per_class=1)
    return root, manifest


def test_zero_learning_rate_leaves_weights_unchanged() -> None:
    """Test that an lr=0 epoch changes no parameter."""
    model = build_model(FusionMode.SINGLE, seed=0, **SMALL)
    before = {name: value.copy() for name, value in model.named_params()}
    inputs, labels = _data(4)
    fit(model, inputs, labels, _config(learning_rate=0.0))
    for name, value in model.named_params():
        np.testing.assert_array_equal(value, before[name], err_msg=name)


def test_overfits_a_single_example() -> None:
    """Test that repeated SGD steps drive the loss on one example to near zero."""
    model = build_model(FusionMode.SINGLE, seed=1, **SMALL)
    inputs, labels = _data(1, seed=2)
    history = fit(model, inputs, labels, _config(learning_rate=0.3, epochs=400, batch_size=1))
    assert history[0].train_loss > history[-1].train_loss
    assert history[-1].train_loss < 0.01
    assert history[-1].train_acc == 1.0


def test_training_is_deterministic() -> None:
    """Test that two runs with one seed end with equal weights."""
    inputs, labels = _data(6, seed=3)
    runs = []
    for _ in range(2):
        model = build_model(FusionMode.SINGLE, seed=4, **SMALL)
        history = fit(model, inputs, labels, _config(epochs=3, seed=9, learning_rate=0.05))
        runs.append((history, model))
    assert runs[0][0] == runs[1][0]
    for (name, a), (_, b) in zip(runs[0][1].named_params(), runs[1][1].named_params()):
        np.testing.assert_array_equal(a, b, err_msg=name)


def test_one_small_step_does_not_increase_the_loss() -> None:
    """Test that one small SGD step does not raise the batch loss."""
    model = build_model(FusionMode.SINGLE, seed=7, **SMALL)
    inputs, labels = _data(8, seed=8)
    before, _, _ = evaluate_arrays(model, inputs, labels)
    fit(model, inputs, labels, _config(learning_rate=1e-4, batch_size=8))
    after, _, _ = evaluate_arrays(model, inputs, labels)
    assert after <= before


def test_non_finite_loss_stops_training() -> None:
    """Test that a non-finite loss raises NumericalError with its epoch."""
    model = build_model(FusionMode.SINGLE, seed=0, **SMALL)
    model.head.params()["bias"][:] = np.nan
    inputs, labels = _data(4)
    with pytest.raises(NumericalError) as excinfo:
        fit(model, inputs, labels, _config())
    assert (excinfo.value.epoch, excinfo.value.batch) == (1, 0)


def test_empty_training_set_is_rejected() -> None:
    """Test that fitting on no examples raises DataError."""
    model = build_model(FusionMode.SINGLE, seed=0, **SMALL)
    with pytest.raises(DataError):
        fit(model, [np.zeros((0, 1, 32, 32))], np.zeros(0, dtype=int), _config())


def test_float32_training_casts_parameters() -> None:
    """Test that float32 training casts every parameter."""
    model = build_model(FusionMode.SINGLE, seed=0, **SMALL)
    inputs, labels = _data(4)
    fit(model, inputs, labels, _config(dtype="float32"))
    assert model.dtype == np.float32
    assert all(value.dtype == np.float32 for _, value in model.named_params())


def test_evaluate_arrays_reports_loss_and_accuracy() -> None:
    """Test that array evaluation reports loss, accuracy and predictions."""
    model = build_model(FusionMode.SINGLE, seed=5, **SMALL)
    inputs, labels = _data(5, seed=6)
    loss, accuracy, predicted = evaluate_arrays(model, inputs, labels)
    assert loss > 0 and 0.0 <= accuracy <= 1.0
    assert accuracy == pytest.approx(float(np.mean(predicted == labels)))


def test_history_csv_layout(tmp_path: Path) -> None:
    """Test the history CSV header and empty validation columns."""
    history = [
        EpochRecord(1, 1.5, 0.25),
        EpochRecord(2, 1.25, 0.5, val_loss=1.75, val_acc=0.125),
    ]
    text = history_to_csv(history)
    assert text.splitlines() == [
        "epoch,train_loss,train_acc,val_loss,val_acc",
        "1,1.500000,0.250000,,",
        "2,1.250000,0.500000,1.750000,0.125000",
    ]
    assert write_history(history, tmp_path / "h.csv").read_text(encoding="utf-8") == text


def test_checkpoint_round_trip(tmp_path: Path) -> None:
    """Test that a checkpoint restores the mode and every weight."""
    model = build_model(FusionMode.LATE, seed=6, **SMALL)
    path = save_checkpoint(model, tmp_path / "late.sgf", {"seed": 6, "mode": "late"})
    assert path.read_bytes().startswith(MAGIC)
    restored, metadata = load_checkpoint(path)
    assert restored.mode is FusionMode.LATE
    assert metadata == {"seed": 6, "mode": "late"}
    for (name, a), (_, b) in zip(model.named_params(), restored.named_params()):
        np.testing.assert_array_equal(a, b, err_msg=name)
    batch = [np.random.default_rng(1).uniform(size=(2, 1, 32, 32)) for _ in range(2)]
    np.testing.assert_array_equal(model.forward(batch), restored.forward(batch))


def test_checkpoint_keeps_float32_parameters() -> None:
    """Test that float32 weights stay float32 through a checkpoint."""
    model = build_model(FusionMode.SINGLE, seed=2, **SMALL).astype(np.float32)
    restored, _ = checkpoint_from_bytes(checkpoint_bytes(model))
    assert restored.dtype == np.float32
    np.testing.assert_array_equal(restored.head.params()["weight"], model.head.params()["weight"])


def test_corrupt_checkpoints_are_rejected(tmp_path: Path) -> None:
    """Test that damaged checkpoints raise CheckpointError."""
    data = checkpoint_bytes(build_model(FusionMode.SINGLE, seed=0, **SMALL))
    with pytest.raises(CheckpointError):
        checkpoint_from_bytes(b"NOTMAGIC" + data[8:])
    with pytest.raises(CheckpointError):
        checkpoint_from_bytes(data[:-4])
    with pytest.raises(CheckpointError):
        checkpoint_from_bytes(data + b"\x00")
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "missing.sgf")


def test_train_and_evaluate_on_a_simulated_corpus(corpus: tuple[Path, Manifest]) -> None:
    """Test training and evaluation on a small simulated corpus."""
    root, manifest = corpus
    model = build_model(FusionMode.EARLY, seed=3, channels=(4, 4, 4, 4, 4))
    cfg = _config(epochs=2, batch_size=4, val_fraction=0.5, augmentation=AugmentationPolicy())
    model, history = train(model, manifest, FusionMode.EARLY, cfg, root)
    assert [record.epoch for record in history] == [1, 2]
    assert all(record.val_acc is not None for record in history)

    accuracy, matrix = evaluate(model, manifest.split(Split.TEST), FusionMode.EARLY, root)
    assert matrix.total == 6
    assert accuracy == pytest.approx(matrix.accuracy())
    assert 0.0 <= accuracy <= 1.0


def test_train_rejects_mismatched_mode(corpus: tuple[Path, Manifest]) -> None:
    """Test that training a model in another mode is refused."""
    root, manifest = corpus
    model = build_model(FusionMode.SINGLE, seed=0, **SMALL)
    with pytest.raises(ValueError):
        train(model, manifest, FusionMode.LATE, _config(), root)
    with pytest.raises(DataError):
        train(
            build_model(FusionMode.SINGLE, seed=0),
            manifest.split(Split.TEST),
            FusionMode.SINGLE,
            _config(),
            root,
        )
