"""Command-line interface tests."""

import json
from pathlib import Path

import numpy as np
import pytest

from sonicgesture.cli import EXIT_DATA, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main, render_report
from sonicgesture.core.catalog import GestureCatalog
from sonicgesture.core.dataset import MANIFEST_FILENAME, read_manifest
from sonicgesture.core.dsp import read_pgm
from sonicgesture.core.wav import wav_read


@pytest.fixture(scope="module")
def corpus(tmp_path_factory: pytest.TempPathFactory) -> Path:
    root = tmp_path_factory.mktemp("cli") / "corpus"
    code = main(
        ["simulate", "--per-class", "2", "--test-per-class", "1", "--seed", "5", "--out", str(root)]
    )
    assert code == EXIT_OK
    return root


def test_gen_tone_writes_a_stereo_tone(tmp_path: Path) -> None:
    """Test that gen-tone writes a three-second stereo tone with equal channels."""
    out = tmp_path / "tone.wav"
    assert main(["gen-tone", "--freq", "20000", "--dur", "3", "--out", str(out)]) == EXIT_OK
    tone = wav_read(out)
    assert tone.sample_rate == 44100 and len(tone) == 132300
    np.testing.assert_array_equal(tone.top.samples, tone.bottom.samples)


def test_gen_tone_above_nyquist_is_a_usage_error(tmp_path: Path) -> None:
    """Test that an impossible tone exits with the usage code and writes nothing."""
    assert main(["gen-tone", "--freq", "30000", "--out", str(tmp_path / "x.wav")]) == EXIT_USAGE
    assert not (tmp_path / "x.wav").exists()


def test_missing_arguments_exit_with_usage() -> None:
    """Test that argparse errors exit with the usage code."""
    with pytest.raises(SystemExit) as excinfo:
        main(["train"])
    assert excinfo.value.code == EXIT_USAGE


def test_config_file_errors(tmp_path: Path) -> None:
    """Test that a bad key is a usage error and a missing file a data error."""
    typo = tmp_path / "typo.yaml"
    typo.write_text("train:\n  epoch: 3\n", encoding="utf-8")
    out = str(tmp_path / "t.wav")
    assert main(["gen-tone", "--config", str(typo), "--out", out]) == EXIT_USAGE
    assert main(["gen-tone", "--config", str(tmp_path / "none.yaml"), "--out", out]) == EXIT_DATA


def test_simulate_is_reproducible(tmp_path: Path, corpus: Path) -> None:
    """Test that simulating twice with one seed gives byte-identical corpora."""
    again = tmp_path / "again"
    args = ["simulate", "--per-class", "2", "--test-per-class", "1", "--seed", "5"]
    assert main(args + ["--out", str(again), "--workers", "2"]) == EXIT_OK
    first = (corpus / MANIFEST_FILENAME).read_bytes()
    assert (again / MANIFEST_FILENAME).read_bytes() == first
    for row in read_manifest(corpus / MANIFEST_FILENAME):
        assert (again / row.path).read_bytes() == (corpus / row.path).read_bytes()


def test_simulate_log_file_is_timestamped(tmp_path: Path) -> None:
    """Test that --log-file writes timestamped INFO records."""
    log = tmp_path / "run.log"
    args = ["simulate", "--per-class", "1", "--out", str(tmp_path / "c"), "--log-file", str(log)]
    assert main(args) == EXIT_OK
    line = next(l for l in log.read_text(encoding="utf-8").splitlines() if "synthesised" in l)
    assert line[:4].isdigit() and " INFO " in line


def test_preprocess_writes_three_images_per_clip(tmp_path: Path, corpus: Path) -> None:
    """Test that preprocess writes top, bottom and mixdown images and fills the cache."""
    out = tmp_path / "pgm"
    assert main(["preprocess", str(corpus), "--out", str(out), "--split", "test"]) == EXIT_OK
    images = sorted(out.rglob("*.pgm"))
    assert len(images) == 18
    assert read_pgm(images[0]).pixels.shape == (100, 100)
    assert any((corpus / ".cache").glob("*.npz"))


def test_augment_extends_the_manifest(tmp_path: Path) -> None:
    """Test that augment adds one copy per training clip, once."""
    root = tmp_path / "aug"
    assert main(["simulate", "--per-class", "1", "--out", str(root)]) == EXIT_OK
    assert main(["augment", str(root), "--copies", "1", "--alpha", "0.01"]) == EXIT_OK
    manifest = read_manifest(root / MANIFEST_FILENAME)
    assert len(manifest) == 12
    assert sum(row.path.endswith("_aug1.wav") for row in manifest) == 6

    wav_count = len(list(root.rglob("*.wav")))
    assert main(["augment", str(root), "--copies", "1", "--alpha", "0.01"]) == EXIT_OK
    assert read_manifest(root / MANIFEST_FILENAME) == manifest
    assert len(list(root.rglob("*.wav"))) == wav_count == 12


def test_train_eval_report(tmp_path: Path, corpus: Path, capsys: pytest.CaptureFixture) -> None:
    """Test the train, eval and report commands end to end on a tiny corpus."""
    checkpoint = tmp_path / "early.sgf"
    train_args = ["train", str(corpus), "--mode", "early", "--out", str(checkpoint)]
    assert main(train_args + ["--epochs", "1", "--batch-size", "4", "--seed", "1"]) == EXIT_OK
    history = tmp_path / "early.history.csv"
    assert history.read_text(encoding="utf-8").startswith("epoch,train_loss,train_acc")

    metrics = tmp_path / "early.json"
    eval_args = ["eval", str(corpus), "--checkpoint", str(checkpoint), "--out", str(metrics)]
    assert main(eval_args) == EXIT_OK
    payload = json.loads(metrics.read_text(encoding="utf-8"))
    assert payload["mode"] == "early" and payload["split"] == "test" and payload["n"] == 6
    assert set(payload) >= {"accuracy", "confusion", "precision", "recall", "support"}

    assert main(eval_args + ["--mode", "late"]) == EXIT_DATA

    capsys.readouterr()
    assert main(["report", str(metrics)]) == EXIT_OK
    table = capsys.readouterr().out
    assert "Early Fusion" in table and "93.58" in table
    assert "Xception Model" in table and "87.15" in table


def test_diverging_training_exits_numeric(tmp_path: Path, corpus: Path) -> None:
    """Test that a non-finite loss exits with the numerical code."""
    args = ["train", str(corpus), "--mode", "single", "--out", str(tmp_path / "m.sgf")]
    args += ["--epochs", "2", "--batch-size", "2", "--lr", "1e307", "--no-cache"]
    with np.errstate(all="ignore"):
        assert main(args) == EXIT_NUMERIC


def test_report_rejects_unreadable_metrics(tmp_path: Path) -> None:
    """Test that report refuses malformed metrics files."""
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    assert main(["report", str(bad)]) == EXIT_DATA


def test_render_report_marks_missing_modes() -> None:
    """Test that the report fills absent modes with a dash."""
    result = {
        "mode": "single",
        "accuracy": 0.5,
        "classes": ["LR", "RL", "P", "B", "UD", "DU"],
        "precision": dict.fromkeys(["LR", "RL", "P", "B", "UD", "DU"], 0.5),
        "recall": dict.fromkeys(["LR", "RL", "P", "B", "UD", "DU"], 0.5),
        "support": dict.fromkeys(["LR", "RL", "P", "B", "UD", "DU"], 2),
        "confusion": [[2 if i == j else 0 for j in range(6)] for i in range(6)],
        "split": "test",
        "n": 12,
    }
    table = render_report([result], GestureCatalog())
    rows = {line.split("  ")[0]: line for line in table.splitlines() if line.strip()}
    assert "50.00" in rows["Original CNN"]
    assert rows["Late Fusion"].split()[2] == "-"
    assert "Original CNN (test, n=12)" in table


def test_render_report_prints_each_confusion_matrix() -> None:
    """Test that the report shows the true-by-predicted counts for every mode."""
    codes = ["LR", "RL", "P", "B", "UD", "DU"]
    confusion = [[5, 0, 0, 0, 0, 0] for _ in range(6)]
    confusion[4] = [0, 0, 0, 0, 3, 2]
    result = {
        "mode": "single",
        "accuracy": 0.2,
        "classes": codes,
        "precision": dict.fromkeys(codes, 0.2),
        "recall": dict.fromkeys(codes, 0.2),
        "support": dict.fromkeys(codes, 5),
        "confusion": confusion,
    }
    lines = render_report([result], GestureCatalog()).splitlines()
    header = next(i for i, line in enumerate(lines) if line.strip().startswith("true/pred"))
    assert lines[header].split()[1:] == codes
    rows = [line.split() for line in lines[header + 1 : header + 7]]
    assert [row[0] for row in rows] == codes
    assert rows[0][1:] == ["5", "0", "0", "0", "0", "0"]
    assert rows[4][1:] == ["0", "0", "0", "0", "3", "2"]
