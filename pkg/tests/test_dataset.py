"""Tests for manifests, ingestion, splits, fusion-input assembly and the image cache."""

from pathlib import Path

import numpy as np
import pytest

from sonicgesture.core.config import AugmentationPolicy, PipelineConfig, SimConfig
from sonicgesture.core.dataset import (
    MANIFEST_FILENAME,
    ImageCache,
    assemble,
    assemble_split,
    augment_batch,
    class_histogram,
    clip_images,
    copy_source,
    ingest,
    manifest_to_csv,
    read_manifest,
    stratified_split,
    write_augmented_copies,
    write_manifest,
)
from sonicgesture.core.doppler import synth_dataset, synth_gesture
from sonicgesture.core.errors import (
    ClipTooShortError,
    DataError,
    ManifestError,
    UnknownGestureError,
)
from sonicgesture.core.models import (
    CLASS_ORDER,
    FusionMode,
    GestureClass,
    Manifest,
    ManifestRow,
    Split,
    StereoWaveform,
    Waveform,
)
from sonicgesture.core.wav import wav_write


def _tiny_clip(path: Path) -> None:
    wav_write(Waveform(np.zeros(64), 44100), path)


def _folder_corpus(root: Path, per_class: int = 10) -> None:
    for gesture in CLASS_ORDER:
        for k in range(per_class):
            _tiny_clip(root / "train" / gesture.code / f"{gesture.code}_{k:02d}.wav")


@pytest.fixture(scope="module")
def clip_path(tmp_path_factory: pytest.TempPathFactory) -> Path:
    path = tmp_path_factory.mktemp("clips") / "DU_s1_0000.wav"
    wav_write(synth_gesture(GestureClass.SWIPE_UP, SimConfig(), seed=2), path)
    return path


def test_manifest_csv_round_trip(tmp_path: Path) -> None:
    """Test that a manifest survives a CSV write and read unchanged."""
    manifest = Manifest(
        (
            ManifestRow("train/LR/b.wav", GestureClass.SWIPE_RIGHT, Split.TRAIN, "s1", 12),
            ManifestRow("test/UD/a.wav", GestureClass.SWIPE_DOWN, Split.TEST),
        )
    )
    text = manifest_to_csv(manifest)
    assert text.splitlines()[0] == "path,gesture,subject,split,seed"
    assert text.splitlines()[1] == "test/UD/a.wav,UD,,test,"
    assert read_manifest(write_manifest(manifest, tmp_path / "m.csv")) == manifest


def test_manifest_rejects_duplicates_and_bad_rows(tmp_path: Path) -> None:
    """Test that duplicate paths, bad headers and unknown codes are rejected."""
    row = ManifestRow("a.wav", GestureClass.PUSH, Split.TRAIN)
    with pytest.raises(ManifestError):
        Manifest((row, row))

    bad_header = tmp_path / "header.csv"
    bad_header.write_text("file,label\n", encoding="utf-8")
    with pytest.raises(ManifestError):
        read_manifest(bad_header)

    bad_code = tmp_path / "code.csv"
    bad_code.write_text("path,gesture,subject,split,seed\na.wav,XX,,train,\n", encoding="utf-8")
    with pytest.raises(ManifestError, match="line 2"):
        read_manifest(bad_code)


def test_ingest_folder_corpus(tmp_path: Path) -> None:
    """Test that a folder-per-class corpus ingests with ignored files reported."""
    _folder_corpus(tmp_path)
    (tmp_path / "train" / "LR" / "notes.txt").write_text("ignore me", encoding="utf-8")
    (tmp_path / "README.txt").write_text("corpus", encoding="utf-8")

    report = ingest(tmp_path)
    assert len(report.manifest) == 60
    assert set(class_histogram(report.manifest, Split.TRAIN).values()) == {10}
    assert not report.errors
    assert any("notes.txt" in w for w in report.warnings)


def test_ingest_resolves_folder_aliases(tmp_path: Path) -> None:
    """Test that aliased split and gesture folder names are resolved."""
    _tiny_clip(tmp_path / "training" / "Swipe Right" / "a.wav")
    _tiny_clip(tmp_path / "testing" / "push_inwards" / "b.wav")
    manifest = ingest(tmp_path).manifest
    rows = {row.path: row for row in manifest}
    assert rows["training/Swipe Right/a.wav"].gesture is GestureClass.SWIPE_RIGHT
    assert rows["training/Swipe Right/a.wav"].split is Split.TRAIN
    assert rows["testing/push_inwards/b.wav"].split is Split.TEST


def test_ingest_reports_unreadable_clips_and_missing_classes(tmp_path: Path) -> None:
    """Test that bad clips become row errors and empty classes warnings."""
    _tiny_clip(tmp_path / "train" / "P" / "ok.wav")
    (tmp_path / "train" / "P" / "bad.wav").write_bytes(b"garbage")
    report = ingest(tmp_path)
    assert len(report.manifest) == 1
    assert len(report.errors) == 1 and "bad.wav" in str(report.errors[0])
    assert any("LR" in w for w in report.warnings)


def test_ingest_rejects_unknown_gesture_folder(tmp_path: Path) -> None:
    """Test that a folder matching no gesture stops ingestion."""
    _tiny_clip(tmp_path / "train" / "wave hello" / "a.wav")
    with pytest.raises(UnknownGestureError):
        ingest(tmp_path)


def test_ingest_rejects_missing_directory(tmp_path: Path) -> None:
    """Test that ingesting a missing directory raises DataError."""
    with pytest.raises(DataError):
        ingest(tmp_path / "nowhere")


def test_ingest_prefers_written_manifest(tmp_path: Path) -> None:
    """Test that a manifest at the corpus root wins over folder probing."""
    _tiny_clip(tmp_path / "train" / "B" / "B_s2_0000.wav")
    row = ManifestRow("train/B/B_s2_0000.wav", GestureClass.BLOCK, Split.TRAIN, "s2", 99)
    write_manifest(Manifest((row,)), tmp_path / MANIFEST_FILENAME)
    manifest = ingest(tmp_path).manifest
    assert manifest.rows == (row,)


def test_stratified_split_is_per_class_and_seeded(tmp_path: Path) -> None:
    """Test that validation rows are drawn per class and depend only on the seed."""
    _folder_corpus(tmp_path)
    manifest = ingest(tmp_path).manifest
    split = stratified_split(manifest, 0.2, seed=4)
    val = split.split(Split.VAL)
    assert len(val) == 12
    assert set(class_histogram(val).values()) == {2}
    assert stratified_split(manifest, 0.2, seed=4) == split
    assert {r.path for r in stratified_split(manifest, 0.2, seed=5).split(Split.VAL)} != {
        r.path for r in val
    }
    assert stratified_split(manifest, 0.0, seed=4) == manifest


def test_assemble_layouts_share_channel_images(clip_path: Path) -> None:
    """Test that all three layouts are cut from the same channel images."""
    single = assemble(clip_path, FusionMode.SINGLE)
    early = assemble(clip_path, FusionMode.EARLY)
    late = assemble(clip_path, FusionMode.LATE)
    assert [t.shape for t in single.tensors] == [(1, 100, 100)]
    assert [t.shape for t in early.tensors] == [(3, 100, 100)]
    assert [t.shape for t in late.tensors] == [(1, 100, 100), (1, 100, 100)]
    np.testing.assert_array_equal(early.tensors[0][0], late.tensors[0][0])
    np.testing.assert_array_equal(early.tensors[0][1], late.tensors[1][0])
    np.testing.assert_array_equal(early.tensors[0][2], single.tensors[0][0])


def test_cache_is_transparent(tmp_path: Path, clip_path: Path) -> None:
    """Test that cached images equal freshly computed ones."""
    cache = ImageCache(tmp_path / "cache")
    fresh = clip_images(clip_path)
    first = clip_images(clip_path, cache=cache)
    second = clip_images(clip_path, cache=cache)
    assert (cache.hits, cache.misses) == (1, 1)
    for a, b, c in zip(fresh.as_tuple(), first.as_tuple(), second.as_tuple()):
        np.testing.assert_array_equal(a.pixels, b.pixels)
        np.testing.assert_array_equal(a.pixels, c.pixels)


def test_cache_key_tracks_dsp_settings(clip_path: Path) -> None:
    """Test that changing a DSP setting changes the cache key."""
    data = clip_path.read_bytes()
    default = ImageCache.key(data, PipelineConfig())
    narrower = PipelineConfig.model_validate({"crop": {"f_lo": 19800.0}})
    assert ImageCache.key(data, narrower) != default
    assert ImageCache.key(data, PipelineConfig()) == default


def test_short_clip_is_rejected(tmp_path: Path) -> None:
    """Test that a clip ending before the crop window is rejected."""
    path = tmp_path / "short.wav"
    wav_write(Waveform(np.zeros(2 * 44100), 44100), path)
    with pytest.raises(ClipTooShortError):
        assemble(path, FusionMode.SINGLE)


def test_assemble_split_stacks_in_manifest_order(clip_path: Path) -> None:
    """Test that split assembly stacks arrays and labels in manifest order."""
    root = clip_path.parent
    manifest = Manifest((ManifestRow(clip_path.name, GestureClass.SWIPE_UP, Split.TRAIN),))
    arrays, labels = assemble_split(manifest, root, FusionMode.LATE)
    assert [a.shape for a in arrays] == [(1, 1, 100, 100), (1, 1, 100, 100)]
    assert labels.tolist() == [GestureClass.SWIPE_UP.index]
    with pytest.raises(DataError):
        assemble_split(Manifest(), root, FusionMode.LATE)


def test_augment_batch_appends_copies() -> None:
    """Test that batch augmentation appends seeded, clamped copies after the originals."""
    rng = np.random.default_rng(0)
    inputs = (rng.uniform(size=(4, 3, 100, 100)),)
    labels = np.array([0, 1, 2, 3])
    policy = AugmentationPolicy(copies=2)
    augmented, new_labels = augment_batch(inputs, labels, policy, seed=1)
    assert augmented[0].shape == (12, 3, 100, 100)
    assert new_labels.tolist() == [0, 1, 2, 3] * 3
    np.testing.assert_array_equal(augmented[0][:4], inputs[0])
    assert augmented[0].min() >= 0.0 and augmented[0].max() <= 1.0
    again, _ = augment_batch(inputs, labels, policy, seed=1)
    np.testing.assert_array_equal(again[0], augmented[0])
    untouched, _ = augment_batch(inputs, labels, AugmentationPolicy(copies=0), seed=1)
    assert untouched is inputs


def test_write_augmented_copies_extends_training_rows(tmp_path: Path) -> None:
    """Test that on-disk copies are written for training clips only."""
    _tiny_clip(tmp_path / "train" / "P" / "P_s1_0000.wav")
    _tiny_clip(tmp_path / "test" / "P" / "P_s5_0000.wav")
    manifest = ingest(tmp_path).manifest
    extended = write_augmented_copies(manifest, tmp_path, alpha=0.01, copies=2, seed=3)
    added = {row.path for row in extended} - {row.path for row in manifest}
    assert added == {"train/P/P_s1_0000_aug1.wav", "train/P/P_s1_0000_aug2.wav"}
    assert all((tmp_path / path).is_file() for path in added)
    assert len(extended.split(Split.TEST)) == 1


def test_single_layout_of_identical_channels_is_that_channel(tmp_path: Path) -> None:
    """Test that the mixdown of a top=bottom clip is the channel image itself."""
    channel = synth_gesture(GestureClass.PUSH, SimConfig(), seed=8).top
    path = tmp_path / "twin.wav"
    wav_write(StereoWaveform(top=channel, bottom=channel), path)
    single = assemble(path, FusionMode.SINGLE)
    early = assemble(path, FusionMode.EARLY)
    np.testing.assert_array_equal(single.tensors[0][0], early.tensors[0][0])
    np.testing.assert_array_equal(single.tensors[0][0], early.tensors[0][1])


def test_early_layout_swaps_channels_for_vertical_swipes(tmp_path: Path) -> None:
    """Test that swipe up and swipe down from one seed swap top and bottom but share the mix."""
    up_path, down_path = tmp_path / "DU.wav", tmp_path / "UD.wav"
    wav_write(synth_gesture(GestureClass.SWIPE_UP, SimConfig(), seed=6), up_path)
    wav_write(synth_gesture(GestureClass.SWIPE_DOWN, SimConfig(), seed=6), down_path)
    (up,) = assemble(up_path, FusionMode.EARLY).tensors
    (down,) = assemble(down_path, FusionMode.EARLY).tensors
    np.testing.assert_array_equal(up[0], down[1])
    np.testing.assert_array_equal(up[1], down[0])
    np.testing.assert_array_equal(up[2], down[2])
    assert not np.array_equal(up[0], down[0])


def test_directory_ingest_recovers_a_simulated_corpus(tmp_path: Path) -> None:
    """Test that ingesting simulator output by folder gives back every path and label."""
    written = synth_dataset(2, SimConfig(), seed=4, out_dir=tmp_path, test_per_class=1)
    report = ingest(tmp_path, source="directory")
    assert not report.errors

    def labels(m: Manifest) -> set[tuple[str, GestureClass, Split]]:
        return {(row.path, row.gesture, row.split) for row in m}

    assert len(report.manifest) == len(written) == 18
    assert labels(report.manifest) == labels(written)
    assert ingest(tmp_path).manifest == written


def test_copy_source_names_the_original() -> None:
    """Test that augmented copy paths map back to their source clip."""
    assert copy_source("train/LR/LR_s1_0002_aug1.wav") == "train/LR/LR_s1_0002.wav"
    assert copy_source("train/LR/LR_s1_0002_aug12.wav") == "train/LR/LR_s1_0002.wav"
    assert copy_source("train/LR/LR_s1_0002.wav") is None
    assert copy_source("train/LR/aug1.wav") is None


def test_split_keeps_augmented_copies_with_their_source(tmp_path: Path) -> None:
    """Test that validation holds only originals and no training copy shadows one."""
    _folder_corpus(tmp_path, per_class=5)
    manifest = write_augmented_copies(
        ingest(tmp_path).manifest, tmp_path, alpha=0.01, copies=1, seed=3
    )
    split = stratified_split(manifest, 0.2, seed=7)
    val = {row.path for row in split.split(Split.VAL)}
    train = {row.path for row in split.split(Split.TRAIN)}
    assert len(val) == 6
    assert all(copy_source(path) is None for path in val)
    assert not {copy_source(path) for path in train} & val
    assert len(train) == 24 + 24
    assert stratified_split(manifest, 0.2, seed=7) == split


def test_augmenting_twice_adds_nothing(tmp_path: Path) -> None:
    """Test that a repeated augment run writes no files and leaves the manifest as it was."""
    _folder_corpus(tmp_path, per_class=2)
    once = write_augmented_copies(ingest(tmp_path).manifest, tmp_path, 0.01, copies=1, seed=3)
    wav_count = len(list(tmp_path.rglob("*.wav")))
    twice = write_augmented_copies(once, tmp_path, 0.01, copies=1, seed=3)
    assert twice == once
    assert len(list(tmp_path.rglob("*.wav"))) == wav_count == 24
    more = write_augmented_copies(once, tmp_path, 0.01, copies=2, seed=3)
    added = {row.path for row in more} - {row.path for row in once}
    assert len(added) == 12 and all(path.endswith("_aug2.wav") for path in added)
