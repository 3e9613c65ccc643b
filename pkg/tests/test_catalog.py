"""Tests for the gesture catalogue and the corpus adapter registry."""

from pathlib import Path
from typing import Any

import pytest

from sonicgesture.adapters.directory import DirectoryCorpusAdapter
from sonicgesture.adapters.synthetic import SyntheticCorpusAdapter
from sonicgesture.core.catalog import GestureCatalog
from sonicgesture.core.errors import UnknownGestureError
from sonicgesture.core.models import CLASS_ORDER, GestureClass, IngestReport, Manifest, Split
from sonicgesture.core.registry import CorpusRegistry, default_registry


@pytest.fixture(scope="module")
def catalog() -> GestureCatalog:
    return GestureCatalog()


def test_class_order_and_codes() -> None:
    """Test the fixed class order and two-letter codes."""
    assert [g.code for g in CLASS_ORDER] == ["LR", "RL", "P", "B", "UD", "DU"]
    assert GestureClass.from_code("du") is GestureClass.SWIPE_UP
    assert GestureClass.from_index(4) is GestureClass.SWIPE_DOWN
    with pytest.raises(UnknownGestureError):
        GestureClass.from_code("XY")


@pytest.mark.parametrize(
    "folder, gesture",
    [
        ("LR", GestureClass.SWIPE_RIGHT),
        ("rl", GestureClass.SWIPE_LEFT),
        ("Push Inwards", GestureClass.PUSH),
        ("block-microphone", GestureClass.BLOCK),
        ("swipe_down", GestureClass.SWIPE_DOWN),
        ("Down to Up", GestureClass.SWIPE_UP),
    ],
)
def test_exact_names_resolve(catalog: GestureCatalog, folder: str, gesture: GestureClass) -> None:
    """Test that codes, display names and aliases resolve to their gesture."""
    assert catalog.resolve_gesture(folder) is gesture


def test_fuzzy_names_resolve(catalog: GestureCatalog) -> None:
    """Test that near-miss folder names resolve through fuzzy matching."""
    assert catalog.resolve_gesture("Swipe Rigth") is GestureClass.SWIPE_RIGHT
    assert catalog.resolve_gesture("blockmicrophne") is GestureClass.BLOCK


def test_unknown_names_raise(catalog: GestureCatalog) -> None:
    """Test that unrelated names raise UnknownGestureError."""
    with pytest.raises(UnknownGestureError):
        catalog.resolve_gesture("zz")
    with pytest.raises(UnknownGestureError):
        catalog.resolve_gesture("clap twice")
    with pytest.raises(UnknownGestureError):
        catalog.resolve_split("holdout")


def test_split_aliases(catalog: GestureCatalog) -> None:
    """Test that split folder aliases resolve case-insensitively."""
    assert catalog.resolve_split("Training") is Split.TRAIN
    assert catalog.resolve_split("validation") is Split.VAL
    assert catalog.resolve_split("test") is Split.TEST


def test_display_names_and_references(catalog: GestureCatalog) -> None:
    """Test display names and the published reference accuracies."""
    assert catalog.display_name(GestureClass.BLOCK) == "Block Microphone"
    assert catalog.references["early"].accuracy == pytest.approx(93.58)
    assert catalog.references["xception"].name == "Xception Model"


def test_custom_templates_directory(tmp_path: Path) -> None:
    """Test that a catalogue can load from another templates directory."""
    (tmp_path / "gestures.yaml").write_text(
        "gestures:\n  - gesture: push\n    display_name: Shove\n    aliases: [shove]\n",
        encoding="utf-8",
    )
    custom = GestureCatalog(templates_path=tmp_path)
    assert custom.resolve_gesture("shove") is GestureClass.PUSH
    assert custom.display_name(GestureClass.PUSH) == "Shove"
    assert custom.display_name(GestureClass.BLOCK) == "block"
    assert not custom.references


class _StubAdapter:
    def source_id(self) -> str:
        return "stub"

    def can_ingest(self, root: Path, metadata: dict[str, Any]) -> bool:
        return metadata.get("source") == "stub"

    def ingest(self, root: Path, metadata: dict[str, Any]) -> IngestReport:
        return IngestReport(manifest=Manifest())


def test_registry_registers_once_and_keeps_order() -> None:
    """Test that the registry refuses duplicates and tries adapters in order."""
    registry = CorpusRegistry()
    registry.register(_StubAdapter())
    with pytest.raises(ValueError):
        registry.register(_StubAdapter())
    assert registry.get("stub") is not None
    assert registry.find_compatible(Path("."), {"source": "stub"}) is not None
    assert registry.find_compatible(Path("."), {}) is None
    assert list(registry.list_all()) == ["stub"]


def test_default_registry_orders_synthetic_first() -> None:
    """Test that the manifest adapter is tried before the folder adapter."""
    adapters = default_registry().list_all()
    assert list(adapters) == ["synthetic", "directory"]
    assert isinstance(adapters["synthetic"], SyntheticCorpusAdapter)
    assert isinstance(adapters["directory"], DirectoryCorpusAdapter)
