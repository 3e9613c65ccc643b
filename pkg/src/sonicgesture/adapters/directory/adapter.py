"""Folder-per-class corpus adapter (the public recordings, or any corpus organised the same way)."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any

from sonicgesture.core.catalog import GestureCatalog
from sonicgesture.core.errors import DataError
from sonicgesture.core.models import IngestReport, Manifest, ManifestRow
from sonicgesture.core.wav import wav_read

logger = logging.getLogger(__name__)

AUDIO_SUFFIXES = {".wav"}


def _visible_dirs(path: Path) -> list[Path]:
    return sorted(p for p in path.iterdir() if p.is_dir() and not p.name.startswith((".", "_")))


class DirectoryCorpusAdapter:
    """
    Adapter for ``<split>/<gesture>/<clip>.wav`` trees.

    Split folders accept aliases such as ``training`` or ``testing``; gesture
    folders accept short codes (``LR``, ``UD``...) or names resolved through the
    gesture catalogue (``Swipe Right``, ``push_inwards``...). Folders starting
    with ``.`` or ``_`` are skipped so caches can live inside the corpus.
    """

    def __init__(self, catalog: GestureCatalog | None = None) -> None:
        self.catalog = catalog or GestureCatalog()

    def source_id(self) -> str:
        return "directory"

    def can_ingest(self, root: Path, metadata: dict[str, Any]) -> bool:
        if metadata.get("source") == self.source_id():
            return True
        if not root.is_dir():
            return False
        for child in _visible_dirs(root):
            try:
                self.catalog.resolve_split(child.name)
            except DataError:
                continue
            return True
        return False

    def ingest(self, root: Path, metadata: dict[str, Any]) -> IngestReport:
        verify = bool(metadata.get("verify", True))
        rows: list[ManifestRow] = []
        errors: list[DataError] = []
        warnings: list[str] = []

        for stray in sorted(p for p in root.iterdir() if p.is_file()):
            logger.debug("ignoring file at corpus root: %s", stray.name)

        for split_dir in _visible_dirs(root):
            split = self.catalog.resolve_split(split_dir.name)
            for gesture_dir in _visible_dirs(split_dir):
                gesture = self.catalog.resolve_gesture(gesture_dir.name)
                for clip in sorted(p for p in gesture_dir.iterdir() if p.is_file()):
                    if clip.suffix.lower() not in AUDIO_SUFFIXES:
                        message = f"ignored non-audio file {clip.relative_to(root).as_posix()}"
                        logger.info(message)
                        warnings.append(message)
                        continue
                    if verify:
                        try:
                            wav_read(clip)
                        except DataError as exc:
                            errors.append(exc)
                            continue
                    rows.append(
                        ManifestRow(
                            path=clip.relative_to(root).as_posix(),
                            gesture=gesture,
                            split=split,
                        )
                    )

        return IngestReport(manifest=Manifest(tuple(rows)), errors=errors, warnings=warnings)
