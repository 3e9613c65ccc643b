"""Adapter for simulator output: trusts the written manifest, checks the clips exist."""

from __future__ import annotations

from pathlib import Path
from typing import Any

from sonicgesture.core.dataset import MANIFEST_FILENAME, read_manifest
from sonicgesture.core.errors import DataError
from sonicgesture.core.models import IngestReport, Manifest
from sonicgesture.core.wav import wav_read


class SyntheticCorpusAdapter:
    """Reads ``manifest.csv`` at the corpus root, keeping subjects and per-clip seeds."""

    def source_id(self) -> str:
        return "synthetic"

    def can_ingest(self, root: Path, metadata: dict[str, Any]) -> bool:
        if metadata.get("source") == self.source_id():
            return True
        return (root / MANIFEST_FILENAME).is_file()

    def ingest(self, root: Path, metadata: dict[str, Any]) -> IngestReport:
        manifest = read_manifest(root / MANIFEST_FILENAME)
        verify = bool(metadata.get("verify", True))
        errors: list[DataError] = []
        kept = []
        for row in manifest:
            clip = root / row.path
            try:
                if verify:
                    wav_read(clip)
                elif not clip.is_file():
                    raise DataError("listed clip is missing", path=clip)
            except DataError as exc:
                errors.append(exc)
                continue
            kept.append(row)
        return IngestReport(manifest=Manifest(tuple(kept)), errors=errors)
