"""Protocol definitions for corpus adapters, augmentation stages, and network layers."""

from __future__ import annotations

from pathlib import Path
from typing import Any, Protocol, runtime_checkable

import numpy as np

from sonicgesture.core.models import IngestReport, SpectrogramImage, Waveform


@runtime_checkable
class CorpusAdapter(Protocol):
    """
    Adapter protocol: turns an on-disk corpus into manifest rows.

    Each adapter is responsible for:
    - Recognising whether a directory follows its layout
    - Resolving split and gesture labels from that layout
    - Reporting unreadable clips per row instead of failing the whole corpus
    """

    def source_id(self) -> str:
        """
        Return a unique identifier for this adapter's corpus layout.

        Examples: 'directory', 'synthetic'
        """
        ...

    def can_ingest(self, root: Path, metadata: dict[str, Any]) -> bool:
        """
        Determine if this adapter understands the corpus under ``root``.

        Args:
            root: Corpus root directory
            metadata: Context (e.g., {'source': 'synthetic'})

        Returns:
            True if the layout is recognised, False otherwise.
        """
        ...

    def ingest(self, root: Path, metadata: dict[str, Any]) -> IngestReport:
        """
        Walk the corpus and emit manifest rows.

        Args:
            root: Corpus root directory
            metadata: Context (e.g., whether to verify audio headers)

        Returns:
            IngestReport with rows, per-row errors, and warnings

        Raises:
            UnknownGestureError: If a directory name matches no gesture or split
        """
        ...


@runtime_checkable
class WaveformAugmenter(Protocol):
    """Raw-audio augmentation applied per channel before the STFT."""

    def augment(self, w: Waveform, seed: int) -> Waveform:
        ...


@runtime_checkable
class ImageAugmenter(Protocol):
    """Spectrogram-image augmentation applied after ``to_image``."""

    def augment(self, img: SpectrogramImage, seed: int) -> SpectrogramImage:
        ...


@runtime_checkable
class Layer(Protocol):
    """
    One differentiable stage of a network.

    ``forward`` caches what ``backward`` needs; ``backward`` takes dL/dy and
    returns dL/dx, storing parameter gradients alongside the parameters.
    ``apply`` gives the same output as ``forward`` and leaves the layer untouched.
    """

    kind: str

    def apply(self, x: np.ndarray) -> np.ndarray:
        ...

    def forward(self, x: np.ndarray) -> np.ndarray:
        ...

    def backward(self, dy: np.ndarray) -> np.ndarray:
        ...

    def params(self) -> dict[str, np.ndarray]:
        ...

    def grads(self) -> dict[str, np.ndarray]:
        ...

    def spec(self) -> dict[str, Any]:
        ...

