"""Confusion matrix and the per-class scores derived from it."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from sonicgesture.core.errors import ShapeError
from sonicgesture.core.models import CLASS_ORDER, NUM_CLASSES


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """
    Counts indexed [true][predicted] in class order LR, RL, P, B, UD, DU.

    Precision of a class never predicted and recall of a class never present
    are reported as 0.0.
    """

    counts: np.ndarray

    def __post_init__(self) -> None:
        counts = np.array(self.counts, dtype=np.int64, copy=True)
        if counts.shape != (NUM_CLASSES, NUM_CLASSES):
            raise ShapeError(
                f"confusion matrix must be {NUM_CLASSES}x{NUM_CLASSES}, got {counts.shape}"
            )
        if np.any(counts < 0):
            raise ValueError("confusion counts must be non-negative")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_predictions(
        cls, true_labels: np.ndarray | list[int], predicted: np.ndarray | list[int]
    ) -> "ConfusionMatrix":
        truth = np.asarray(true_labels, dtype=np.int64)
        guess = np.asarray(predicted, dtype=np.int64)
        if truth.shape != guess.shape:
            raise ShapeError(f"label shapes differ: true={truth.shape} predicted={guess.shape}")
        counts = np.zeros((NUM_CLASSES, NUM_CLASSES), dtype=np.int64)
        np.add.at(counts, (truth, guess), 1)
        return cls(counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def accuracy(self) -> float:
        return float(np.trace(self.counts)) / self.total if self.total else 0.0

    def row_sums(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    def support(self) -> dict[str, int]:
        return {g.code: int(n) for g, n in zip(CLASS_ORDER, self.row_sums())}

    def _ratio(self, denominators: np.ndarray) -> np.ndarray:
        diagonal = np.diag(self.counts).astype(np.float64)
        return np.divide(
            diagonal, denominators, out=np.zeros(NUM_CLASSES), where=denominators > 0
        )

    def precision(self) -> dict[str, float]:
        scores = self._ratio(self.counts.sum(axis=0))
        return {g.code: float(s) for g, s in zip(CLASS_ORDER, scores)}

    def recall(self) -> dict[str, float]:
        scores = self._ratio(self.row_sums())
        return {g.code: float(s) for g, s in zip(CLASS_ORDER, scores)}

    def to_dict(self) -> dict[str, Any]:
        return {
            "accuracy": self.accuracy(),
            "classes": [g.code for g in CLASS_ORDER],
            "confusion": self.counts.tolist(),
            "precision": self.precision(),
            "recall": self.recall(),
            "support": self.support(),
        }
