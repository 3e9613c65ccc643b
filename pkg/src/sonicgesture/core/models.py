"""Core immutable data models shared by every pipeline stage."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterator, Optional

import numpy as np

from sonicgesture.core.errors import DataError, ManifestError, ShapeError, UnknownGestureError

IMAGE_SIZE = 100
"""Side length of the square CNN input image."""

MAX_HAND_SPEED = 2.0
"""Largest radial hand speed (m/s) a motion profile may carry."""


def _frozen_array(values: np.ndarray | list | tuple, dtype: type = np.float64) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


class GestureClass(str, Enum):
    """The six gestures. Declaration order is the fixed class-index order."""

    SWIPE_RIGHT = "swipe_right"
    SWIPE_LEFT = "swipe_left"
    PUSH = "push"
    BLOCK = "block"
    SWIPE_DOWN = "swipe_down"
    SWIPE_UP = "swipe_up"

    @property
    def code(self) -> str:
        """Two-letter (or one-letter) short code used in folders, manifests and reports."""
        return GESTURE_CODES[self]

    @property
    def index(self) -> int:
        return CLASS_ORDER.index(self)

    @classmethod
    def from_code(cls, code: str) -> "GestureClass":
        for gesture, gesture_code in GESTURE_CODES.items():
            if gesture_code == code.strip().upper():
                return gesture
        raise UnknownGestureError(f"unknown gesture code '{code}'")

    @classmethod
    def from_index(cls, index: int) -> "GestureClass":
        return CLASS_ORDER[index]


GESTURE_CODES: dict[GestureClass, str] = {
    GestureClass.SWIPE_RIGHT: "LR",
    GestureClass.SWIPE_LEFT: "RL",
    GestureClass.PUSH: "P",
    GestureClass.BLOCK: "B",
    GestureClass.SWIPE_DOWN: "UD",
    GestureClass.SWIPE_UP: "DU",
}

CLASS_ORDER: tuple[GestureClass, ...] = tuple(GestureClass)
NUM_CLASSES = len(CLASS_ORDER)


class FusionMode(str, Enum):
    """How the two microphone channels reach the network."""

    SINGLE = "single"
    EARLY = "early"
    LATE = "late"


class Split(str, Enum):
    TRAIN = "train"
    VAL = "val"
    TEST = "test"


@dataclass(frozen=True, eq=False)
class Waveform:
    """
    Mono time-domain audio.

    Samples are stored as a read-only float64 array with nominal range [-1, 1].
    """

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self) -> None:
        samples = _frozen_array(self.samples)
        if samples.ndim != 1:
            raise ShapeError(f"waveform samples must be 1-D, got shape {samples.shape}")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("waveform samples must be finite")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return int(self.samples.shape[0])

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate

    @property
    def peak(self) -> float:
        return float(np.max(np.abs(self.samples))) if len(self) else 0.0


@dataclass(frozen=True, eq=False)
class StereoWaveform:
    """Two-channel recording. Channel 0 of a WAV file is the top microphone."""

    top: Waveform
    bottom: Waveform

    def __post_init__(self) -> None:
        if self.top.sample_rate != self.bottom.sample_rate:
            raise ValueError(
                f"channel sample rates differ: top={self.top.sample_rate} "
                f"bottom={self.bottom.sample_rate}"
            )
        if len(self.top) != len(self.bottom):
            raise ShapeError(
                f"channel lengths differ: top={len(self.top)} bottom={len(self.bottom)}"
            )

    @property
    def sample_rate(self) -> int:
        return self.top.sample_rate

    def __len__(self) -> int:
        return len(self.top)

    @property
    def duration_s(self) -> float:
        return self.top.duration_s

    def frames(self) -> np.ndarray:
        """Interleave-ready (n_frames, 2) view of the channels."""
        return np.stack([self.top.samples, self.bottom.samples], axis=1)


@dataclass(frozen=True, eq=False)
class ChannelMotion:
    """Hand motion as seen by one microphone over the clip's sample grid."""

    velocity: np.ndarray
    """Radial hand velocity in m/s, positive toward the device."""

    envelope: np.ndarray
    """Echo amplitude envelope a(t) in [0, 1]."""

    gain: np.ndarray
    """Direct-path gain g(t) in [0, 1]."""

    def __post_init__(self) -> None:
        velocity = _frozen_array(self.velocity)
        envelope = _frozen_array(self.envelope)
        gain = _frozen_array(self.gain)
        if not velocity.shape == envelope.shape == gain.shape or velocity.ndim != 1:
            raise ShapeError(
                f"motion tracks must share one 1-D shape: velocity={velocity.shape} "
                f"envelope={envelope.shape} gain={gain.shape}"
            )
        if np.any(np.abs(velocity) > MAX_HAND_SPEED + 1e-12):
            raise ValueError(f"hand speed exceeds {MAX_HAND_SPEED} m/s")
        for name, track in (("envelope", envelope), ("gain", gain)):
            if np.any(track < 0.0) or np.any(track > 1.0):
                raise ValueError(f"{name} must lie in [0, 1]")
        object.__setattr__(self, "velocity", velocity)
        object.__setattr__(self, "envelope", envelope)
        object.__setattr__(self, "gain", gain)


@dataclass(frozen=True, eq=False)
class MotionProfile:
    """Per-channel motion tracks for one synthetic gesture clip."""

    top: ChannelMotion
    bottom: ChannelMotion
    sample_rate: int

    def __post_init__(self) -> None:
        if self.top.velocity.shape != self.bottom.velocity.shape:
            raise ShapeError("top and bottom motion tracks differ in length")

    def swapped(self) -> "MotionProfile":
        return MotionProfile(top=self.bottom, bottom=self.top, sample_rate=self.sample_rate)

    def channels(self) -> tuple[ChannelMotion, ChannelMotion]:
        return (self.top, self.bottom)


@dataclass(frozen=True, eq=False)
class Spectrogram:
    """
    STFT magnitude grid indexed [freq_bin][frame].

    Offsets record where a cropped grid starts in the uncropped one, so
    absolute bin k sits at (freq_offset_bin + k) * bin_hz.
    """

    magnitudes: np.ndarray
    sample_rate: int
    n_fft: int
    hop: int
    freq_offset_bin: int = 0
    time_offset_frame: int = 0

    def __post_init__(self) -> None:
        magnitudes = _frozen_array(self.magnitudes)
        if magnitudes.ndim != 2:
            raise ShapeError(f"spectrogram must be 2-D, got shape {magnitudes.shape}")
        if not np.all(np.isfinite(magnitudes)) or np.any(magnitudes < 0.0):
            raise ValueError("spectrogram magnitudes must be finite and non-negative")
        object.__setattr__(self, "magnitudes", magnitudes)

    @property
    def bin_hz(self) -> float:
        return self.sample_rate / self.n_fft

    @property
    def frame_s(self) -> float:
        return self.hop / self.sample_rate

    @property
    def n_bins(self) -> int:
        return int(self.magnitudes.shape[0])

    @property
    def n_frames(self) -> int:
        return int(self.magnitudes.shape[1])

    def bin_indices(self) -> np.ndarray:
        return np.arange(self.n_bins) + self.freq_offset_bin

    def frame_indices(self) -> np.ndarray:
        return np.arange(self.n_frames) + self.time_offset_frame

    def bin_frequencies(self) -> np.ndarray:
        return self.bin_indices() * self.bin_hz

    def frame_times(self) -> np.ndarray:
        return self.frame_indices() * self.frame_s

    def scaled(self, factor: float) -> "Spectrogram":
        return replace(self, magnitudes=self.magnitudes * factor)


@dataclass(frozen=True, eq=False)
class SpectrogramImage:
    """100x100 grayscale CNN input, values in [0, 1], row 0 = lowest frequency."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        pixels = _frozen_array(self.pixels)
        if pixels.shape != (IMAGE_SIZE, IMAGE_SIZE):
            raise ShapeError(
                f"image must be {IMAGE_SIZE}x{IMAGE_SIZE}, got {pixels.shape[0]}x"
                f"{pixels.shape[1] if pixels.ndim > 1 else 1}"
            )
        if np.any(pixels < 0.0) or np.any(pixels > 1.0) or not np.all(np.isfinite(pixels)):
            raise ValueError("image pixels must lie in [0, 1]")
        object.__setattr__(self, "pixels", pixels)


@dataclass(frozen=True, eq=False)
class ModelInput:
    """
    Network input for one clip.

    Tensors are channels-first:
    - single: ((1, 100, 100),) built from the mixdown
    - early:  ((3, 100, 100),) channels [top, bottom, mixdown]
    - late:   ((1, 100, 100), (1, 100, 100)) for (top, bottom)
    """

    mode: FusionMode
    tensors: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        expected = EXPECTED_INPUT_SHAPES[self.mode]
        tensors = tuple(_frozen_array(t) for t in self.tensors)
        shapes = tuple(t.shape for t in tensors)
        if shapes != expected:
            raise ShapeError(f"{self.mode.value} input expects shapes {expected}, got {shapes}")
        for tensor in tensors:
            if np.any(tensor < 0.0) or np.any(tensor > 1.0):
                raise ValueError("model input values must lie in [0, 1]")
        object.__setattr__(self, "tensors", tensors)


EXPECTED_INPUT_SHAPES: dict[FusionMode, tuple[tuple[int, ...], ...]] = {
    FusionMode.SINGLE: ((1, IMAGE_SIZE, IMAGE_SIZE),),
    FusionMode.EARLY: ((3, IMAGE_SIZE, IMAGE_SIZE),),
    FusionMode.LATE: ((1, IMAGE_SIZE, IMAGE_SIZE), (1, IMAGE_SIZE, IMAGE_SIZE)),
}


@dataclass(frozen=True)
class ManifestRow:
    """One labelled clip."""

    path: str
    gesture: GestureClass
    split: Split
    subject: Optional[str] = None
    seed: Optional[int] = None


@dataclass(frozen=True)
class Manifest:
    """
    Immutable, path-sorted collection of labelled clips.

    Paths are unique; operations that relabel rows return a new manifest.
    """

    rows: tuple[ManifestRow, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        ordered = tuple(sorted(self.rows, key=lambda row: row.path))
        seen: set[str] = set()
        for row in ordered:
            if row.path in seen:
                raise ManifestError(f"duplicate manifest path '{row.path}'")
            seen.add(row.path)
        object.__setattr__(self, "rows", ordered)

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self) -> Iterator[ManifestRow]:
        return iter(self.rows)

    def split(self, split: Split) -> "Manifest":
        return Manifest(tuple(row for row in self.rows if row.split == split))

    def extended(self, rows: list[ManifestRow] | tuple[ManifestRow, ...]) -> "Manifest":
        return Manifest(self.rows + tuple(rows))


@dataclass
class IngestReport:
    """Output of a corpus adapter: the manifest plus what was skipped and why."""

    manifest: Manifest
    errors: list[DataError] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
