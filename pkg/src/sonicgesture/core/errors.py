"""Exception hierarchy shared by every stage."""

from __future__ import annotations

from pathlib import Path


class SonicGestureError(Exception):
    """Base class for all library errors."""


class DataError(SonicGestureError, ValueError):
    """Invalid input data or file. Carries the offending path when one is known."""

    def __init__(self, message: str, path: str | Path | None = None) -> None:
        self.path = str(path) if path is not None else None
        super().__init__(f"{self.path}: {message}" if self.path else message)


class WavFormatError(DataError):
    """A RIFF/WAVE payload could not be decoded."""


class MalformedHeaderError(WavFormatError):
    """RIFF/WAVE magic, chunk layout, or fmt chunk is broken."""


class UnsupportedCodecError(WavFormatError):
    """fmt chunk declares a format tag other than integer PCM."""


class UnsupportedBitDepthError(WavFormatError):
    """PCM payload is not 16-bit."""


class UnsupportedChannelCountError(WavFormatError):
    """Only mono and stereo files are accepted."""


class TruncatedDataError(WavFormatError):
    """data chunk declares more bytes than the file holds."""


class PcmError(DataError):
    """Raw PCM16 payload is not a whole number of samples."""


class CropError(DataError):
    """A band/time crop selected nothing along one axis."""

    def __init__(self, axis: str, message: str) -> None:
        self.axis = axis
        super().__init__(f"empty {axis} crop: {message}")


class ClipTooShortError(DataError):
    """Clip does not cover the crop window."""


class ManifestError(DataError):
    """Manifest file or rows violate the manifest schema."""


class UnknownGestureError(DataError):
    """A gesture code or folder name does not resolve to one of the six classes."""


class CheckpointError(DataError):
    """Checkpoint container is corrupt or does not match the requested model."""


class ShapeError(SonicGestureError, ValueError):
    """Tensor shapes do not compose."""


class NumericalError(SonicGestureError, ArithmeticError):
    """Loss or gradients went non-finite during training."""

    def __init__(self, message: str, epoch: int | None = None, batch: int | None = None) -> None:
        self.epoch = epoch
        self.batch = batch
        where = []
        if epoch is not None:
            where.append(f"epoch={epoch}")
        if batch is not None:
            where.append(f"batch={batch}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(f"{message}{suffix}")
