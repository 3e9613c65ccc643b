"""RIFF/WAVE PCM16 reader and writer.

Writing always emits the canonical 44-byte header (RIFF, fmt with 16-byte
body, data). Reading walks the chunk list so files carrying LIST or other
metadata chunks still decode. Channel 0 is the top microphone.
"""

from __future__ import annotations

import logging
import struct
from pathlib import Path

import numpy as np

from sonicgesture.core.audio import PCM16_DTYPE, PCM16_SCALE, promote_mono, quantize_pcm16
from sonicgesture.core.errors import (
    DataError,
    MalformedHeaderError,
    TruncatedDataError,
    UnsupportedBitDepthError,
    UnsupportedChannelCountError,
    UnsupportedCodecError,
    WavFormatError,
)
from sonicgesture.core.models import StereoWaveform, Waveform

logger = logging.getLogger(__name__)

WAVE_FORMAT_PCM = 1
DATASET_SAMPLE_RATE = 44100
HEADER_SIZE = 44

_FMT = struct.Struct("<HHIIHH")


def wav_to_bytes(w: StereoWaveform | Waveform) -> bytes:
    """Encode one or two channels as a PCM16 WAV byte string."""
    if isinstance(w, StereoWaveform):
        frames = quantize_pcm16(w.frames())
        channels = 2
    else:
        frames = quantize_pcm16(w.samples)[:, None]
        channels = 1
    sample_rate = w.sample_rate
    payload = np.ascontiguousarray(frames, dtype=PCM16_DTYPE).tobytes()
    block_align = channels * 2
    header = b"".join(
        [
            b"RIFF",
            struct.pack("<I", 36 + len(payload)),
            b"WAVE",
            b"fmt ",
            struct.pack("<I", _FMT.size),
            _FMT.pack(
                WAVE_FORMAT_PCM,
                channels,
                sample_rate,
                sample_rate * block_align,
                block_align,
                16,
            ),
            b"data",
            struct.pack("<I", len(payload)),
        ]
    )
    return header + payload


def wav_from_bytes(data: bytes, source: str | Path | None = None) -> StereoWaveform:
    """Decode a PCM16 WAV byte string; mono files are promoted to duplicated stereo."""
    if len(data) < 12 or data[0:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise MalformedHeaderError("missing RIFF/WAVE signature", path=source)

    fmt: tuple[int, int, int, int, int, int] | None = None
    payload: bytes | None = None
    offset = 12
    while offset + 8 <= len(data):
        chunk_id = data[offset : offset + 4]
        (chunk_size,) = struct.unpack_from("<I", data, offset + 4)
        body_start = offset + 8
        body_end = body_start + chunk_size
        if chunk_id == b"fmt ":
            if chunk_size < _FMT.size or body_end > len(data):
                raise MalformedHeaderError(f"fmt chunk too short ({chunk_size} bytes)", path=source)
            fmt = _FMT.unpack_from(data, body_start)
        elif chunk_id == b"data":
            if fmt is None:
                raise MalformedHeaderError("data chunk precedes fmt chunk", path=source)
            if body_end > len(data):
                raise TruncatedDataError(
                    f"data chunk declares {chunk_size} bytes but only "
                    f"{len(data) - body_start} remain",
                    path=source,
                )
            payload = data[body_start:body_end]
            break
        offset = body_end + (chunk_size & 1)

    if fmt is None:
        raise MalformedHeaderError("no fmt chunk", path=source)
    if payload is None:
        raise MalformedHeaderError("no data chunk", path=source)

    format_tag, channels, sample_rate, _, block_align, bits = fmt
    if format_tag != WAVE_FORMAT_PCM:
        raise UnsupportedCodecError(f"format tag {format_tag} is not integer PCM", path=source)
    if bits != 16:
        raise UnsupportedBitDepthError(f"{bits}-bit PCM is not supported", path=source)
    if channels not in (1, 2):
        raise UnsupportedChannelCountError(f"{channels} channels", path=source)
    if sample_rate <= 0 or block_align != channels * 2:
        raise MalformedHeaderError(
            f"inconsistent fmt fields (rate={sample_rate}, block_align={block_align})", path=source
        )
    if len(payload) % block_align:
        raise TruncatedDataError(
            f"data chunk ends mid-frame ({len(payload)} bytes, block_align={block_align})",
            path=source,
        )
    if sample_rate != DATASET_SAMPLE_RATE:
        logger.warning("%s: sample rate %d Hz (dataset files use 44100)", source, sample_rate)

    ints = np.frombuffer(payload, dtype=PCM16_DTYPE).reshape(-1, channels)
    samples = ints.astype(np.float64) / PCM16_SCALE
    if channels == 1:
        return promote_mono(Waveform(samples[:, 0], sample_rate))
    return StereoWaveform(
        top=Waveform(samples[:, 0], sample_rate),
        bottom=Waveform(samples[:, 1], sample_rate),
    )


def wav_write(w: StereoWaveform | Waveform, path: str | Path) -> Path:
    file_path = Path(path)
    try:
        file_path.parent.mkdir(parents=True, exist_ok=True)
        file_path.write_bytes(wav_to_bytes(w))
    except OSError as exc:
        raise DataError(f"cannot write WAV: {exc.strerror}", path=file_path) from exc
    return file_path


def wav_read(path: str | Path) -> StereoWaveform:
    file_path = Path(path)
    try:
        data = file_path.read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read WAV: {exc.strerror}", path=file_path) from exc
    return wav_from_bytes(data, source=file_path)


__all__ = [
    "WavFormatError",
    "wav_from_bytes",
    "wav_read",
    "wav_to_bytes",
    "wav_write",
]
