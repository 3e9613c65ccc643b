"""Waveform operations: CW tone generation, PCM16 codec, and stereo channel handling."""

from __future__ import annotations

import numpy as np

from sonicgesture.core.config import CwConfig
from sonicgesture.core.errors import PcmError
from sonicgesture.core.models import StereoWaveform, Waveform

PCM16_SCALE = 32767
PCM16_DTYPE = np.dtype("<i2")


def generate_cw(config: CwConfig) -> Waveform:
    """
    Generate the continuous-wave tone.

    The tone argument is time in seconds (x = n / sample_rate), so the
    configured frequency is in Hz.
    """
    n = np.arange(config.n_samples, dtype=np.float64)
    phase = 2.0 * np.pi * config.frequency_hz * n / config.sample_rate_hz
    return Waveform(config.amplitude * np.sin(phase), config.sample_rate_hz)


def quantize_pcm16(samples: np.ndarray) -> np.ndarray:
    """Clamp to [-1, 1] and round to signed 16-bit integers."""
    clamped = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    return np.round(clamped * PCM16_SCALE).astype(PCM16_DTYPE)


def pcm16_encode(w: Waveform) -> bytes:
    return quantize_pcm16(w.samples).tobytes()


def pcm16_decode(payload: bytes, sample_rate: int) -> Waveform:
    if len(payload) % 2:
        raise PcmError(f"PCM16 payload has odd length {len(payload)}")
    ints = np.frombuffer(payload, dtype=PCM16_DTYPE)
    return Waveform(ints.astype(np.float64) / PCM16_SCALE, sample_rate)


def split_channels(s: StereoWaveform) -> tuple[Waveform, Waveform]:
    return s.top, s.bottom


def pair_channels(top: Waveform, bottom: Waveform) -> StereoWaveform:
    return StereoWaveform(top=top, bottom=bottom)


def promote_mono(w: Waveform) -> StereoWaveform:
    """A mono recording becomes a stereo one with identical channels."""
    return StereoWaveform(top=w, bottom=w)


def mixdown(s: StereoWaveform) -> Waveform:
    return Waveform((s.top.samples + s.bottom.samples) / 2.0, s.sample_rate)
