"""Raw-audio noise injection and spectrogram-image augmentations."""

from __future__ import annotations

import math

import numpy as np

from sonicgesture.core.config import GaussianNoiseParams, NoiseInjectionParams
from sonicgesture.core.models import IMAGE_SIZE, SpectrogramImage, Waveform


def gaussian_pdf(x: float | np.ndarray, mean: float, sigma: float) -> float | np.ndarray:
    """Normal density with mean ``mean`` and standard deviation ``sigma``."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    values = np.asarray(x, dtype=np.float64)
    density = np.exp(-((values - mean) ** 2) / (2.0 * sigma**2)) / math.sqrt(
        2.0 * math.pi * sigma**2
    )
    return float(density) if np.ndim(density) == 0 else density


def add_gaussian_noise(img: SpectrogramImage, p: GaussianNoiseParams) -> SpectrogramImage:
    """pixel' = clamp(pixel + eta, 0, 1) with eta ~ N(mean, variance), one draw per pixel."""
    rng = np.random.default_rng(p.seed)
    noise = rng.normal(p.mean, p.sigma, size=img.pixels.shape)
    return SpectrogramImage(np.clip(img.pixels + noise, 0.0, 1.0))


def inject_noise(w: Waveform, p: NoiseInjectionParams) -> Waveform:
    """sample' = sample + u with u ~ Uniform(-alpha * peak, +alpha * peak)."""
    if p.alpha == 0.0 or len(w) == 0:
        return w
    bound = p.alpha * w.peak
    rng = np.random.default_rng(p.seed)
    return Waveform(w.samples + rng.uniform(-bound, bound, size=len(w)), w.sample_rate)


def shift_columns(pixels: np.ndarray, offset: int) -> np.ndarray:
    """Translate columns right by ``offset`` (left when negative), zero-filling the gap."""
    shifted = np.zeros_like(pixels)
    width = pixels.shape[-1]
    if abs(offset) >= width:
        return shifted
    if offset > 0:
        shifted[..., offset:] = pixels[..., : width - offset]
    elif offset < 0:
        shifted[..., :offset] = pixels[..., -offset:]
    else:
        shifted[...] = pixels
    return shifted


def draw_width_shift(max_fraction: float, seed: int) -> int:
    if not 0.0 <= max_fraction < 1.0:
        raise ValueError(f"max_fraction must lie in [0, 1), got {max_fraction}")
    limit = int(math.floor(IMAGE_SIZE * max_fraction))
    if limit == 0:
        return 0
    return int(np.random.default_rng(seed).integers(-limit, limit + 1))


def width_shift(
    img: SpectrogramImage, max_fraction: float = 0.1, seed: int = 0
) -> SpectrogramImage:
    """Random horizontal (time-axis) translation by up to floor(100 * max_fraction) columns."""
    offset = draw_width_shift(max_fraction, seed)
    return SpectrogramImage(shift_columns(img.pixels, offset))


class NoiseInjector:
    """WaveformAugmenter adding bounded uniform noise to raw audio."""

    def __init__(self, alpha: float = 0.005) -> None:
        self.alpha = NoiseInjectionParams(alpha=alpha).alpha

    def augment(self, w: Waveform, seed: int) -> Waveform:
        return inject_noise(w, NoiseInjectionParams(alpha=self.alpha, seed=seed))


class GaussianImageNoise:
    """ImageAugmenter adding clamped per-pixel Gaussian noise."""

    shared_across_channels = False

    def __init__(self, mean: float = 0.0, variance: float = 0.01) -> None:
        self.params = GaussianNoiseParams(mean=mean, variance=variance)

    def augment(self, img: SpectrogramImage, seed: int) -> SpectrogramImage:
        return add_gaussian_noise(img, self.params.model_copy(update={"seed": seed}))


class WidthShifter:
    """ImageAugmenter translating along time; every channel of a clip gets the same offset."""

    shared_across_channels = True

    def __init__(self, max_fraction: float = 0.1) -> None:
        if not 0.0 <= max_fraction < 1.0:
            raise ValueError(f"max_fraction must lie in [0, 1), got {max_fraction}")
        self.max_fraction = max_fraction

    def augment(self, img: SpectrogramImage, seed: int) -> SpectrogramImage:
        return width_shift(img, self.max_fraction, seed)
