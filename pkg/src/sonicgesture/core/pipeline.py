"""Clip pipeline: wires channel split, augmentation and DSP stages with dependency injection."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from sonicgesture.core.audio import mixdown, pair_channels, split_channels
from sonicgesture.core.config import PipelineConfig
from sonicgesture.core.dsp import spectrogram_pipeline
from sonicgesture.core.interfaces import ImageAugmenter, WaveformAugmenter
from sonicgesture.core.models import FusionMode, ModelInput, SpectrogramImage, StereoWaveform
from sonicgesture.core.seeding import derive_seed


@dataclass(frozen=True, eq=False)
class ChannelImages:
    """The three per-clip images every fusion layout is packed from."""

    top: SpectrogramImage
    bottom: SpectrogramImage
    mix: SpectrogramImage

    def as_tuple(self) -> tuple[SpectrogramImage, SpectrogramImage, SpectrogramImage]:
        return (self.top, self.bottom, self.mix)


def pack_model_input(images: ChannelImages, mode: FusionMode) -> ModelInput:
    """
    Arrange channel images for ``mode``.

    single -> (mixdown,); early -> stacked (top, bottom, mixdown); late -> (top,), (bottom,)
    """
    if mode is FusionMode.SINGLE:
        tensors: tuple[np.ndarray, ...] = (images.mix.pixels[None],)
    elif mode is FusionMode.EARLY:
        tensors = (np.stack([images.top.pixels, images.bottom.pixels, images.mix.pixels]),)
    else:
        tensors = (images.top.pixels[None], images.bottom.pixels[None])
    return ModelInput(mode=mode, tensors=tensors)


class ClipPipeline:
    """
    Orchestrates one clip: split, waveform augmenters, mixdown, DSP, image augmenters.

    Augmenters are injected, so preprocessing and training can swap them freely.
    Waveform augmenters draw independent noise per microphone. Image augmenters
    flagged ``shared_across_channels`` reuse one seed for all three images of a
    clip so the channels stay aligned in time.
    """

    def __init__(
        self,
        config: Optional[PipelineConfig] = None,
        waveform_augmenters: list[WaveformAugmenter] | None = None,
        image_augmenters: list[ImageAugmenter] | None = None,
    ) -> None:
        self.config = config or PipelineConfig()
        self.waveform_augmenters = waveform_augmenters or []
        self.image_augmenters = image_augmenters or []

    def images(self, stereo: StereoWaveform, seed: int = 0) -> ChannelImages:
        top, bottom = split_channels(stereo)
        for stage, augmenter in enumerate(self.waveform_augmenters):
            top = augmenter.augment(top, derive_seed(seed, "augment", 3 * stage))
            bottom = augmenter.augment(bottom, derive_seed(seed, "augment", 3 * stage + 1))
        mixed = mixdown(pair_channels(top, bottom))

        rendered = [spectrogram_pipeline(w, self.config) for w in (top, bottom, mixed)]
        offset = 3 * len(self.waveform_augmenters)
        for stage, augmenter in enumerate(self.image_augmenters):
            shared = bool(getattr(augmenter, "shared_across_channels", False))
            base = offset + 3 * stage
            rendered = [
                augmenter.augment(img, derive_seed(seed, "augment", base if shared else base + c))
                for c, img in enumerate(rendered)
            ]
        return ChannelImages(*rendered)

    def run(self, stereo: StereoWaveform, mode: FusionMode, seed: int = 0) -> ModelInput:
        return pack_model_input(self.images(stereo, seed), mode)

    @property
    def is_identity(self) -> bool:
        return not self.waveform_augmenters and not self.image_augmenters
