"""Clip pipeline integration tests."""

import numpy as np
import pytest

from sonicgesture.core.augment import (
    GaussianImageNoise,
    NoiseInjector,
    WidthShifter,
    draw_width_shift,
    shift_columns,
)
from sonicgesture.core.config import SimConfig
from sonicgesture.core.doppler import synth_gesture
from sonicgesture.core.models import FusionMode, GestureClass
from sonicgesture.core.pipeline import ClipPipeline, pack_model_input
from sonicgesture.core.seeding import derive_seed


@pytest.fixture(scope="module")
def clip():
    return synth_gesture(GestureClass.SWIPE_RIGHT, SimConfig(), seed=8)


def test_pipeline_end_to_end(clip) -> None:
    """Test that a clip yields three 100x100 channel images."""
    pipeline = ClipPipeline()
    assert pipeline.is_identity
    images = pipeline.images(clip)
    for image in images.as_tuple():
        assert image.pixels.shape == (100, 100)
    mi = pipeline.run(clip, FusionMode.EARLY)
    np.testing.assert_array_equal(mi.tensors[0][2], images.mix.pixels)


def test_pack_model_input_layouts(clip) -> None:
    """Test the tensor layout packed for each fusion mode."""
    images = ClipPipeline().images(clip)
    assert pack_model_input(images, FusionMode.SINGLE).tensors[0].shape == (1, 100, 100)
    late = pack_model_input(images, FusionMode.LATE)
    np.testing.assert_array_equal(late.tensors[0][0], images.top.pixels)
    np.testing.assert_array_equal(late.tensors[1][0], images.bottom.pixels)


def test_augmented_pipeline_is_seeded(clip) -> None:
    """Test that pipeline augmentation repeats per seed."""
    pipeline = ClipPipeline(
        waveform_augmenters=[NoiseInjector(0.005)],
        image_augmenters=[GaussianImageNoise(variance=0.01), WidthShifter(0.1)],
    )
    assert not pipeline.is_identity
    first = pipeline.images(clip, seed=4)
    second = pipeline.images(clip, seed=4)
    other = pipeline.images(clip, seed=5)
    for a, b in zip(first.as_tuple(), second.as_tuple()):
        np.testing.assert_array_equal(a.pixels, b.pixels)
    assert not np.array_equal(first.top.pixels, other.top.pixels)


def test_shared_width_shift_keeps_channels_aligned(clip) -> None:
    """Test that one width shift moves all three images together."""
    shifted = ClipPipeline(image_augmenters=[WidthShifter(0.1)])
    plain = ClipPipeline().images(clip)
    for seed in range(5):
        offset = draw_width_shift(0.1, derive_seed(seed, "augment", 0))
        moved = shifted.images(clip, seed=seed)
        for before, after in zip(plain.as_tuple(), moved.as_tuple()):
            np.testing.assert_array_equal(after.pixels, shift_columns(before.pixels, offset))
