"""sonicgesture: ultrasonic Doppler hand-gesture recognition with dual-microphone fusion."""

__version__ = "0.1.0"

# Core exports
from sonicgesture.core.models import (
    FusionMode,
    GestureClass,
    Manifest,
    ManifestRow,
    ModelInput,
    Spectrogram,
    SpectrogramImage,
    StereoWaveform,
    Waveform,
)
from sonicgesture.core.interfaces import CorpusAdapter, ImageAugmenter, WaveformAugmenter
from sonicgesture.core.config import PipelineConfig, RunConfig, SimConfig, TrainConfig
from sonicgesture.core.pipeline import ChannelImages, ClipPipeline
from sonicgesture.core.registry import CorpusRegistry
from sonicgesture.core.dataset import assemble, ingest, stratified_split
from sonicgesture.core.doppler import synth_dataset, synth_gesture
from sonicgesture.core.metrics import ConfusionMatrix
from sonicgesture.nn.fusion import FusionModel, build_model, predict

__all__ = [
    "FusionMode",
    "GestureClass",
    "Manifest",
    "ManifestRow",
    "ModelInput",
    "Spectrogram",
    "SpectrogramImage",
    "StereoWaveform",
    "Waveform",
    "CorpusAdapter",
    "ImageAugmenter",
    "WaveformAugmenter",
    "PipelineConfig",
    "RunConfig",
    "SimConfig",
    "TrainConfig",
    "ChannelImages",
    "ClipPipeline",
    "CorpusRegistry",
    "assemble",
    "ingest",
    "stratified_split",
    "synth_dataset",
    "synth_gesture",
    "ConfusionMatrix",
    "FusionModel",
    "build_model",
    "predict",
]
