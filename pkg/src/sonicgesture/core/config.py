"""Validated parameter groups for every stage, plus YAML loading for run configs."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from sonicgesture.core.errors import DataError


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class CwConfig(_Frozen):
    """Continuous-wave tone: samples[n] = amplitude * sin(2*pi*F*n/sr)."""

    frequency_hz: float = 20000.0
    sample_rate_hz: int = 44100
    duration_s: float = 3.0
    amplitude: float = 0.9

    @field_validator("duration_s")
    @classmethod
    def _positive_duration(cls, value: float) -> float:
        if value <= 0:
            raise ValueError(f"duration_s must be positive, got {value}")
        return value

    @field_validator("amplitude")
    @classmethod
    def _amplitude_range(cls, value: float) -> float:
        if not 0.0 < value <= 1.0:
            raise ValueError(f"amplitude must lie in (0, 1], got {value}")
        return value

    @model_validator(mode="after")
    def _below_nyquist(self) -> "CwConfig":
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        if self.frequency_hz <= 0 or self.frequency_hz >= self.sample_rate_hz / 2:
            raise ValueError(
                f"frequency_hz={self.frequency_hz} must lie in (0, Nyquist="
                f"{self.sample_rate_hz / 2})"
            )
        return self

    @property
    def n_samples(self) -> int:
        return int(round(self.duration_s * self.sample_rate_hz))


class SimConfig(_Frozen):
    """Synthetic gesture clip parameters."""

    duration_s: float = 3.0
    active_window_s: tuple[float, float] = (1.4, 2.6)
    echo_ratio: float = 0.15
    noise_fraction: float = 0.002
    ambient_fraction: float = 0.0
    ambient_level: float = 0.05
    speed_of_sound: float = 343.0
    peak_velocity: float = 1.2
    cw: CwConfig = Field(default_factory=CwConfig)
    seed: int = 0

    @model_validator(mode="after")
    def _window_fits(self) -> "SimConfig":
        lo, hi = self.active_window_s
        if self.duration_s < 2.7:
            raise ValueError(
                f"duration_s must be >= 2.7 s to cover the crop, got {self.duration_s}"
            )
        if not 0.0 <= lo < hi <= self.duration_s:
            raise ValueError(
                f"active window {self.active_window_s} must lie within [0, {self.duration_s}]"
            )
        if self.echo_ratio < 0 or self.noise_fraction < 0 or self.ambient_level < 0:
            raise ValueError("echo_ratio, noise_fraction and ambient_level must be non-negative")
        if not 0.0 <= self.ambient_fraction <= 1.0:
            raise ValueError("ambient_fraction must lie in [0, 1]")
        if self.speed_of_sound <= 0:
            raise ValueError("speed_of_sound must be positive")
        if not 0.0 < self.peak_velocity <= 1.5:
            raise ValueError("peak_velocity must lie in (0, 1.5] so jittered speeds stay <= 2 m/s")
        return self

    @property
    def cw_for_clip(self) -> CwConfig:
        return self.cw.model_copy(update={"duration_s": self.duration_s})


class StftConfig(_Frozen):
    n_fft: int = 2048
    hop: int = 512
    window: str = "hann"

    @model_validator(mode="after")
    def _valid_frame(self) -> "StftConfig":
        if self.n_fft <= 0 or self.n_fft & (self.n_fft - 1):
            raise ValueError(f"n_fft must be a power of two, got {self.n_fft}")
        if not 0 < self.hop <= self.n_fft:
            raise ValueError(f"hop must lie in (0, n_fft], got {self.hop}")
        if self.window not in {"hann", "rect"}:
            raise ValueError(f"unsupported window '{self.window}'")
        return self


class CropConfig(_Frozen):
    f_lo: float = 19700.0
    f_hi: float = 20300.0
    t_lo: float = 1.3
    t_hi: float = 2.7

    @model_validator(mode="after")
    def _ordered(self) -> "CropConfig":
        if self.f_lo > self.f_hi or self.t_lo >= self.t_hi:
            raise ValueError("crop bounds must satisfy f_lo <= f_hi and t_lo < t_hi")
        return self


class ImageConfig(_Frozen):
    log_reference: float = 1e-6

    @field_validator("log_reference")
    @classmethod
    def _positive(cls, value: float) -> float:
        if value <= 0:
            raise ValueError("log_reference must be positive")
        return value


class PipelineConfig(_Frozen):
    """Everything that shapes a clip's images; its fingerprint keys the image cache."""

    stft: StftConfig = Field(default_factory=StftConfig)
    crop: CropConfig = Field(default_factory=CropConfig)
    image: ImageConfig = Field(default_factory=ImageConfig)

    def fingerprint(self) -> str:
        payload = json.dumps(self.model_dump(mode="json"), sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


class GaussianNoiseParams(_Frozen):
    mean: float = 0.0
    variance: float = 0.01
    seed: int = 0

    @field_validator("variance")
    @classmethod
    def _positive(cls, value: float) -> float:
        if value <= 0:
            raise ValueError(f"variance must be positive, got {value}")
        return value

    @property
    def sigma(self) -> float:
        return float(self.variance**0.5)


class NoiseInjectionParams(_Frozen):
    alpha: float = 0.005
    seed: int = 0

    @field_validator("alpha")
    @classmethod
    def _non_negative(cls, value: float) -> float:
        if value < 0:
            raise ValueError(f"alpha must be non-negative, got {value}")
        return value


class AugmentationPolicy(_Frozen):
    """How many augmented copies of each training image to add, and with what noise."""

    copies: int = 1
    gaussian_mean: float = 0.0
    gaussian_variance: float = 0.01
    max_shift_fraction: float = 0.1

    @model_validator(mode="after")
    def _valid(self) -> "AugmentationPolicy":
        if self.copies < 0:
            raise ValueError("copies must be non-negative")
        if self.gaussian_variance <= 0:
            raise ValueError("gaussian_variance must be positive")
        if not 0.0 <= self.max_shift_fraction < 1.0:
            raise ValueError("max_shift_fraction must lie in [0, 1)")
        return self


class TrainConfig(_Frozen):
    learning_rate: float = 0.01
    epochs: int = 10
    batch_size: int = 32
    seed: int = 0
    val_fraction: float = 0.2
    dtype: str = "float64"
    augmentation: AugmentationPolicy = Field(default_factory=AugmentationPolicy)

    @model_validator(mode="after")
    def _valid(self) -> "TrainConfig":
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if self.epochs <= 0 or self.batch_size <= 0:
            raise ValueError("epochs and batch_size must be positive")
        if not 0.0 <= self.val_fraction < 1.0:
            raise ValueError("val_fraction must lie in [0, 1)")
        if self.dtype not in {"float64", "float32"}:
            raise ValueError("dtype must be float64 or float32")
        return self


class RunConfig(_Frozen):
    """Aggregate of all stage configs for one CLI invocation."""

    seed: int = 7
    pipeline: PipelineConfig = Field(default_factory=PipelineConfig)
    sim: SimConfig = Field(default_factory=SimConfig)
    injection: NoiseInjectionParams = Field(default_factory=NoiseInjectionParams)
    train: TrainConfig = Field(default_factory=TrainConfig)


def load_run_config(path: str | Path) -> RunConfig:
    """Load a YAML run config; missing sections fall back to defaults."""
    file_path = Path(path)
    try:
        with file_path.open("r", encoding="utf-8") as handle:
            payload: Any = yaml.safe_load(handle) or {}
    except OSError as exc:
        raise DataError(f"cannot read config: {exc.strerror}", path=file_path) from exc
    except yaml.YAMLError as exc:
        raise DataError(f"invalid YAML: {exc}", path=file_path) from exc
    if not isinstance(payload, dict):
        raise DataError("config root must be a mapping", path=file_path)
    return RunConfig.model_validate(payload)
