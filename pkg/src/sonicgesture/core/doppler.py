"""Doppler physics and the synthetic gesture corpus generator.

Each channel of a synthetic clip holds its own direct path and its own hand
echo (no cross-talk):

    y_c(t) = s * (g_c(t) sin(2 pi F t) + r a_c(t) sin(phi_c(t))) + noise_c(t) + ambience(t)

where phi_c accumulates the two-way echo frequency by per-sample trapezoidal
integration and s = amplitude / (1 + r) keeps the clean peak at the CW amplitude.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from sonicgesture.core.config import SimConfig
from sonicgesture.core.dataset import MANIFEST_FILENAME, write_manifest
from sonicgesture.core.models import (
    CLASS_ORDER,
    ChannelMotion,
    GestureClass,
    Manifest,
    ManifestRow,
    MotionProfile,
    Split,
    StereoWaveform,
    Waveform,
)
from sonicgesture.core.seeding import derive_seed
from sonicgesture.core.wav import wav_write

logger = logging.getLogger(__name__)

SPEED_OF_SOUND = 343.0
TRAIN_SUBJECTS = ("s1", "s2", "s3", "s4")
TEST_SUBJECTS = ("s5", "s6", "s7")
AMBIENT_CEILING_HZ = 15000.0

# Pulse widths and lead/lag offsets as fractions of the active window.
_SWIPE_WIDTH = 0.42
_SWIPE_OFFSET = 1.0 / 6.0
_PUSH_WIDTH = 0.5
_BLOCK_WIDTH = 0.67
_BLOCK_DEPTH = 0.85
_SPEED_JITTER = 0.15
_TIMING_JITTER_S = 0.1


@dataclass(frozen=True)
class DopplerParams:
    """Inputs of the classic moving-observer / moving-source Doppler relation."""

    f_emit: float
    v_sound: float = SPEED_OF_SOUND
    v_observer: float = 0.0
    v_source: float = 0.0

    def __post_init__(self) -> None:
        if self.v_sound <= 0:
            raise ValueError(f"v_sound must be positive, got {self.v_sound}")
        if self.v_source >= self.v_sound:
            raise ValueError(
                f"v_source={self.v_source} reaches the speed of sound ({self.v_sound}); "
                "the shift is singular"
            )
        if abs(self.v_source) >= self.v_sound:
            raise ValueError(f"|v_source| must be below v_sound, got {self.v_source}")


def doppler_shift(p: DopplerParams) -> float:
    """Observed frequency f * (v + v_o) / (v - v_s)."""
    return p.f_emit * (p.v_sound + p.v_observer) / (p.v_sound - p.v_source)


def echo_frequency(
    f_emit: float,
    v_hand: float | np.ndarray,
    v_sound: float = SPEED_OF_SOUND,
) -> float | np.ndarray:
    """
    Two-way shift of an echo off a hand moving at v_hand (positive = approaching).

    The hand first receives the tone as a moving observer, then re-emits it as
    a moving source: f * (v + v_h) / (v - v_h).
    """
    if v_sound <= 0:
        raise ValueError(f"v_sound must be positive, got {v_sound}")
    velocity = np.asarray(v_hand, dtype=np.float64)
    if np.any(np.abs(velocity) >= v_sound):
        raise ValueError(f"|v_hand| must be below v_sound={v_sound}")
    shifted = f_emit * (v_sound + velocity) / (v_sound - velocity)
    return float(shifted) if np.ndim(shifted) == 0 else shifted


@dataclass(frozen=True)
class SubjectStyle:
    """How one (synthetic) person performs gestures."""

    velocity_scale: float = 1.0
    tempo_scale: float = 1.0


def subject_style(subject: str | None, seed: int) -> SubjectStyle:
    if not subject:
        return SubjectStyle()
    number = int("".join(ch for ch in subject if ch.isdigit()) or 0)
    rng = np.random.default_rng(derive_seed(seed, "subject", number))
    return SubjectStyle(
        velocity_scale=float(rng.uniform(0.9, 1.1)),
        tempo_scale=float(rng.uniform(0.9, 1.1)),
    )


def _bump(t: np.ndarray, centre: float, width: float) -> np.ndarray:
    x = (t - (centre - width / 2.0)) / width
    inside = (x >= 0.0) & (x <= 1.0)
    return np.where(inside, 0.5 - 0.5 * np.cos(2.0 * np.pi * x), 0.0)


def _still(n: int) -> ChannelMotion:
    return ChannelMotion(velocity=np.zeros(n), envelope=np.zeros(n), gain=np.ones(n))


def _moving(pulse: np.ndarray, speed: float) -> ChannelMotion:
    return ChannelMotion(velocity=speed * pulse, envelope=pulse, gain=np.ones(pulse.shape[0]))


def motion_profile(
    g: GestureClass,
    cfg: SimConfig,
    seed: int,
    style: SubjectStyle | None = None,
) -> MotionProfile:
    """
    Per-channel hand motion for one gesture.

    Every class draws the same jitter values for a given seed, so swipe_down is
    exactly swipe_up with the channels exchanged.
    """
    if g is GestureClass.SWIPE_DOWN:
        return motion_profile(GestureClass.SWIPE_UP, cfg, seed, style).swapped()

    style = style or SubjectStyle()
    sample_rate = cfg.cw.sample_rate_hz
    n = int(round(cfg.duration_s * sample_rate))
    t = np.arange(n, dtype=np.float64) / sample_rate

    rng = np.random.default_rng(seed)
    jitter = rng.uniform(1.0 - _SPEED_JITTER, 1.0 + _SPEED_JITTER)
    speed = cfg.peak_velocity * style.velocity_scale * jitter
    shift = rng.uniform(-_TIMING_JITTER_S, _TIMING_JITTER_S)

    lo, hi = cfg.active_window_s
    span = hi - lo
    centre = (lo + hi) / 2.0 + shift

    if g is GestureClass.PUSH:
        pulse = _bump(t, centre, _PUSH_WIDTH * span * style.tempo_scale)
        top = bottom = _moving(pulse, speed)
    elif g is GestureClass.SWIPE_UP:
        pulse = _bump(t, centre, _PUSH_WIDTH * span * style.tempo_scale)
        top, bottom = _moving(pulse, speed), _moving(pulse, -speed)
    elif g in (GestureClass.SWIPE_RIGHT, GestureClass.SWIPE_LEFT):
        width = _SWIPE_WIDTH * span * style.tempo_scale
        lead = _bump(t, centre - _SWIPE_OFFSET * span, width)
        follow = _bump(t, centre + _SWIPE_OFFSET * span, width)
        if g is GestureClass.SWIPE_RIGHT:
            # top approaches first, then bottom sees the hand leave
            top, bottom = _moving(lead, speed), _moving(follow, -speed)
        else:
            # bottom sees the hand leave first, then top sees it arrive
            top, bottom = _moving(follow, speed), _moving(lead, -speed)
    elif g is GestureClass.BLOCK:
        dip = _bump(t, centre, _BLOCK_WIDTH * span * style.tempo_scale)
        blocked = ChannelMotion(
            velocity=np.zeros(n), envelope=np.zeros(n), gain=1.0 - _BLOCK_DEPTH * dip
        )
        top = bottom = blocked
    else:
        top = bottom = _still(n)

    return MotionProfile(top=top, bottom=bottom, sample_rate=sample_rate)


def _echo_phase(frequency: np.ndarray, sample_rate: int) -> np.ndarray:
    increments = (frequency[1:] + frequency[:-1]) / (2.0 * sample_rate)
    return 2.0 * np.pi * np.concatenate([[0.0], np.cumsum(increments)])


def _ambience(rng: np.random.Generator, t: np.ndarray, level: float) -> np.ndarray:
    """Low-frequency room sound: mains hum plus a few voice-band partials, all below 15 kHz."""
    tones = [rng.uniform(50.0, 400.0)] + list(rng.uniform(200.0, 4000.0, size=3))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=len(tones))
    weights = rng.dirichlet(np.ones(len(tones)))
    signal = sum(w * np.sin(2.0 * np.pi * f * t + p) for f, p, w in zip(tones, phases, weights))
    return level * np.asarray(signal)


def synth_gesture(
    g: GestureClass,
    cfg: SimConfig,
    seed: int,
    subject: str | None = None,
    noisy: bool = False,
) -> StereoWaveform:
    """Render one stereo clip; identical (g, cfg, seed, subject, noisy) give identical samples."""
    if g is GestureClass.SWIPE_DOWN:
        mirrored = synth_gesture(GestureClass.SWIPE_UP, cfg, seed, subject, noisy)
        return StereoWaveform(top=mirrored.bottom, bottom=mirrored.top)

    profile = motion_profile(g, cfg, seed, subject_style(subject, cfg.seed))
    cw = cfg.cw_for_clip
    sample_rate = cw.sample_rate_hz
    t = np.arange(cw.n_samples, dtype=np.float64) / sample_rate
    carrier = np.sin(2.0 * np.pi * cw.frequency_hz * t)
    scale = cw.amplitude / (1.0 + cfg.echo_ratio)

    noise_rng = np.random.default_rng([seed, 1])
    noise = noise_rng.normal(0.0, cfg.noise_fraction * cw.amplitude, size=(2, t.shape[0]))
    ambience = _ambience(noise_rng, t, cfg.ambient_level) if noisy else 0.0

    channels = []
    for index, motion in enumerate(profile.channels()):
        frequency = echo_frequency(cw.frequency_hz, motion.velocity, cfg.speed_of_sound)
        echo = np.sin(_echo_phase(np.asarray(frequency), sample_rate))
        direct = motion.gain * carrier
        channels.append(
            scale * (direct + cfg.echo_ratio * motion.envelope * echo) + noise[index] + ambience
        )

    stacked = np.stack(channels)
    peak = float(np.max(np.abs(stacked)))
    if peak > 1.0:
        stacked = stacked / peak
    return StereoWaveform(
        top=Waveform(stacked[0], sample_rate),
        bottom=Waveform(stacked[1], sample_rate),
    )


@dataclass(frozen=True)
class SimulatedClip:
    row: ManifestRow
    noisy: bool


def _clip_jobs(
    n_per_class: int, test_per_class: int, seed: int, ambient_fraction: float
) -> list[tuple[ManifestRow, bool]]:
    jobs: list[tuple[ManifestRow, bool]] = []
    index = 0
    for split, count, subjects in (
        (Split.TRAIN, n_per_class, TRAIN_SUBJECTS),
        (Split.TEST, test_per_class, TEST_SUBJECTS),
    ):
        for gesture in CLASS_ORDER:
            for k in range(count):
                clip_seed = derive_seed(seed, "simulate", index)
                subject = subjects[k % len(subjects)]
                noisy = bool(np.random.default_rng([clip_seed, 2]).random() < ambient_fraction)
                path = f"{split.value}/{gesture.code}/{gesture.code}_{subject}_{k:04d}.wav"
                row = ManifestRow(
                    path=path, gesture=gesture, split=split, subject=subject, seed=clip_seed
                )
                jobs.append((row, noisy))
                index += 1
    return jobs


def synth_dataset(
    n_per_class: int,
    cfg: SimConfig,
    seed: int,
    out_dir: str | Path,
    test_per_class: int = 0,
    workers: int = 1,
) -> Manifest:
    """
    Write a class-balanced synthetic corpus under ``out_dir`` plus its manifest.

    Layout is ``<split>/<code>/<code>_<subject>_<k>.wav``; manifest paths are
    relative to ``out_dir``. Clip synthesis fans out over ``workers`` threads and
    the manifest is written once, after every clip is on disk.
    """
    if n_per_class < 1:
        raise ValueError(f"n_per_class must be >= 1, got {n_per_class}")
    if test_per_class < 0:
        raise ValueError(f"test_per_class must be >= 0, got {test_per_class}")
    root = Path(out_dir)
    sim = cfg.model_copy(update={"seed": seed})
    jobs = _clip_jobs(n_per_class, test_per_class, seed, cfg.ambient_fraction)

    def render(job: tuple[ManifestRow, bool]) -> SimulatedClip:
        row, noisy = job
        clip = synth_gesture(row.gesture, sim, int(row.seed or 0), row.subject, noisy)
        wav_write(clip, root / row.path)
        return SimulatedClip(row=row, noisy=noisy)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            clips = list(pool.map(render, jobs))
    else:
        clips = [render(job) for job in jobs]

    noisy_count = sum(clip.noisy for clip in clips)
    logger.info(
        "synthesised %d clips (%d per class train, %d per class test, %d noisy) into %s",
        len(clips),
        n_per_class,
        test_per_class,
        noisy_count,
        root,
    )
    manifest = Manifest(tuple(clip.row for clip in clips))
    write_manifest(manifest, root / MANIFEST_FILENAME)
    return manifest
