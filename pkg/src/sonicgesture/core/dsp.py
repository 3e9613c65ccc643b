"""STFT, band/time cropping, and conversion to the 100x100 CNN input image.

DFT scaling is unnormalised (X_k = sum_n x_n w_n e^{-2 pi i k n / N}), so for one
frame the full-spectrum energy sum_k |X_k|^2 equals N * sum_n (x_n w_n)^2.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from sonicgesture.core.config import CropConfig, ImageConfig, PipelineConfig, StftConfig
from sonicgesture.core.errors import CropError, DataError, ShapeError
from sonicgesture.core.models import IMAGE_SIZE, Spectrogram, SpectrogramImage, Waveform

_EDGE_TOLERANCE = 1e-9


def window(name: str, n_fft: int) -> np.ndarray:
    """Periodic Hann (or rectangular) analysis window."""
    if name == "hann":
        n = np.arange(n_fft, dtype=np.float64)
        return 0.5 - 0.5 * np.cos(2.0 * np.pi * n / n_fft)
    if name == "rect":
        return np.ones(n_fft, dtype=np.float64)
    raise ValueError(f"unsupported window '{name}'")


def stft(w: Waveform, cfg: StftConfig | None = None) -> Spectrogram:
    cfg = cfg or StftConfig()
    if len(w) < cfg.n_fft:
        raise ShapeError(
            f"waveform has {len(w)} samples, shorter than one {cfg.n_fft}-sample frame"
        )
    frames = sliding_window_view(w.samples, cfg.n_fft)[:: cfg.hop]
    spectra = np.fft.rfft(frames * window(cfg.window, cfg.n_fft), axis=1)
    return Spectrogram(
        magnitudes=np.abs(spectra).T,
        sample_rate=w.sample_rate,
        n_fft=cfg.n_fft,
        hop=cfg.hop,
    )


def reference_dft_magnitudes(frame: np.ndarray, taper: np.ndarray | None = None) -> np.ndarray:
    """
    Direct O(n^2) DFT of one frame, bins 0..N/2, used to cross-check ``stft``.

    Twiddle exponents are reduced modulo N in integers before the complex
    exponential so large k*n products keep full precision.
    """
    x = np.asarray(frame, dtype=np.float64)
    if taper is not None:
        x = x * taper
    n_fft = x.shape[0]
    k = np.arange(n_fft // 2 + 1, dtype=np.int64)[:, None]
    n = np.arange(n_fft, dtype=np.int64)[None, :]
    exponent = (k * n) % n_fft
    basis = np.exp(-2j * np.pi * exponent / n_fft)
    return np.abs(basis @ x)


def full_spectrum_energy(magnitudes: np.ndarray, n_fft: int) -> float:
    """Sum of |X_k|^2 over all N bins, reconstructed from the one-sided bins 0..N/2."""
    squared = np.asarray(magnitudes, dtype=np.float64) ** 2
    return float(squared[0] + squared[n_fft // 2] + 2.0 * np.sum(squared[1 : n_fft // 2]))


def band_time_crop(s: Spectrogram, crop: CropConfig | None = None) -> Spectrogram:
    """
    Keep bins whose centre lies in [f_lo, f_hi] and frames whose start lies in [t_lo, t_hi).

    Membership is judged on absolute indices, so cropping twice with the same
    window is the same as cropping once.
    """
    crop = crop or CropConfig()
    bins = s.bin_indices()
    frames = s.frame_indices()

    centres = bins * s.bin_hz
    keep_bins = (centres >= crop.f_lo - _EDGE_TOLERANCE) & (centres <= crop.f_hi + _EDGE_TOLERANCE)
    starts = frames * s.hop
    keep_frames = (starts >= crop.t_lo * s.sample_rate - _EDGE_TOLERANCE) & (
        starts < crop.t_hi * s.sample_rate - _EDGE_TOLERANCE
    )

    if not keep_bins.any():
        raise CropError(
            "frequency",
            f"no bin centre in [{crop.f_lo}, {crop.f_hi}] Hz (grid covers "
            f"{centres[0]:.1f}-{centres[-1]:.1f} Hz)",
        )
    if not keep_frames.any():
        raise CropError(
            "time",
            f"no frame start in [{crop.t_lo}, {crop.t_hi}) s (grid covers "
            f"{frames[0] * s.frame_s:.3f}-{frames[-1] * s.frame_s:.3f} s)",
        )

    bin_idx = np.flatnonzero(keep_bins)
    frame_idx = np.flatnonzero(keep_frames)
    return Spectrogram(
        magnitudes=s.magnitudes[bin_idx[0] : bin_idx[-1] + 1, frame_idx[0] : frame_idx[-1] + 1],
        sample_rate=s.sample_rate,
        n_fft=s.n_fft,
        hop=s.hop,
        freq_offset_bin=int(bins[bin_idx[0]]),
        time_offset_frame=int(frames[frame_idx[0]]),
    )


def _bilinear_matrix(n_out: int, n_in: int) -> np.ndarray:
    """Rows are interpolation weights mapping n_in samples onto n_out (corners aligned)."""
    if n_in == n_out:
        return np.eye(n_out)
    positions = np.linspace(0.0, n_in - 1, n_out)
    lower = np.minimum(np.floor(positions).astype(int), n_in - 2)
    frac = positions - lower
    weights = np.zeros((n_out, n_in))
    rows = np.arange(n_out)
    weights[rows, lower] = 1.0 - frac
    weights[rows, lower + 1] += frac
    return weights


def resize_bilinear(grid: np.ndarray, height: int, width: int) -> np.ndarray:
    grid = np.asarray(grid, dtype=np.float64)
    return _bilinear_matrix(height, grid.shape[0]) @ grid @ _bilinear_matrix(width, grid.shape[1]).T


def to_image(s: Spectrogram, cfg: ImageConfig | None = None) -> SpectrogramImage:
    """Log-compress, min-max normalise per image, and resample to 100x100."""
    cfg = cfg or ImageConfig()
    if s.n_bins < 2 or s.n_frames < 2:
        raise ShapeError(
            f"spectrogram {s.n_bins}x{s.n_frames} is degenerate; need at least 2 bins and 2 frames"
        )
    compressed = np.log10(1.0 + s.magnitudes / cfg.log_reference)
    lo = compressed.min()
    span = compressed.max() - lo
    if span <= 0.0:
        normalised = np.zeros_like(compressed)
    else:
        normalised = (compressed - lo) / span
    resized = resize_bilinear(normalised, IMAGE_SIZE, IMAGE_SIZE)
    return SpectrogramImage(np.clip(resized, 0.0, 1.0))


def spectrogram_pipeline(w: Waveform, cfg: PipelineConfig | None = None) -> SpectrogramImage:
    """stft -> band_time_crop -> to_image for one channel."""
    cfg = cfg or PipelineConfig()
    return to_image(band_time_crop(stft(w, cfg.stft), cfg.crop), cfg.image)


def band_energy_db(s: Spectrogram, f_lo: float, f_hi: float) -> float:
    """Mean squared magnitude of bins with centre in [f_lo, f_hi], in dB."""
    centres = s.bin_frequencies()
    mask = (centres >= f_lo) & (centres <= f_hi)
    if not mask.any():
        raise CropError("frequency", f"no bin centre in [{f_lo}, {f_hi}] Hz")
    power = float(np.mean(s.magnitudes[mask] ** 2))
    return 10.0 * math.log10(max(power, 1e-300))


def write_pgm(img: SpectrogramImage, path: str | Path) -> Path:
    """
    Export as binary PGM (P5, maxval 255, round half up).

    Rows are written highest frequency first so viewers show the usual
    spectrogram orientation; ``read_pgm`` undoes the flip.
    """
    file_path = Path(path)
    levels = np.floor(img.pixels[::-1] * 255.0 + 0.5).astype(np.uint8)
    header = f"P5\n{IMAGE_SIZE} {IMAGE_SIZE}\n255\n".encode("ascii")
    try:
        file_path.parent.mkdir(parents=True, exist_ok=True)
        file_path.write_bytes(header + levels.tobytes())
    except OSError as exc:
        raise DataError(f"cannot write PGM: {exc.strerror}", path=file_path) from exc
    return file_path


def read_pgm(path: str | Path) -> SpectrogramImage:
    file_path = Path(path)
    data = file_path.read_bytes()
    tokens: list[bytes] = []
    offset = 0
    while len(tokens) < 4:
        while offset < len(data) and data[offset : offset + 1].isspace():
            offset += 1
        start = offset
        while offset < len(data) and not data[offset : offset + 1].isspace():
            offset += 1
        if start == offset:
            raise DataError("truncated PGM header", path=file_path)
        tokens.append(data[start:offset])
    magic, width, height, maxval = tokens
    if magic != b"P5" or int(maxval) != 255:
        raise DataError("only 8-bit binary PGM (P5, maxval 255) is supported", path=file_path)
    body = data[offset + 1 : offset + 1 + int(width) * int(height)]
    if len(body) != int(width) * int(height):
        raise DataError("truncated PGM pixel data", path=file_path)
    pixels = np.frombuffer(body, dtype=np.uint8).reshape(int(height), int(width))[::-1]
    return SpectrogramImage(pixels.astype(np.float64) / 255.0)
