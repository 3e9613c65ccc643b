"""Manifests, corpus ingestion, deterministic splits and fusion-input assembly.

Manifest CSV: header ``path,gesture,subject,split,seed``, UTF-8, gesture as its
short code, rows sorted by path. Paths are relative to the corpus root.
"""

from __future__ import annotations

import csv
import hashlib
import io
import logging
import math
import os
import re
import threading
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np

from sonicgesture.core.augment import (
    GaussianImageNoise,
    NoiseInjector,
    draw_width_shift,
    shift_columns,
)
from sonicgesture.core.config import AugmentationPolicy, NoiseInjectionParams, PipelineConfig
from sonicgesture.core.errors import (
    ClipTooShortError,
    DataError,
    ManifestError,
    UnknownGestureError,
)
from sonicgesture.core.models import (
    CLASS_ORDER,
    FusionMode,
    GestureClass,
    IngestReport,
    Manifest,
    ManifestRow,
    ModelInput,
    Split,
    SpectrogramImage,
    StereoWaveform,
)
from sonicgesture.core.pipeline import ChannelImages, ClipPipeline, pack_model_input
from sonicgesture.core.seeding import derive_seed, rng_for
from sonicgesture.core.wav import wav_from_bytes, wav_write

if TYPE_CHECKING:
    from sonicgesture.core.registry import CorpusRegistry

logger = logging.getLogger(__name__)

MANIFEST_FILENAME = "manifest.csv"
MANIFEST_HEADER = ("path", "gesture", "subject", "split", "seed")
_COPY_STEM = re.compile(r"^(?P<stem>.+)_aug\d+$")


def manifest_to_csv(m: Manifest) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(MANIFEST_HEADER)
    for row in m:
        writer.writerow(
            [
                row.path,
                row.gesture.code,
                row.subject or "",
                row.split.value,
                "" if row.seed is None else str(row.seed),
            ]
        )
    return buffer.getvalue()


def write_manifest(m: Manifest, path: str | Path) -> Path:
    file_path = Path(path)
    try:
        file_path.parent.mkdir(parents=True, exist_ok=True)
        file_path.write_text(manifest_to_csv(m), encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot write manifest: {exc.strerror}", path=file_path) from exc
    return file_path


def read_manifest(path: str | Path) -> Manifest:
    file_path = Path(path)
    try:
        text = file_path.read_text(encoding="utf-8-sig")
    except OSError as exc:
        raise DataError(f"cannot read manifest: {exc.strerror}", path=file_path) from exc

    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != MANIFEST_HEADER:
        raise ManifestError(
            f"expected header {','.join(MANIFEST_HEADER)}, "
            f"got {','.join(reader.fieldnames or [])}",
            path=file_path,
        )

    rows: list[ManifestRow] = []
    for line, record in enumerate(reader, start=2):
        try:
            gesture = GestureClass.from_code(record["gesture"] or "")
            split = Split((record["split"] or "").strip())
            seed_text = (record["seed"] or "").strip()
            rows.append(
                ManifestRow(
                    path=(record["path"] or "").strip(),
                    gesture=gesture,
                    split=split,
                    subject=(record["subject"] or "").strip() or None,
                    seed=int(seed_text) if seed_text else None,
                )
            )
        except (UnknownGestureError, ValueError) as exc:
            raise ManifestError(f"line {line}: {exc}", path=file_path) from exc
    return Manifest(tuple(rows))


def class_histogram(m: Manifest, split: Split | None = None) -> dict[GestureClass, int]:
    """Rows per class in class order, zero-filled."""
    counts = Counter(row.gesture for row in m if split is None or row.split == split)
    return {gesture: counts.get(gesture, 0) for gesture in CLASS_ORDER}


def ingest(
    directory: str | Path,
    source: str | None = None,
    verify: bool = True,
    registry: Optional[CorpusRegistry] = None,
) -> IngestReport:
    """
    Build a manifest from a corpus on disk.

    The adapter is chosen by ``source`` or by probing the registered adapters.
    Unreadable clips become row-level errors; classes with no clips in a
    populated split become warnings. Unknown split or gesture folders raise.
    """
    from sonicgesture.core.registry import default_registry

    root = Path(directory)
    if not root.is_dir():
        raise DataError("corpus directory does not exist", path=root)
    registry = registry or default_registry()
    metadata = {"source": source, "verify": verify}
    adapter = registry.get(source) if source else registry.find_compatible(root, metadata)
    if adapter is None:
        raise DataError(
            f"no corpus adapter recognises this directory (source={source})", path=root
        )

    report = adapter.ingest(root, metadata)
    for split in Split:
        histogram = class_histogram(report.manifest, split)
        total = sum(histogram.values())
        if total == 0:
            continue
        logger.info(
            "%s: %d clips (%s)",
            split.value,
            total,
            ", ".join(f"{g.code}={n}" for g, n in histogram.items()),
        )
        for gesture, count in histogram.items():
            if count == 0:
                message = f"class {gesture.code} has no clips in split '{split.value}'"
                report.warnings.append(message)
                logger.warning(message)
    for error in report.errors:
        logger.warning("skipped clip: %s", error)
    return report


def copy_source(path: str) -> str | None:
    """Manifest path of the clip that ``path`` is an ``_aug<k>`` copy of, else None."""
    relative = Path(path)
    match = _COPY_STEM.match(relative.stem)
    if match is None:
        return None
    return relative.with_name(f"{match['stem']}{relative.suffix}").as_posix()


def stratified_split(m: Manifest, val_fraction: float, seed: int) -> Manifest:
    """
    Relabel round(n_c * val_fraction) original training rows of each class c as validation.

    Rows of each class are ordered by path, then permuted with a generator
    derived from (seed, class index), so the assignment depends only on the
    manifest contents and the seed. Augmented copies are never chosen; copies
    of a clip that moves to validation are dropped from the result.
    """
    if not 0.0 <= val_fraction < 1.0:
        raise ValueError(f"val_fraction must lie in [0, 1), got {val_fraction}")
    if val_fraction == 0.0:
        return m

    chosen: set[str] = set()
    for gesture in CLASS_ORDER:
        candidates = [
            row
            for row in m
            if row.gesture == gesture and row.split == Split.TRAIN and copy_source(row.path) is None
        ]
        n_val = int(math.floor(len(candidates) * val_fraction + 0.5))
        if n_val == 0:
            continue
        order = rng_for(seed, "split", gesture.index).permutation(len(candidates))
        chosen.update(candidates[i].path for i in order[:n_val])

    relabelled: list[ManifestRow] = []
    dropped = 0
    for r in m:
        if r.path in chosen:
            relabelled.append(ManifestRow(r.path, r.gesture, Split.VAL, r.subject, r.seed))
        elif r.split == Split.TRAIN and copy_source(r.path) in chosen:
            dropped += 1
        else:
            relabelled.append(r)
    if dropped:
        logger.info("left out %d augmented copies of validation clips", dropped)
    return Manifest(tuple(relabelled))


class ImageCache:
    """
    On-disk ``.npz`` store of per-clip channel images.

    Keys hash the WAV bytes together with the DSP fingerprint and any raw-audio
    injection settings, so a hit always reproduces a fresh computation exactly.
    """

    def __init__(self, directory: str | Path) -> None:
        self.directory = Path(directory)
        self.hits = 0
        self.misses = 0
        self._lock = threading.Lock()

    @staticmethod
    def key(
        wav_bytes: bytes, cfg: PipelineConfig, injection: NoiseInjectionParams | None = None
    ) -> str:
        digest = hashlib.sha256(wav_bytes)
        digest.update(cfg.fingerprint().encode("ascii"))
        if injection is not None and injection.alpha > 0:
            digest.update(injection.model_dump_json().encode("utf-8"))
        return digest.hexdigest()

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.npz"

    def load(self, key: str) -> ChannelImages | None:
        path = self._path(key)
        if not path.exists():
            with self._lock:
                self.misses += 1
            return None
        try:
            with np.load(path) as data:
                images = ChannelImages(
                    top=SpectrogramImage(data["top"]),
                    bottom=SpectrogramImage(data["bottom"]),
                    mix=SpectrogramImage(data["mix"]),
                )
        except (OSError, KeyError, ValueError) as exc:
            logger.warning("ignoring unreadable cache entry %s: %s", path, exc)
            with self._lock:
                self.misses += 1
            return None
        with self._lock:
            self.hits += 1
        logger.debug("cache hit %s", key[:12])
        return images

    def store(self, key: str, images: ChannelImages) -> Path:
        path = self._path(key)
        temporary = path.with_suffix(f".{os.getpid()}.{threading.get_ident()}.tmp")
        try:
            self.directory.mkdir(parents=True, exist_ok=True)
            with temporary.open("wb") as handle:
                np.savez(
                    handle,
                    top=images.top.pixels,
                    bottom=images.bottom.pixels,
                    mix=images.mix.pixels,
                )
            temporary.replace(path)
        except OSError as exc:
            raise DataError(f"cannot write cache entry: {exc.strerror}", path=path) from exc
        return path


def _read_clip(clip_path: Path) -> bytes:
    try:
        return clip_path.read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read clip: {exc.strerror}", path=clip_path) from exc


def _injection_pipeline(
    cfg: PipelineConfig, injection: NoiseInjectionParams | None
) -> ClipPipeline:
    if injection is None or injection.alpha == 0.0:
        return ClipPipeline(cfg)
    return ClipPipeline(cfg, waveform_augmenters=[NoiseInjector(injection.alpha)])


def clip_images(
    clip_path: str | Path,
    cfg: PipelineConfig | None = None,
    injection: NoiseInjectionParams | None = None,
    cache: ImageCache | None = None,
) -> ChannelImages:
    """Top, bottom and mixdown images for one clip, via the cache when given."""
    cfg = cfg or PipelineConfig()
    path = Path(clip_path)
    data = _read_clip(path)

    key = ImageCache.key(data, cfg, injection) if cache else ""
    if cache:
        cached = cache.load(key)
        if cached is not None:
            return cached

    stereo: StereoWaveform = wav_from_bytes(data, source=path)
    if stereo.duration_s < cfg.crop.t_hi:
        raise ClipTooShortError(
            f"clip lasts {stereo.duration_s:.3f} s but the crop window ends at {cfg.crop.t_hi} s",
            path=path,
        )
    seed = 0
    if injection is not None:
        clip_index = int(hashlib.sha256(data).hexdigest()[:8], 16)
        seed = derive_seed(injection.seed, "augment", clip_index)
    images = _injection_pipeline(cfg, injection).images(stereo, seed)

    if cache:
        cache.store(key, images)
    return images


def assemble(
    clip_path: str | Path,
    mode: FusionMode,
    cfg: PipelineConfig | None = None,
    injection: NoiseInjectionParams | None = None,
    cache: ImageCache | None = None,
) -> ModelInput:
    """
    Read a stereo clip and pack its images for ``mode``.

    Raw-audio injection, when enabled, is seeded from the clip bytes so the
    result stays a pure function of (file bytes, configs).
    """
    return pack_model_input(clip_images(clip_path, cfg, injection, cache), mode)


def assemble_split(
    manifest: Manifest,
    root: str | Path,
    mode: FusionMode,
    cfg: PipelineConfig | None = None,
    injection: NoiseInjectionParams | None = None,
    cache: ImageCache | None = None,
    workers: int = 1,
) -> tuple[tuple[np.ndarray, ...], np.ndarray]:
    """
    Assemble every row into batched arrays plus integer labels.

    Returns one (N, C, 100, 100) array per model input tensor, in manifest order.
    """
    if len(manifest) == 0:
        raise DataError("cannot assemble an empty manifest")
    base = Path(root)

    def build(row: ManifestRow) -> ModelInput:
        return assemble(base / row.path, mode, cfg, injection, cache)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            inputs = list(pool.map(build, manifest.rows))
    else:
        inputs = [build(row) for row in manifest.rows]

    arrays = tuple(
        np.stack([item.tensors[t] for item in inputs]) for t in range(len(inputs[0].tensors))
    )
    labels = np.array([row.gesture.index for row in manifest.rows], dtype=np.int64)
    return arrays, labels


def _augment_example(
    tensors: Sequence[np.ndarray], policy: AugmentationPolicy, seed: int
) -> tuple[np.ndarray, ...]:
    noise = GaussianImageNoise(policy.gaussian_mean, policy.gaussian_variance)
    offset = draw_width_shift(policy.max_shift_fraction, derive_seed(seed, "augment", 0))
    out: list[np.ndarray] = []
    plane = 0
    for tensor in tensors:
        channels = []
        for channel in tensor:
            plane += 1
            noisy = noise.augment(SpectrogramImage(channel), derive_seed(seed, "augment", plane))
            channels.append(shift_columns(noisy.pixels, offset))
        out.append(np.stack(channels))
    return tuple(out)


def augment_batch(
    inputs: tuple[np.ndarray, ...], labels: np.ndarray, policy: AugmentationPolicy, seed: int
) -> tuple[tuple[np.ndarray, ...], np.ndarray]:
    """Append ``policy.copies`` augmented copies of every example after the originals."""
    if policy.copies == 0:
        return inputs, labels
    n = labels.shape[0]
    extra: list[tuple[np.ndarray, ...]] = []
    for copy in range(1, policy.copies + 1):
        for i in range(n):
            example_seed = derive_seed(seed, "augment", copy * n + i)
            extra.append(_augment_example([t[i] for t in inputs], policy, example_seed))
    augmented = tuple(
        np.concatenate([inputs[t], np.stack([e[t] for e in extra])]) for t in range(len(inputs))
    )
    return augmented, np.concatenate([labels] + [labels] * policy.copies)


def write_augmented_copies(
    manifest: Manifest,
    root: str | Path,
    alpha: float,
    copies: int,
    seed: int,
) -> Manifest:
    """
    Write ``copies`` noise-injected versions of every training clip next to the original.

    Copies land at ``<dir>/<stem>_aug<k>.wav`` and the returned manifest holds the
    original rows plus one training row per copy, with gesture and subject kept.
    Existing copies are never used as sources, and copies the manifest already
    lists are skipped, so running this again with the same arguments adds nothing.
    """
    if copies < 1:
        raise ValueError(f"copies must be >= 1, got {copies}")
    base = Path(root)
    injector = NoiseInjector(alpha)
    listed = {row.path for row in manifest}
    originals = [
        row for row in manifest if row.split == Split.TRAIN and copy_source(row.path) is None
    ]

    planned: list[tuple[int, int, ManifestRow]] = []
    for index, row in enumerate(originals):
        relative = Path(row.path)
        for copy in range(1, copies + 1):
            target = relative.with_name(f"{relative.stem}_aug{copy}{relative.suffix}").as_posix()
            if target not in listed:
                planned.append((index, copy, row))

    added: list[ManifestRow] = []
    for index, copy, row in planned:
        source = base / row.path
        stereo = wav_from_bytes(_read_clip(source), source=source)
        relative = Path(row.path)
        copy_seed = derive_seed(seed, "augment", copy * len(originals) + index)
        top = injector.augment(stereo.top, derive_seed(copy_seed, "augment", 0))
        bottom = injector.augment(stereo.bottom, derive_seed(copy_seed, "augment", 1))
        target = relative.with_name(f"{relative.stem}_aug{copy}{relative.suffix}")
        wav_write(StereoWaveform(top=top, bottom=bottom), base / target)
        added.append(
            ManifestRow(
                path=target.as_posix(),
                gesture=row.gesture,
                split=Split.TRAIN,
                subject=row.subject,
                seed=copy_seed,
            )
        )
    logger.info(
        "wrote %d augmented clips for %d original training rows (%d already listed)",
        len(added),
        len(originals),
        len(originals) * copies - len(planned),
    )
    return manifest.extended(added)
