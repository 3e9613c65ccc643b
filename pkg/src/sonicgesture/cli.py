"""Command-line interface: tone generation, simulation, preprocessing, training, evaluation."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Sequence

from pydantic import ValidationError

from sonicgesture.core.audio import generate_cw, promote_mono
from sonicgesture.core.catalog import GestureCatalog
from sonicgesture.core.config import CwConfig, RunConfig, load_run_config
from sonicgesture.core.dataset import (
    MANIFEST_FILENAME,
    ImageCache,
    class_histogram,
    clip_images,
    ingest,
    write_augmented_copies,
    write_manifest,
)
from sonicgesture.core.doppler import synth_dataset
from sonicgesture.core.dsp import write_pgm
from sonicgesture.core.errors import DataError, NumericalError, ShapeError
from sonicgesture.core.models import FusionMode, Manifest, Split
from sonicgesture.core.wav import wav_write
from sonicgesture.nn.checkpoint import load_checkpoint, save_checkpoint
from sonicgesture.nn.fusion import build_model
from sonicgesture.nn.train import evaluate, train, write_history

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

LOG_LEVEL_ENV = "SONICGESTURE_LOG_LEVEL"
CACHE_DIRNAME = ".cache"

REPORT_ROWS = (
    ("single", "Original CNN"),
    ("xception", None),
    ("late", "Late Fusion"),
    ("early", "Early Fusion"),
)
CONFUSION_CORNER = "true/pred"


def configure_logging(log_file: str | None = None) -> None:
    """Stderr handler without timestamps; the optional log file is the only timestamped sink."""
    root = logging.getLogger("sonicgesture")
    for handler in [h for h in root.handlers if getattr(h, "_sonicgesture", False)]:
        root.removeHandler(handler)
        handler.close()

    level_name = os.environ.get(LOG_LEVEL_ENV, "WARNING").upper()
    stderr_level = logging.getLevelName(level_name)
    if not isinstance(stderr_level, int):
        stderr_level = logging.WARNING
    console = logging.StreamHandler(sys.stderr)
    console.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    console.setLevel(stderr_level)
    setattr(console, "_sonicgesture", True)
    root.addHandler(console)
    root.setLevel(stderr_level)

    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_file, encoding="utf-8")
        file_handler.setFormatter(
            logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s")
        )
        file_handler.setLevel(logging.INFO)
        setattr(file_handler, "_sonicgesture", True)
        root.addHandler(file_handler)
        root.setLevel(min(stderr_level, logging.INFO))


def _common_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", help="YAML run config; explicit flags override it")
    parent.add_argument("--seed", type=int, help="Global seed fanned out to every stage")
    parent.add_argument("--log-file", help="Append timestamped INFO logs to this file")
    return parent


def _dsp_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    group = parent.add_argument_group("signal processing")
    group.add_argument("--n-fft", type=int)
    group.add_argument("--hop", type=int)
    group.add_argument("--window", choices=["hann", "rect"])
    group.add_argument("--f-lo", type=float, help="Crop band lower edge (Hz)")
    group.add_argument("--f-hi", type=float, help="Crop band upper edge (Hz)")
    group.add_argument("--t-lo", type=float, help="Crop window start (s)")
    group.add_argument("--t-hi", type=float, help="Crop window end (s)")
    group.add_argument("--cache", help="Image cache directory (default <corpus>/.cache)")
    group.add_argument("--no-cache", action="store_true", help="Recompute every image")
    group.add_argument("--workers", type=int, default=1)
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sonicgesture")
    subparsers = parser.add_subparsers(dest="command", required=True)
    common = _common_parent()
    dsp = _dsp_parent()

    tone = subparsers.add_parser("gen-tone", parents=[common], help="Write a CW tone WAV")
    tone.add_argument("--freq", type=float, help="Tone frequency (Hz)")
    tone.add_argument("--dur", type=float, help="Duration (s)")
    tone.add_argument("--amplitude", type=float)
    tone.add_argument("--sample-rate", type=int)
    tone.add_argument("--out", required=True)

    sim = subparsers.add_parser("simulate", parents=[common], help="Synthesise a gesture corpus")
    sim.add_argument("--per-class", type=int, required=True, help="Training clips per class")
    sim.add_argument("--test-per-class", type=int, default=0)
    sim.add_argument("--out", required=True, help="Corpus root directory")
    sim.add_argument("--ambient-fraction", type=float)
    sim.add_argument("--echo-ratio", type=float)
    sim.add_argument("--noise-fraction", type=float)
    sim.add_argument("--workers", type=int, default=1)

    prep = subparsers.add_parser(
        "preprocess", parents=[common, dsp], help="Render PGM images and fill the cache"
    )
    prep.add_argument("corpus")
    prep.add_argument("--out", required=True, help="Directory for PGM images")
    prep.add_argument("--split", choices=[s.value for s in Split])
    prep.add_argument("--inject", action="store_true", help="Apply raw-audio noise injection")
    prep.add_argument("--alpha", type=float, help="Injection bound as a fraction of peak")

    aug = subparsers.add_parser(
        "augment", parents=[common], help="Write noise-injected copies of training clips"
    )
    aug.add_argument("corpus")
    aug.add_argument("--copies", type=int, default=1)
    aug.add_argument("--alpha", type=float)

    trn = subparsers.add_parser("train", parents=[common, dsp], help="Train a fusion model")
    trn.add_argument("corpus")
    trn.add_argument("--mode", required=True, choices=[m.value for m in FusionMode])
    trn.add_argument("--out", required=True, help="Checkpoint path")
    trn.add_argument("--history", help="History CSV (default <out>.history.csv)")
    trn.add_argument("--epochs", type=int)
    trn.add_argument("--lr", type=float)
    trn.add_argument("--batch-size", type=int)
    trn.add_argument("--val-fraction", type=float)
    trn.add_argument("--copies", type=int, help="Augmented copies per training image")
    trn.add_argument("--dtype", choices=["float64", "float32"])

    ev = subparsers.add_parser("eval", parents=[common, dsp], help="Evaluate a checkpoint")
    ev.add_argument("corpus")
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--mode", choices=[m.value for m in FusionMode])
    ev.add_argument("--split", default=Split.TEST.value, choices=[s.value for s in Split])
    ev.add_argument("--out", required=True, help="Metrics JSON path")

    rep = subparsers.add_parser("report", parents=[common], help="Tabulate eval JSON files")
    rep.add_argument("metrics", nargs="+")
    rep.add_argument("--out", help="Write the table here instead of stdout")
    return parser


def _set(data: dict[str, Any], dotted: str, value: Any) -> None:
    if value is None:
        return
    *parents, leaf = dotted.split(".")
    node = data
    for key in parents:
        node = node.setdefault(key, {})
    node[leaf] = value


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Config file (or defaults), then explicit flags, then the global seed fan-out."""
    base = load_run_config(args.config) if getattr(args, "config", None) else RunConfig()
    data = base.model_dump()
    flags = {
        "pipeline.stft.n_fft": "n_fft",
        "pipeline.stft.hop": "hop",
        "pipeline.stft.window": "window",
        "pipeline.crop.f_lo": "f_lo",
        "pipeline.crop.f_hi": "f_hi",
        "pipeline.crop.t_lo": "t_lo",
        "pipeline.crop.t_hi": "t_hi",
        "sim.ambient_fraction": "ambient_fraction",
        "sim.echo_ratio": "echo_ratio",
        "sim.noise_fraction": "noise_fraction",
        "injection.alpha": "alpha",
        "train.epochs": "epochs",
        "train.learning_rate": "lr",
        "train.batch_size": "batch_size",
        "train.val_fraction": "val_fraction",
        "train.dtype": "dtype",
    }
    for dotted, attribute in flags.items():
        _set(data, dotted, getattr(args, attribute, None))
    if args.command == "train":
        _set(data, "train.augmentation.copies", args.copies)
    _set(data, "seed", getattr(args, "seed", None))
    for stage in ("sim.seed", "injection.seed", "train.seed"):
        _set(data, stage, data["seed"])
    return RunConfig.model_validate(data)


def _image_cache(args: argparse.Namespace) -> ImageCache | None:
    if args.no_cache:
        return None
    return ImageCache(args.cache or Path(args.corpus) / CACHE_DIRNAME)


def _load_manifest(corpus: str) -> Manifest:
    report = ingest(corpus)
    for warning in report.warnings:
        logger.info(warning)
    return report.manifest


def _write_json(path: str | Path, payload: dict[str, Any]) -> Path:
    file_path = Path(path)
    try:
        file_path.parent.mkdir(parents=True, exist_ok=True)
        file_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot write JSON: {exc.strerror}", path=file_path) from exc
    return file_path


def _cmd_gen_tone(args: argparse.Namespace, cfg: RunConfig) -> int:
    updates = {
        "frequency_hz": args.freq,
        "duration_s": args.dur,
        "amplitude": args.amplitude,
        "sample_rate_hz": args.sample_rate,
    }
    data = cfg.sim.cw.model_dump()
    data.update({k: v for k, v in updates.items() if v is not None})
    tone = CwConfig.model_validate(data)
    wav_write(promote_mono(generate_cw(tone)), args.out)
    logger.info("wrote %.3f s %s Hz tone to %s", tone.duration_s, tone.frequency_hz, args.out)
    return EXIT_OK


def _cmd_simulate(args: argparse.Namespace, cfg: RunConfig) -> int:
    manifest = synth_dataset(
        args.per_class,
        cfg.sim,
        cfg.seed,
        args.out,
        test_per_class=args.test_per_class,
        workers=args.workers,
    )
    print(f"wrote {len(manifest)} clips to {args.out}")
    return EXIT_OK


def _cmd_preprocess(args: argparse.Namespace, cfg: RunConfig) -> int:
    manifest = _load_manifest(args.corpus)
    if args.split:
        manifest = manifest.split(Split(args.split))
    cache = _image_cache(args)
    injection = cfg.injection if args.inject else None
    out_dir = Path(args.out)
    for row in manifest:
        images = clip_images(Path(args.corpus) / row.path, cfg.pipeline, injection, cache)
        stem = Path(row.path).with_suffix("")
        for channel, image in zip(("top", "bottom", "mix"), images.as_tuple()):
            write_pgm(image, out_dir / f"{stem.as_posix()}_{channel}.pgm")
    if cache:
        logger.info("image cache: %d hits, %d misses", cache.hits, cache.misses)
    print(f"preprocessed {len(manifest)} clips into {out_dir}")
    return EXIT_OK


def _cmd_augment(args: argparse.Namespace, cfg: RunConfig) -> int:
    manifest = _load_manifest(args.corpus)
    extended = write_augmented_copies(
        manifest, args.corpus, cfg.injection.alpha, args.copies, cfg.seed
    )
    write_manifest(extended, Path(args.corpus) / MANIFEST_FILENAME)
    print(f"added {len(extended) - len(manifest)} augmented clips to {args.corpus}")
    return EXIT_OK


def _cmd_train(args: argparse.Namespace, cfg: RunConfig) -> int:
    mode = FusionMode(args.mode)
    manifest = _load_manifest(args.corpus)
    model = build_model(mode, cfg.seed)
    logger.info("%s model with %d parameters", mode.value, model.parameter_count())
    model, history = train(
        model,
        manifest,
        mode,
        cfg.train,
        args.corpus,
        pipeline=cfg.pipeline,
        cache=_image_cache(args),
        workers=args.workers,
    )
    metadata = {
        "mode": mode.value,
        "seed": cfg.seed,
        "epochs": cfg.train.epochs,
        "pipeline_fingerprint": cfg.pipeline.fingerprint(),
        "class_histogram": {
            g.code: n for g, n in class_histogram(manifest, Split.TRAIN).items()
        },
    }
    save_checkpoint(model, args.out, metadata)
    history_path = args.history or Path(args.out).with_suffix(".history.csv")
    write_history(history, history_path)
    print(f"saved {mode.value} checkpoint to {args.out}")
    return EXIT_OK


def _cmd_eval(args: argparse.Namespace, cfg: RunConfig) -> int:
    checkpoint = load_checkpoint(args.checkpoint)
    model = checkpoint.model
    if args.mode and FusionMode(args.mode) is not model.mode:
        raise DataError(
            f"checkpoint holds a {model.mode.value} model, not {args.mode}", path=args.checkpoint
        )
    fingerprint = checkpoint.metadata.get("pipeline_fingerprint")
    if fingerprint and fingerprint != cfg.pipeline.fingerprint():
        logger.warning("evaluating with DSP settings that differ from training")
    manifest = _load_manifest(args.corpus).split(Split(args.split))
    accuracy, matrix = evaluate(
        model,
        manifest,
        model.mode,
        args.corpus,
        pipeline=cfg.pipeline,
        cache=_image_cache(args),
        workers=args.workers,
    )
    payload = matrix.to_dict()
    payload.update({"mode": model.mode.value, "split": args.split, "n": matrix.total})
    _write_json(args.out, payload)
    print(f"{model.mode.value} accuracy on {args.split}: {accuracy * 100:.2f}%")
    return EXIT_OK


def render_report(results: Sequence[dict[str, Any]], catalog: GestureCatalog) -> str:
    """Accuracy table over fusion modes, published figures in their own column."""
    by_mode = {str(r["mode"]): r for r in results}
    lines = [f"{'Model':<24}{'Accuracy (%)':>14}{'Reference (%)':>16}", "-" * 54]
    for key, local_name in REPORT_ROWS:
        reference = catalog.references.get(key)
        name = local_name or (reference.name if reference else key)
        local = by_mode.get(key)
        local_text = f"{local['accuracy'] * 100:.2f}" if local else "-"
        reference_text = f"{reference.accuracy:.2f}" if reference else "-"
        lines.append(f"{name:<24}{local_text:>14}{reference_text:>16}")
    lines.append("")
    lines.append("Reference: published accuracies on the physical recordings, not reproduced here.")

    for key, local_name in REPORT_ROWS:
        local = by_mode.get(key)
        if not local:
            continue
        lines.append("")
        lines.append(f"{local_name} ({local.get('split', 'test')}, n={local.get('n', '?')})")
        lines.append(f"  {'class':<18}{'precision':>10}{'recall':>10}{'support':>9}")
        for code in local["classes"]:
            lines.append(
                f"  {code:<18}{local['precision'][code]:>10.3f}"
                f"{local['recall'][code]:>10.3f}{local['support'][code]:>9d}"
            )
        lines.extend(render_confusion(local["classes"], local["confusion"]))
    return "\n".join(lines) + "\n"


def render_confusion(classes: Sequence[str], confusion: Sequence[Sequence[int]]) -> list[str]:
    """Confusion matrix block, true classes down the side and predictions across."""
    width = max([5] + [len(code) + 1 for code in classes])
    lines = ["", f"  {CONFUSION_CORNER:<12}" + "".join(f"{code:>{width}}" for code in classes)]
    for code, row in zip(classes, confusion):
        lines.append(f"  {code:<12}" + "".join(f"{int(count):>{width}d}" for count in row))
    return lines


def _cmd_report(args: argparse.Namespace, cfg: RunConfig) -> int:
    results = []
    for path in args.metrics:
        try:
            results.append(json.loads(Path(path).read_text(encoding="utf-8")))
        except OSError as exc:
            raise DataError(f"cannot read metrics: {exc.strerror}", path=path) from exc
        except json.JSONDecodeError as exc:
            raise DataError(f"invalid metrics JSON: {exc}", path=path) from exc
    table = render_report(results, GestureCatalog())
    if args.out:
        Path(args.out).write_text(table, encoding="utf-8")
    else:
        sys.stdout.write(table)
    return EXIT_OK


COMMANDS = {
    "gen-tone": _cmd_gen_tone,
    "simulate": _cmd_simulate,
    "preprocess": _cmd_preprocess,
    "augment": _cmd_augment,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_file)

    try:
        cfg = resolve_config(args)
    except ValidationError as exc:
        print(f"sonicgesture: invalid configuration:\n{exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"sonicgesture: {exc}", file=sys.stderr)
        return EXIT_DATA

    try:
        return COMMANDS[args.command](args, cfg)
    except NumericalError as exc:
        print(f"sonicgesture: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValidationError as exc:
        print(f"sonicgesture: invalid configuration:\n{exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ShapeError, OSError) as exc:
        print(f"sonicgesture: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main())
