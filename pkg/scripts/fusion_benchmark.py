"""Train and evaluate every fusion mode on one synthetic corpus.

Writes per-mode metrics JSON (the format `sonicgesture report` reads), the
rendered accuracy table, and a timing summary on stdout.
"""

from __future__ import annotations

import argparse
import json
import logging
import time
from pathlib import Path
from typing import Any

from sonicgesture.cli import render_report
from sonicgesture.core.catalog import GestureCatalog
from sonicgesture.core.config import SimConfig, TrainConfig
from sonicgesture.core.dataset import MANIFEST_FILENAME, ImageCache, read_manifest
from sonicgesture.core.doppler import synth_dataset
from sonicgesture.core.metrics import ConfusionMatrix
from sonicgesture.core.models import FusionMode, Manifest, Split
from sonicgesture.nn.fusion import build_model
from sonicgesture.nn.train import evaluate, train, write_history

UP, DOWN = 4, 5


def up_down_cross_errors(matrix: ConfusionMatrix) -> float:
    """Share of swipe_up/swipe_down test clips predicted as the other one."""
    rows = matrix.counts[[UP, DOWN]]
    total = int(rows.sum())
    crossed = int(matrix.counts[UP, DOWN] + matrix.counts[DOWN, UP])
    return crossed / total if total else 0.0


def load_or_simulate(
    corpus: Path, per_class: int, test_per_class: int, seed: int, workers: int
) -> Manifest:
    manifest_path = corpus / MANIFEST_FILENAME
    if manifest_path.exists():
        print(f"reusing corpus {corpus}")
        return read_manifest(manifest_path)
    return synth_dataset(
        per_class,
        SimConfig(),
        seed=seed,
        out_dir=corpus,
        test_per_class=test_per_class,
        workers=workers,
    )


def run_mode(
    mode: FusionMode,
    manifest: Manifest,
    corpus: Path,
    cfg: TrainConfig,
    cache: ImageCache,
    workers: int,
    out_dir: Path,
) -> dict[str, Any]:
    start = time.perf_counter()
    model, history = train(
        build_model(mode, cfg.seed), manifest, mode, cfg, corpus, cache=cache, workers=workers
    )
    train_sec = time.perf_counter() - start
    write_history(history, out_dir / f"{mode.value}.history.csv")

    test_rows = manifest.split(Split.TEST)
    accuracy, matrix = evaluate(model, test_rows, mode, corpus, cache=cache, workers=workers)
    payload = matrix.to_dict()
    payload.update({"mode": mode.value, "split": Split.TEST.value, "n": matrix.total})
    (out_dir / f"{mode.value}.metrics.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return {
        "mode": mode.value,
        "parameters": model.parameter_count(),
        "accuracy": round(accuracy, 4),
        "up_down_cross_errors": round(up_down_cross_errors(matrix), 4),
        "train_sec": round(train_sec, 1),
        "metrics": payload,
    }


def main() -> None:
    parser = argparse.ArgumentParser(description="Compare single, early and late fusion")
    parser.add_argument("--corpus", default="data/synthetic", help="Simulated here if absent")
    parser.add_argument("--out", default="data/benchmark", help="Output directory")
    parser.add_argument("--per-class", type=int, default=100)
    parser.add_argument("--test-per-class", type=int, default=30)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--epochs", type=int, default=15)
    parser.add_argument("--lr", type=float, default=0.01)
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--dtype", choices=["float32", "float64"], default="float32")
    parser.add_argument("--workers", type=int, default=4)
    parser.add_argument(
        "--modes",
        default="single,early,late",
        help="Comma-separated fusion modes to run",
    )
    parser.add_argument("--verbose", action="store_true", help="Log per-epoch progress")
    args = parser.parse_args()

    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    corpus = Path(args.corpus)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    start = time.perf_counter()
    manifest = load_or_simulate(
        corpus, args.per_class, args.test_per_class, args.seed, args.workers
    )
    simulate_sec = time.perf_counter() - start

    cfg = TrainConfig(
        learning_rate=args.lr,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
        dtype=args.dtype,
    )
    cache = ImageCache(corpus / ".cache")
    modes = [FusionMode(m.strip()) for m in args.modes.split(",") if m.strip()]
    results = [run_mode(m, manifest, corpus, cfg, cache, args.workers, out_dir) for m in modes]

    table = render_report([r["metrics"] for r in results], GestureCatalog())
    (out_dir / "report.txt").write_text(table, encoding="utf-8")
    print(table)

    summary = {
        "corpus": str(corpus),
        "rows": len(manifest),
        "seed": args.seed,
        "epochs": args.epochs,
        "timing": {"simulate_sec": round(simulate_sec, 1)},
        "cache": {"hits": cache.hits, "misses": cache.misses},
        "modes": [{k: v for k, v in r.items() if k != "metrics"} for r in results],
    }
    print(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main()
