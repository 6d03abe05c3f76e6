"""Command line for transformer runs; flags mirror the TrainSpec fields."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import report as report_mod
from .data import read_corpus
from .spec import DEFAULT_ENCODERS, TrainSpec
from .train import run_grid


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hf-harness",
        description="Fine-tune encoders on the deletion-discussion corpus",
    )
    parser.add_argument("--corpus", required=True, nargs="+",
                        help="corpus JSONL file(s) from the builder")
    parser.add_argument("--task", choices=("stance", "policy", "joint"),
                        default="stance")
    parser.add_argument("--lang", default="en")
    parser.add_argument("--setup", default="single",
                        choices=("single", "multitask", "multilingual-single",
                                 "multilingual-multitask"))
    parser.add_argument("--encoder", default=None,
                        help="checkpoint id or tiny-<layers>x<hidden>")
    parser.add_argument("--lrs", type=float, nargs="+", default=[5e-4, 5e-5, 5e-6])
    parser.add_argument("--batch-size", type=int, default=8)
    parser.add_argument("--max-epochs", type=int, default=None)
    parser.add_argument("--patience", type=int, default=5)
    parser.add_argument("--freeze-depth", type=int, default=6)
    parser.add_argument("--ratio", type=int, nargs=2, default=[3, 1])
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--max-length", type=int, default=128)
    parser.add_argument("--multilingual-labels", action="store_true",
                        help="use superset ids as policy labels")
    parser.add_argument("--out", required=True, help="report output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    encoder = args.encoder or DEFAULT_ENCODERS.get(args.lang, DEFAULT_ENCODERS["en"])
    spec = TrainSpec(
        encoder_id=encoder,
        task=args.task,
        lang=args.lang,
        setup=args.setup,
        learning_rates=tuple(args.lrs),
        batch_size=args.batch_size,
        max_epochs=args.max_epochs,
        patience=args.patience,
        freeze_depth=args.freeze_depth,
        loss_ratio=tuple(args.ratio),
        seed=args.seed,
        max_length=args.max_length,
        multilingual_labels=args.multilingual_labels,
    )
    records = read_corpus(args.corpus)
    results, best = run_grid(spec, records)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = []
    for i, result in enumerate(results):
        for task, report in result.reports.items():
            name = f"report_{task}_{spec.lang}_{spec.setup}_lr{result.learning_rate:g}.json"
            report_mod.save_report(report, out_dir / name)
            if i == best:
                report_mod.save_report(report, out_dir / f"best_{task}_{spec.lang}.json")
        summary.append({
            "learning_rate": result.learning_rate,
            "dev_metric": result.dev_metric,
            "update_counts": result.update_counts,
            "best": i == best,
        })
    sys.stdout.write(json.dumps({"grid": summary, "out": str(out_dir)}, indent=2) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
