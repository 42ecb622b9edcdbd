"""Command line: train on an exported file, predict with a checkpoint.

Exit codes follow the engine's convention: 0 success, 2 usage, 3 bad
config or data, 4 resource exhaustion.
"""
from __future__ import annotations

import argparse
import logging
import sys
from typing import Sequence

from .data import load_training_set
from .errors import BadCheckpointError, ConfigError, ResourceError, SchemaMismatchError
from .training import TrainerConfig, load_checkpoint, train

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_RESOURCE = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trihop-trainer",
        description="Fine-tune a small seq2seq model on exported reasoning-revising prompts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("train", help="train on an exported training JSONL")
    fit.add_argument("--data", required=True, help="training JSONL exported by the engine")
    fit.add_argument("--out-dir", required=True, help="checkpoint output directory")
    fit.add_argument("--preset", default="tiny-gru", help="model preset name")
    fit.add_argument("--epochs", type=int, default=3)
    fit.add_argument("--batch-size", type=int, default=8)
    fit.add_argument("--learning-rate", type=float, default=3e-3)
    fit.add_argument("--eval-fraction", type=float, default=0.1)
    fit.add_argument("--seed", type=int, default=13)
    fit.add_argument(
        "--steps", default="1,2,3",
        help="comma-separated record steps to train on (default: all, mixed)",
    )

    ask = sub.add_parser("predict", help="predict a label for one prompt")
    ask.add_argument("--checkpoint", required=True, help="checkpoint directory from train")
    ask.add_argument("--input", required=True, help="prompt text")
    return parser


def _parse_steps(raw: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in raw.split(","))
    except ValueError:
        raise ConfigError(f"--steps must be comma-separated integers, got {raw!r}") from None


def _cmd_train(args: argparse.Namespace) -> int:
    config = TrainerConfig(
        output_dir=args.out_dir,
        model_name=args.preset,
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        eval_fraction=args.eval_fraction,
        seed=args.seed,
        steps=_parse_steps(args.steps),
    )
    examples = load_training_set(args.data)
    result = train(config, examples)
    first, last = result.train_losses[0], result.train_losses[-1]
    print(f"trained {config.epochs} epochs on {len(examples)} records: "
          f"train_loss {first:.4f} -> {last:.4f}")
    print(f"checkpoint written to {result.checkpoint_dir}")
    return EXIT_OK


def _cmd_predict(args: argparse.Namespace) -> int:
    predictor = load_checkpoint(args.checkpoint)
    print(predictor.predict(args.input))
    return EXIT_OK


def dispatch(argv: Sequence[str]) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exit_:
        return int(exit_.code or 0)
    try:
        if args.command == "train":
            return _cmd_train(args)
        return _cmd_predict(args)
    except (SchemaMismatchError, ConfigError, BadCheckpointError, ValueError, OSError) as error:
        print(f"error: {error}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceError as error:
        print(f"error: {error}", file=sys.stderr)
        return EXIT_RESOURCE


def entrypoint() -> None:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    sys.exit(dispatch(sys.argv[1:]))
