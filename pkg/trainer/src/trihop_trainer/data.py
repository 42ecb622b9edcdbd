"""Ingestion of the engine's exported training JSONL.

The file starts with a header line naming the schema, then one record
per line with exactly the fields input / target_label / instance_id /
step. Anything else is a schema mismatch, reported with file and line
number. Splitting happens by instance id, never by record, so the three
step-records of one instance can never straddle the train/eval line.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError, SchemaMismatchError
from .labels import LABEL_WORDS

FINETUNE_SCHEMA = "trihop/finetune/v1"
RECORD_FIELDS = ("input", "target_label", "instance_id", "step")
STEPS = (1, 2, 3)


@dataclass(frozen=True)
class TrainingExample:
    input: str
    target_label: str
    instance_id: str
    step: int


def _fail(path: Path, lineno: int, message: str) -> None:
    raise SchemaMismatchError(f"{path}:{lineno}: {message}")


def _parse_record(path: Path, lineno: int, obj: object) -> TrainingExample:
    if not isinstance(obj, dict):
        _fail(path, lineno, f"expected an object, got {type(obj).__name__}")
    missing = [f for f in RECORD_FIELDS if f not in obj]
    if missing:
        _fail(path, lineno, f"missing fields: {', '.join(missing)}")
    unknown = [f for f in obj if f not in RECORD_FIELDS]
    if unknown:
        _fail(path, lineno, f"unknown fields: {', '.join(unknown)}")
    text = obj["input"]
    if not isinstance(text, str) or not text.strip():
        _fail(path, lineno, "input must be a non-empty string")
    label = obj["target_label"]
    if label not in LABEL_WORDS:
        _fail(path, lineno, f"target_label must be one of {LABEL_WORDS}, got {label!r}")
    instance_id = obj["instance_id"]
    if not isinstance(instance_id, str) or not instance_id:
        _fail(path, lineno, "instance_id must be a non-empty string")
    step = obj["step"]
    if isinstance(step, bool) or step not in STEPS:
        _fail(path, lineno, f"step must be one of {STEPS}, got {step!r}")
    return TrainingExample(input=text, target_label=label, instance_id=instance_id, step=step)


def load_training_set(path: str | Path) -> list[TrainingExample]:
    """Read and validate an exported training file."""
    path = Path(path)
    with path.open(encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    if not lines:
        _fail(path, 1, "empty file, expected a schema header")

    def parse(lineno: int, line: str) -> object:
        try:
            return json.loads(line)
        except json.JSONDecodeError as error:
            _fail(path, lineno, f"not valid JSON: {error.msg}")

    header = parse(1, lines[0])
    if not isinstance(header, dict) or header.get("schema") != FINETUNE_SCHEMA:
        found = header.get("schema") if isinstance(header, dict) else header
        _fail(path, 1, f"expected schema {FINETUNE_SCHEMA!r}, found {found!r}")

    examples = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            _fail(path, lineno, "blank line inside the record section")
        examples.append(_parse_record(path, lineno, parse(lineno, line)))
    return examples


def split_examples(
    examples: list[TrainingExample], eval_fraction: float, seed: int
) -> tuple[list[TrainingExample], list[TrainingExample]]:
    """Deterministic train/eval split on whole instances.

    The shuffle is seeded, the eval side always gets at least one
    instance and never all of them, and record order within each side
    follows the original file.
    """
    if not 0 < eval_fraction < 1:
        raise ConfigError(f"eval_fraction must be in (0, 1), got {eval_fraction}")
    ids: list[str] = []
    for example in examples:
        if example.instance_id not in ids:
            ids.append(example.instance_id)
    if len(ids) < 2:
        raise ConfigError(f"need at least 2 instances to split, got {len(ids)}")
    shuffled = ids[:]
    random.Random(seed).shuffle(shuffled)
    n_eval = min(max(int(len(ids) * eval_fraction), 1), len(ids) - 1)
    eval_ids = set(shuffled[:n_eval])
    train = [e for e in examples if e.instance_id not in eval_ids]
    held_out = [e for e in examples if e.instance_id in eval_ids]
    return train, held_out
