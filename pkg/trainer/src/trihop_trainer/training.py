"""Training loop, checkpointing, and greedy-decode prediction.

Deterministic by construction: single process, one torch thread, every
shuffle drawn from the config seed. Two runs with the same config and
examples produce the same loss history and the same weights.
"""
from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path

import torch
from torch import nn

from .data import STEPS, TrainingExample, split_examples
from .errors import BadCheckpointError, ConfigError, ResourceError
from .labels import LABEL_WORDS, last_label_word
from .model import BOS, EOS, PAD, CharVocab, Seq2SeqGRU, resolve_preset

logger = logging.getLogger(__name__)

CHECKPOINT_SCHEMA = "trihop-trainer/checkpoint/v1"
CHECKPOINT_FILE = "model.pt"
METRICS_FILE = "metrics.json"
MIN_EXAMPLES = 10
FALLBACK_LABEL = "neutral"


@dataclass(frozen=True)
class TrainerConfig:
    output_dir: str
    model_name: str = "tiny-gru"
    epochs: int = 3
    batch_size: int = 8
    learning_rate: float = 3e-3
    eval_fraction: float = 0.1
    seed: int = 13
    # which exported record kinds enter the (single, shuffled) training
    # stream; all three steps are mixed together by default
    steps: tuple[int, ...] = STEPS

    def validate(self) -> None:
        if not self.output_dir:
            raise ConfigError("output_dir must be non-empty")
        resolve_preset(self.model_name)
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not 0 < self.eval_fraction < 1:
            raise ConfigError(f"eval_fraction must be in (0, 1), got {self.eval_fraction}")
        bad = [s for s in self.steps if s not in STEPS]
        if bad or not self.steps:
            raise ConfigError(f"steps must be a non-empty subset of {STEPS}, got {self.steps}")


@dataclass
class TrainResult:
    checkpoint_dir: Path
    train_losses: list[float] = field(default_factory=list)
    eval_losses: list[float] = field(default_factory=list)


def _pad_batch(sequences: list[list[int]]) -> tuple[torch.Tensor, torch.Tensor]:
    lengths = torch.tensor([len(s) for s in sequences], dtype=torch.long)
    width = int(lengths.max())
    padded = torch.full((len(sequences), width), PAD, dtype=torch.long)
    for row, seq in enumerate(sequences):
        padded[row, : len(seq)] = torch.tensor(seq, dtype=torch.long)
    return padded, lengths


def _batch_loss(
    model: Seq2SeqGRU, batch: list[tuple[list[int], list[int]]], loss_fn: nn.Module
) -> tuple[torch.Tensor, int]:
    inputs, lengths = _pad_batch([source for source, _ in batch])
    decoder_in, _ = _pad_batch([[BOS] + target for _, target in batch])
    decoder_out, _ = _pad_batch([target + [EOS] for _, target in batch])
    logits = model(inputs, lengths, decoder_in)
    loss = loss_fn(logits.movedim(1, 2), decoder_out)
    return loss, int((decoder_out != PAD).sum())


def _epoch_loss(model, pairs, loss_fn, batch_size, optimizer=None) -> float:
    total, tokens = 0.0, 0
    for start in range(0, len(pairs), batch_size):
        batch = pairs[start : start + batch_size]
        loss, n_tokens = _batch_loss(model, batch, loss_fn)
        if optimizer is not None:
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
        total += float(loss.detach())
        tokens += n_tokens
    return total / tokens if tokens else 0.0


def train(config: TrainerConfig, examples: list[TrainingExample]) -> TrainResult:
    """Fit the configured preset and write checkpoint + metrics.

    Saves ``model.pt`` plus ``metrics.json`` (epoch number to mean
    train loss per target token) into ``config.output_dir``. Held-out
    loss is logged and returned but not persisted.
    """
    config.validate()
    preset = resolve_preset(config.model_name)
    stream = [e for e in examples if e.step in config.steps]
    if len(stream) < MIN_EXAMPLES:
        raise ConfigError(
            f"need at least {MIN_EXAMPLES} training examples after step filtering, got {len(stream)}"
        )
    train_set, held_out = split_examples(stream, config.eval_fraction, config.seed)

    torch.manual_seed(config.seed)
    torch.set_num_threads(1)
    vocab = CharVocab.from_texts([e.input for e in stream] + list(LABEL_WORDS))
    model = Seq2SeqGRU(vocab.size, preset)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    loss_fn = nn.CrossEntropyLoss(ignore_index=PAD, reduction="sum")

    def as_pairs(rows: list[TrainingExample]) -> list[tuple[list[int], list[int]]]:
        return [(vocab.encode(e.input), vocab.encode(e.target_label)) for e in rows]

    train_pairs = as_pairs(train_set)
    held_pairs = as_pairs(held_out)
    order = random.Random(config.seed)

    result = TrainResult(checkpoint_dir=Path(config.output_dir))
    try:
        for epoch in range(1, config.epochs + 1):
            order.shuffle(train_pairs)
            model.train()
            train_loss = _epoch_loss(model, train_pairs, loss_fn, config.batch_size, optimizer)
            model.eval()
            with torch.no_grad():
                eval_loss = _epoch_loss(model, held_pairs, loss_fn, config.batch_size)
            result.train_losses.append(train_loss)
            result.eval_losses.append(eval_loss)
            logger.info(
                "epoch %d/%d: train_loss=%.4f eval_loss=%.4f",
                epoch, config.epochs, train_loss, eval_loss,
            )
    except RuntimeError as error:
        if "memory" in str(error).lower():
            raise ResourceError(f"{error} (while training {config})") from error
        raise

    result.checkpoint_dir.mkdir(parents=True, exist_ok=True)
    torch.save(
        {
            "schema": CHECKPOINT_SCHEMA,
            "model_name": config.model_name,
            "vocab_chars": vocab.chars,
            "state_dict": model.state_dict(),
        },
        result.checkpoint_dir / CHECKPOINT_FILE,
    )
    metrics = {str(epoch): loss for epoch, loss in enumerate(result.train_losses, start=1)}
    (result.checkpoint_dir / METRICS_FILE).write_text(
        json.dumps(metrics, indent=2) + "\n", encoding="utf-8"
    )
    return result


class Predictor:
    """A loaded checkpoint that turns prompts into label words."""

    def __init__(self, model: Seq2SeqGRU, vocab: CharVocab):
        self.model = model
        self.vocab = vocab

    def generate(self, text: str) -> str:
        """Greedy-decode the raw output text for ``text``."""
        if not text or not text.strip():
            raise ValueError("input must be non-empty")
        self.model.eval()
        return self.vocab.decode(self.model.greedy(self.vocab.encode(text)))

    def predict(self, text: str) -> str:
        """Extract the label from the generated text.

        The same last-occurrence rule the engine applies to its own
        generations; an output with no label word falls back to neutral,
        with a warning, rather than failing the batch.
        """
        generated = self.generate(text)
        label = last_label_word(generated)
        if label is None:
            logger.warning("no label word in generated text %r; using %r", generated, FALLBACK_LABEL)
            return FALLBACK_LABEL
        return label


def load_checkpoint(checkpoint: str | Path) -> Predictor:
    """Load a checkpoint directory (or its model.pt directly)."""
    path = Path(checkpoint)
    if path.is_dir():
        path = path / CHECKPOINT_FILE
    if not path.is_file():
        raise BadCheckpointError(f"no checkpoint at {path}")
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as error:
        raise BadCheckpointError(f"{path} is not a readable checkpoint: {error}") from error
    if not isinstance(payload, dict) or payload.get("schema") != CHECKPOINT_SCHEMA:
        raise BadCheckpointError(f"{path} does not contain a {CHECKPOINT_SCHEMA!r} payload")
    try:
        vocab = CharVocab(payload["vocab_chars"])
        model = Seq2SeqGRU(vocab.size, resolve_preset(payload["model_name"]))
        model.load_state_dict(payload["state_dict"])
    except (KeyError, TypeError, RuntimeError, ConfigError) as error:
        raise BadCheckpointError(f"{path} is malformed: {error}") from error
    model.eval()
    return Predictor(model, vocab)


def predict(checkpoint: str | Path | Predictor, text: str) -> str:
    """One-shot convenience wrapper over load_checkpoint + predict."""
    predictor = checkpoint if isinstance(checkpoint, Predictor) else load_checkpoint(checkpoint)
    return predictor.predict(text)
