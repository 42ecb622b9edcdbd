"""Supervised fine-tuning on exported reasoning-revising prompts.

Consumes the engine's training JSONL unchanged and trains a small
character-level seq2seq model to emit polarity label words.
"""
from .data import FINETUNE_SCHEMA, TrainingExample, load_training_set, split_examples
from .errors import (
    BadCheckpointError,
    ConfigError,
    ResourceError,
    SchemaMismatchError,
    TrainerError,
)
from .labels import LABEL_WORDS, last_label_word
from .model import PRESETS, CharVocab, ModelPreset, Seq2SeqGRU, resolve_preset
from .training import (
    CHECKPOINT_SCHEMA,
    Predictor,
    TrainerConfig,
    TrainResult,
    load_checkpoint,
    predict,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "BadCheckpointError",
    "CHECKPOINT_SCHEMA",
    "CharVocab",
    "ConfigError",
    "FINETUNE_SCHEMA",
    "LABEL_WORDS",
    "ModelPreset",
    "PRESETS",
    "Predictor",
    "ResourceError",
    "SchemaMismatchError",
    "Seq2SeqGRU",
    "TrainerConfig",
    "TrainerError",
    "TrainingExample",
    "TrainResult",
    "last_label_word",
    "load_checkpoint",
    "load_training_set",
    "predict",
    "resolve_preset",
    "split_examples",
    "train",
]
