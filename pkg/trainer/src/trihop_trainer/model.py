"""Character-level GRU encoder-decoder, sized in named presets.

No pretrained weights and no hub downloads: the prediction task is
three single-word labels, so a model this small can be trained from
scratch on a laptop CPU in seconds. ``model_name`` in the trainer
config selects one of the presets below.
"""
from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

from .errors import ConfigError

PAD, BOS, EOS, UNK = 0, 1, 2, 3
SPECIALS = 4


@dataclass(frozen=True)
class ModelPreset:
    embed_dim: int
    hidden_dim: int


PRESETS = {
    "tiny-gru": ModelPreset(embed_dim=32, hidden_dim=96),
    "small-gru": ModelPreset(embed_dim=64, hidden_dim=192),
}


def resolve_preset(model_name: str) -> ModelPreset:
    preset = PRESETS.get(model_name)
    if preset is None:
        known = ", ".join(sorted(PRESETS))
        raise ConfigError(f"unknown model_name {model_name!r}; available presets: {known}")
    return preset


class CharVocab:
    """Bidirectional char/id mapping with four reserved ids."""

    def __init__(self, chars: str):
        self.chars = "".join(sorted(set(chars)))
        self._ids = {ch: SPECIALS + i for i, ch in enumerate(self.chars)}

    @classmethod
    def from_texts(cls, texts) -> "CharVocab":
        return cls("".join(texts))

    @property
    def size(self) -> int:
        return SPECIALS + len(self.chars)

    def encode(self, text: str) -> list[int]:
        return [self._ids.get(ch, UNK) for ch in text]

    def decode(self, ids) -> str:
        out = []
        for i in ids:
            if i == EOS:
                break
            if i >= SPECIALS:
                out.append(self.chars[i - SPECIALS])
        return "".join(out)


class Seq2SeqGRU(nn.Module):
    """Encoder GRU reads the prompt; decoder GRU emits the label text."""

    def __init__(self, vocab_size: int, preset: ModelPreset):
        super().__init__()
        self.embedding = nn.Embedding(vocab_size, preset.embed_dim, padding_idx=PAD)
        self.encoder = nn.GRU(preset.embed_dim, preset.hidden_dim, batch_first=True)
        self.decoder = nn.GRU(preset.embed_dim, preset.hidden_dim, batch_first=True)
        self.head = nn.Linear(preset.hidden_dim, vocab_size)

    def encode(self, inputs: torch.Tensor, lengths: torch.Tensor) -> torch.Tensor:
        packed = nn.utils.rnn.pack_padded_sequence(
            self.embedding(inputs), lengths.cpu(), batch_first=True, enforce_sorted=False
        )
        _, hidden = self.encoder(packed)
        return hidden

    def forward(
        self, inputs: torch.Tensor, lengths: torch.Tensor, decoder_in: torch.Tensor
    ) -> torch.Tensor:
        hidden = self.encode(inputs, lengths)
        outputs, _ = self.decoder(self.embedding(decoder_in), hidden)
        return self.head(outputs)

    @torch.no_grad()
    def greedy(self, input_ids: list[int], max_len: int = 16) -> list[int]:
        inputs = torch.tensor([input_ids], dtype=torch.long)
        lengths = torch.tensor([len(input_ids)], dtype=torch.long)
        hidden = self.encode(inputs, lengths)
        token = torch.tensor([[BOS]], dtype=torch.long)
        emitted: list[int] = []
        for _ in range(max_len):
            output, hidden = self.decoder(self.embedding(token), hidden)
            next_id = int(self.head(output[:, -1]).argmax(dim=-1))
            if next_id == EOS:
                break
            emitted.append(next_id)
            token = torch.tensor([[next_id]], dtype=torch.long)
        return emitted
