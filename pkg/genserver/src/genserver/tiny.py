"""Build a tiny self-contained checkpoint for tests and local dev.

A two-layer GPT-2 with a word-level tokenizer over a fixed vocabulary,
randomly initialized from a pinned seed and saved in the standard
transformers layout: loadable by the server with no network access.
"""

from __future__ import annotations

from pathlib import Path

import torch
from tokenizers import Tokenizer, models, pre_tokenizers
from transformers import GPT2Config, GPT2LMHeadModel, PreTrainedTokenizerFast

_WORDS = [
    "the", "a", "of", "and", "in", "to", "is", "was", "for", "on",
    "oil", "gas", "price", "prices", "barrel", "industry", "history",
    "production", "energy", "market", "united", "states", "world",
    "year", "years", "decade", "decline", "boom", "revolution",
    "producer", "consumer", "export", "import", "supply", "demand",
    "federal", "reserve", "dollar", "percent", "million", "day",
    "medical", "patient", "treatment", "study", "disease", "cell",
    "therapy", "clinical", "trial", "result", "data", "report",
    "government", "policy", "public", "search", "document", "query",
]


def make_tiny_model(out_dir: str | Path, seed: int = 0) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    vocab = {"<unk>": 0, "<eos>": 1}
    for word in _WORDS:
        vocab[word] = len(vocab)
    word_level = Tokenizer(models.WordLevel(vocab, unk_token="<unk>"))
    word_level.pre_tokenizer = pre_tokenizers.Whitespace()
    tokenizer = PreTrainedTokenizerFast(
        tokenizer_object=word_level,
        unk_token="<unk>",
        eos_token="<eos>",
        bos_token="<eos>",
        pad_token="<eos>",
    )

    torch.manual_seed(seed)
    config = GPT2Config(
        vocab_size=len(vocab),
        n_positions=256,
        n_embd=32,
        n_layer=2,
        n_head=2,
        bos_token_id=1,
        eos_token_id=1,
    )
    model = GPT2LMHeadModel(config)
    model.save_pretrained(out)
    tokenizer.save_pretrained(out)
    return out
