"""Domain adaptation: fine-tune a causal LM on a directory of plain-text
documents (one file per document) and save a servable checkpoint.

The sample budget counts training sequences processed and is the stop
condition; the corpus is cycled if it is smaller than the budget. Our
defaults: block size 128 (capped by the model context), batch size 8,
AdamW at 5e-4 with no schedule.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import torch
from transformers import AutoModelForCausalLM, AutoTokenizer

log = logging.getLogger(__name__)

DEFAULT_SAMPLE_BUDGET = 250_000


@dataclass
class FinetuneResult:
    checkpoint_dir: Path
    samples_processed: int
    step_losses: list[float]


def _load_corpus_blocks(corpus_dir: Path, tokenizer, block_size: int) -> list[list[int]]:
    files = sorted(p for p in corpus_dir.iterdir() if p.is_file() and p.suffix == ".txt")
    if not files:
        raise ValueError(f"no .txt documents under {corpus_dir}")
    eos = tokenizer.eos_token_id
    stream: list[int] = []
    for path in files:
        ids = tokenizer(path.read_text(encoding="utf-8"))["input_ids"]
        stream.extend(ids)
        if eos is not None:
            stream.append(eos)
    blocks = [stream[i : i + block_size] for i in range(0, len(stream) - 1, block_size)]
    blocks = [b for b in blocks if len(b) >= 2]
    if not blocks:
        raise ValueError("corpus too small to form a single training block")
    return blocks


def finetune(
    corpus_dir: str | Path,
    base_model: str,
    out_dir: str | Path,
    sample_budget: int = DEFAULT_SAMPLE_BUDGET,
    batch_size: int = 8,
    learning_rate: float = 5e-4,
    block_size: int = 128,
    device: str = "cpu",
    log_every: int = 1,
) -> FinetuneResult:
    """Train until ``sample_budget`` sequences have been processed; a
    budget of 0 saves the base model unchanged."""
    corpus_dir = Path(corpus_dir)
    out = Path(out_dir)
    if sample_budget < 0:
        raise ValueError("sample_budget must be >= 0")

    tokenizer = AutoTokenizer.from_pretrained(base_model)
    model = AutoModelForCausalLM.from_pretrained(base_model)
    if tokenizer.pad_token_id is None:
        tokenizer.pad_token = tokenizer.eos_token
    model.to(device)

    losses: list[float] = []
    processed = 0
    if sample_budget > 0:
        max_ctx = getattr(model.config, "n_positions", None) or getattr(
            model.config, "max_position_embeddings", 1024
        )
        blocks = _load_corpus_blocks(corpus_dir, tokenizer, min(block_size, max_ctx))
        optimizer = torch.optim.AdamW(model.parameters(), lr=learning_rate)
        model.train()
        torch.manual_seed(0)
        step = 0
        cursor = 0
        pad = tokenizer.pad_token_id
        while processed < sample_budget:
            take = min(batch_size, sample_budget - processed)
            batch = [blocks[(cursor + i) % len(blocks)] for i in range(take)]
            cursor = (cursor + take) % len(blocks)
            width = max(len(b) for b in batch)
            input_ids = torch.full((take, width), pad, dtype=torch.long)
            attention = torch.zeros((take, width), dtype=torch.long)
            labels = torch.full((take, width), -100, dtype=torch.long)
            for i, b in enumerate(batch):
                input_ids[i, : len(b)] = torch.tensor(b)
                attention[i, : len(b)] = 1
                labels[i, : len(b)] = torch.tensor(b)
            input_ids = input_ids.to(device)
            out_step = model(
                input_ids=input_ids,
                attention_mask=attention.to(device),
                labels=labels.to(device),
            )
            out_step.loss.backward()
            optimizer.step()
            optimizer.zero_grad()
            processed += take
            step += 1
            if step % log_every == 0:
                losses.append(out_step.loss.detach().item())
                log.info("step %d: %d samples, loss %.4f", step, processed, losses[-1])
        model.eval()

    out.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(out)
    tokenizer.save_pretrained(out)
    return FinetuneResult(checkpoint_dir=out, samples_processed=processed, step_losses=losses)
