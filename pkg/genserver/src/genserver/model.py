"""Model runtime: one causal LM per process, serialized inference.

The model source is either a hub tag or a local checkpoint directory
(the fine-tuning output and the tiny test model both use the standard
transformers layout). Requests queue on a bounded semaphore and take an
exclusive inference lock, so seeded sampling is reproducible.
"""

from __future__ import annotations

import threading
import time

import torch
from transformers import AutoModelForCausalLM, AutoTokenizer


class QueueFull(Exception):
    """More requests in flight than the configured queue depth."""


class QueueTimeout(Exception):
    """Gave up waiting for the model while holding a queue slot."""


class ModelRuntime:
    """Loads a model once and serves generate() calls one at a time."""

    def __init__(
        self,
        model_source: str,
        device: str = "cpu",
        queue_depth: int = 8,
        request_timeout_s: float = 600.0,
    ):
        self.model_source = model_source
        self.device = device
        self.queue_depth = queue_depth
        self.request_timeout_s = request_timeout_s
        self.model = None
        self.tokenizer = None
        self.load_error: str | None = None
        self._slots = threading.BoundedSemaphore(queue_depth)
        self._infer_lock = threading.Lock()

    @property
    def status(self) -> str:
        if self.load_error is not None:
            return "failed"
        return "ready" if self.model is not None else "loading"

    @property
    def model_tag(self) -> str:
        return self.model_source

    def load(self) -> None:
        try:
            tokenizer = AutoTokenizer.from_pretrained(self.model_source)
            model = AutoModelForCausalLM.from_pretrained(self.model_source)
            model.to(self.device)
            model.eval()
            if tokenizer.pad_token_id is None:
                tokenizer.pad_token = tokenizer.eos_token
            self.tokenizer = tokenizer
            self.model = model
        except Exception as exc:
            self.load_error = str(exc)
            raise

    def load_in_background(self) -> threading.Thread:
        thread = threading.Thread(target=self._load_quietly, daemon=True)
        thread.start()
        return thread

    def _load_quietly(self) -> None:
        try:
            self.load()
        except Exception:
            pass  # surfaced through status/load_error

    def generate(
        self,
        seed: str,
        n: int,
        length: int,
        temperature: float,
        top_p: float,
        top_k: int,
        rng_seed: int | None = None,
    ) -> list[str]:
        """n sampled continuations, each capped at `length` new model
        tokens; the prompt heads each returned text."""
        if self.model is None:
            raise RuntimeError("model not loaded")
        if not self._slots.acquire(blocking=False):
            raise QueueFull(f"request queue full (depth {self.queue_depth})")
        try:
            if not self._infer_lock.acquire(timeout=self.request_timeout_s):
                raise QueueTimeout(f"model busy for over {self.request_timeout_s}s")
            try:
                return self._generate_locked(seed, n, length, temperature, top_p, top_k, rng_seed)
            finally:
                self._infer_lock.release()
        finally:
            self._slots.release()

    def _generate_locked(self, seed, n, length, temperature, top_p, top_k, rng_seed) -> list[str]:
        if rng_seed is not None:
            torch.manual_seed(rng_seed)
        inputs = self.tokenizer(seed, return_tensors="pt").to(self.device)
        max_ctx = getattr(self.model.config, "n_positions", None) or getattr(
            self.model.config, "max_position_embeddings", 1024
        )
        prompt_len = inputs["input_ids"].shape[1]
        new_tokens = max(1, min(length, max_ctx - prompt_len - 1))
        with torch.no_grad():
            output = self.model.generate(
                **inputs,
                do_sample=True,
                num_return_sequences=n,
                max_new_tokens=new_tokens,
                temperature=temperature,
                top_p=top_p,
                top_k=top_k,
                pad_token_id=self.tokenizer.pad_token_id,
            )
        return [self.tokenizer.decode(seq, skip_special_tokens=True) for seq in output]


def timed_generate(runtime: ModelRuntime, **kwargs) -> tuple[list[str], int]:
    start = time.monotonic()
    texts = runtime.generate(**kwargs)
    return texts, int(1000 * (time.monotonic() - start))
