"""Text generation backends and the per-query cache.

Three interchangeable backends produce texts from a query seed: a
deterministic stub sampling from an n-gram model fitted on a document
collection, a filesystem cache of previously generated texts, and an
HTTP client for the generation sidecar. All of them truncate texts to
``params.length`` tokens under the active tokenization.
"""

from __future__ import annotations

import json
import logging
import os
import shutil
import time
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import numpy as np
import requests

from .corpus import Topic, TokenizationConfig, tokenize, _compiled
from .errors import BackendError, CacheMissError, DataError
from .util import derived_rng

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GenerationParams:
    n_texts: int = 100
    length: int = 512
    temperature: float = 0.5
    top_p: float = 0.95
    top_k: int = 40
    rng_seed: int | None = None

    def __post_init__(self):
        if self.n_texts < 0:
            raise ValueError("n_texts must be >= 0")
        if self.length < 1:
            raise ValueError("length must be >= 1")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if not 0.0 < self.top_p <= 1.0:
            raise ValueError("top_p must lie in (0, 1]")
        if self.top_k < 0:
            raise ValueError("top_k must be >= 0")

    def to_dict(self) -> dict:
        return {
            "n_texts": self.n_texts,
            "length": self.length,
            "temperature": self.temperature,
            "top_p": self.top_p,
            "top_k": self.top_k,
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GenerationParams":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


@dataclass
class GeneratedSet:
    query_id: str
    seed_text: str
    texts: list[str]
    backend_tag: str
    params: GenerationParams


class GeneratorBackend(Protocol):
    tag: str

    def generate(self, query_id: str, seed: str, params: GenerationParams) -> list[str]: ...


class CorpusModel:
    """Unigram or bigram counts fitted on tokenized documents.

    Order 2 backs off to the unigram distribution for contexts with no
    observed continuation.
    """

    def __init__(self, order: int = 1):
        if order not in (1, 2):
            raise ValueError("order must be 1 or 2")
        self.order = order
        self.unigram: Counter[str] = Counter()
        self.bigram: dict[str, Counter[str]] = {}
        self.total = 0

    @classmethod
    def fit(cls, token_streams: Iterable[Sequence[str]], order: int = 1) -> "CorpusModel":
        model = cls(order=order)
        for tokens in token_streams:
            model.unigram.update(tokens)
            model.total += len(tokens)
            if order == 2:
                for a, b in zip(tokens, tokens[1:]):
                    model.bigram.setdefault(a, Counter())[b] += 1
        return model

    def context_counts(self, prev: str | None) -> Counter[str]:
        if self.order == 2 and prev is not None:
            counts = self.bigram.get(prev)
            if counts:
                return counts
        return self.unigram


def _transform_distribution(
    terms: list[str], probs: np.ndarray, temperature: float, top_k: int, top_p: float
) -> tuple[list[str], np.ndarray]:
    """Temperature sharpening then top-k and top-p (nucleus) truncation.

    Computed in log space so near-zero temperatures behave like argmax.
    Candidates are pre-sorted lexicographically and the descending sort
    is stable, so ties resolve deterministically.
    """
    logp = np.log(probs) / temperature
    logp -= logp.max()
    w = np.exp(logp)
    p = w / w.sum()

    order = np.argsort(-p, kind="stable")
    if top_k > 0:
        order = order[:top_k]
    p = p[order]
    p = p / p.sum()
    if top_p < 1.0:
        cut = int(np.searchsorted(np.cumsum(p), top_p, side="left")) + 1
        order = order[:cut]
        p = p[:cut]
        p = p / p.sum()
    return [terms[i] for i in order], p


class _Sampler:
    """Per-params sampling tables over a corpus model, cached by context."""

    def __init__(self, model: CorpusModel, params: GenerationParams):
        if model.total == 0:
            raise DataError("empty corpus model")
        self.model = model
        self.params = params
        self._cache: dict[str | None, tuple[list[str], np.ndarray]] = {}

    def _table(self, prev: str | None) -> tuple[list[str], np.ndarray]:
        key = prev if (self.model.order == 2 and prev in self.model.bigram) else None
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        counts = self.model.context_counts(prev)
        terms = sorted(counts)
        probs = np.array([counts[t] for t in terms], dtype=np.float64)
        probs /= probs.sum()
        sel_terms, sel_probs = _transform_distribution(
            terms, probs, self.params.temperature, self.params.top_k, self.params.top_p
        )
        table = (sel_terms, np.cumsum(sel_probs))
        self._cache[key] = table
        return table

    def next_token(self, prev: str | None, rng: np.random.Generator) -> str:
        terms, cum = self._table(prev)
        if len(terms) == 1:
            return terms[0]
        idx = int(np.searchsorted(cum, rng.random(), side="right"))
        return terms[min(idx, len(terms) - 1)]


def stub_generate(
    seed: str,
    params: GenerationParams,
    corpus_model: CorpusModel,
    config: TokenizationConfig | None = None,
) -> list[str]:
    """Deterministic test backend: emit the seed tokens, then sample from
    the fitted model under the temperature/top-k/top-p truncation.

    With ``rng_seed`` set the output is reproducible bit-for-bit; the RNG
    is a PCG64 stream seeded from (rng_seed, sha256 of the seed text).
    """
    config = config or TokenizationConfig()
    sampler = _Sampler(corpus_model, params)
    if params.rng_seed is None:
        rng = np.random.default_rng()
    else:
        rng = derived_rng(params.rng_seed, seed)

    texts = []
    for _ in range(params.n_texts):
        tokens = tokenize(seed, config)[: params.length]
        prev = tokens[-1] if tokens else None
        while len(tokens) < params.length:
            token = sampler.next_token(prev, rng)
            tokens.append(token)
            prev = token
        texts.append(" ".join(tokens))
    return texts


class StubBackend:
    """GeneratorBackend over a fitted corpus model (model-free testing)."""

    tag = "stub"

    def __init__(self, model: CorpusModel, config: TokenizationConfig | None = None):
        self.model = model
        self.config = config or TokenizationConfig()

    def generate(self, query_id: str, seed: str, params: GenerationParams) -> list[str]:
        return stub_generate(seed, params, self.model, self.config)


class PerTopicStubBackend:
    """Stub with a separate corpus model per query_id."""

    tag = "stub"

    def __init__(self, models: dict[str, CorpusModel], config: TokenizationConfig | None = None):
        self.models = models
        self.config = config or TokenizationConfig()

    def generate(self, query_id: str, seed: str, params: GenerationParams) -> list[str]:
        model = self.models.get(query_id)
        if model is None:
            raise BackendError(f"no corpus model for query {query_id!r}")
        return stub_generate(seed, params, model, self.config)


def truncate_to_tokens(text: str, length: int, config: TokenizationConfig | None = None) -> str:
    """Cut ``text`` after its ``length``-th token under ``config``.

    The cut happens on the raw string so untouched texts keep their exact
    form; only over-long texts are clipped.
    """
    config = config or TokenizationConfig()
    if len(tokenize(text, config)) <= length:
        return text
    hay = text.lower() if config.lowercase else text
    if len(hay) != len(text):  # rare case-fold length change; fall back
        text = hay
    count = 0
    for m in _compiled(config.token_pattern).finditer(hay):
        tok = m.group(0)
        if config.stopwords and tok in config.stopwords:
            continue
        count += 1
        if count > length:
            return text[: m.start()].rstrip()
    return text


def generate_for_topic(backend: GeneratorBackend, topic: Topic, params: GenerationParams) -> GeneratedSet:
    """Produce the topic's generated set; text count must match n_texts."""
    if params.n_texts == 0:
        return GeneratedSet(topic.query_id, topic.title, [], backend.tag, params)
    texts = backend.generate(topic.query_id, topic.title, params)
    if len(texts) != params.n_texts:
        raise BackendError(
            f"backend {backend.tag!r} returned {len(texts)} of {params.n_texts} texts "
            f"for query {topic.query_id}",
            partial_texts=list(texts),
        )
    return GeneratedSet(topic.query_id, topic.title, list(texts), backend.tag, params)


# --- cache -----------------------------------------------------------------

_META_NAME = "meta.json"


def _text_name(i: int, n: int) -> str:
    width = max(3, len(str(max(n - 1, 0))))
    return f"{i:0{width}d}.txt"


def cache_store(gset: GeneratedSet, root: str | Path) -> Path:
    """Write one directory per query: meta.json plus one file per text.

    The directory is written to a temp name and renamed into place, so
    readers never observe a half-written entry.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    final = root / gset.query_id
    tmp = root / f".{gset.query_id}.tmp-{os.getpid()}"
    if tmp.exists():
        shutil.rmtree(tmp)
    tmp.mkdir()
    meta = {
        "query_id": gset.query_id,
        "seed_text": gset.seed_text,
        "backend_tag": gset.backend_tag,
        "params": gset.params.to_dict(),
    }
    (tmp / _META_NAME).write_text(json.dumps(meta, indent=2), encoding="utf-8")
    for i, text in enumerate(gset.texts):
        (tmp / _text_name(i, len(gset.texts))).write_text(text, encoding="utf-8")
    if final.exists():
        shutil.rmtree(final)
    os.replace(tmp, final)
    return final


def cache_load(
    query_id: str, root: str | Path, expected_params: GenerationParams | None = None
) -> GeneratedSet:
    """Load one query's generated set; warn when stored params differ from
    the requested ones and return the stored set regardless."""
    entry = Path(root) / query_id
    if not entry.is_dir():
        raise CacheMissError(f"no cache entry for query {query_id!r} under {root}")
    meta_path = entry / _META_NAME
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        params = GenerationParams.from_dict(meta["params"])
        seed_text = meta["seed_text"]
        backend_tag = meta.get("backend_tag", "cache")
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise DataError(f"unreadable cache metadata for query {query_id!r}: {exc}") from exc

    texts = [
        p.read_text(encoding="utf-8")
        for p in sorted(entry.glob("*.txt"), key=lambda p: p.name)
    ]
    if expected_params is not None and params.to_dict() != expected_params.to_dict():
        log.warning(
            "cache entry %s was generated with different params (stored %s, requested %s)",
            query_id,
            params.to_dict(),
            expected_params.to_dict(),
        )
    return GeneratedSet(query_id, seed_text, texts, backend_tag, params)


class CacheBackend:
    """GeneratorBackend reading from a cache directory.

    Requests for fewer texts than stored take a prefix of the stored
    order; requests for more fail with the shortfall attached.
    """

    tag = "cache"

    def __init__(self, root: str | Path, config: TokenizationConfig | None = None):
        self.root = Path(root)
        self.config = config or TokenizationConfig()

    def generate(self, query_id: str, seed: str, params: GenerationParams) -> list[str]:
        gset = cache_load(query_id, self.root, expected_params=params)
        if len(gset.texts) < params.n_texts:
            raise BackendError(
                f"cache entry {query_id!r} holds {len(gset.texts)} texts, "
                f"{params.n_texts} requested",
                partial_texts=gset.texts,
            )
        texts = gset.texts[: params.n_texts]
        return [truncate_to_tokens(t, params.length, self.config) for t in texts]


# --- HTTP sidecar client ----------------------------------------------------

_WIRE_FIELDS = ("seed", "n", "length", "temperature", "top_p", "top_k", "rng_seed")


def wire_request(seed: str, params: GenerationParams) -> dict:
    return {
        "seed": seed,
        "n": params.n_texts,
        "length": params.length,
        "temperature": params.temperature,
        "top_p": params.top_p,
        "top_k": params.top_k,
        "rng_seed": params.rng_seed,
    }


def http_generate(
    endpoint: str,
    seed: str,
    params: GenerationParams,
    *,
    max_attempts: int = 3,
    backoff_s: float = 0.5,
    timeout_s: float = 600.0,
    session: requests.Session | None = None,
) -> list[str]:
    """Call the generation sidecar; retry transient failures with
    exponential backoff, then validate the response schema."""
    url = endpoint.rstrip("/") + "/generate"
    sess = session or requests
    payload = wire_request(seed, params)
    last_error = ""
    for attempt in range(max_attempts):
        if attempt:
            time.sleep(backoff_s * (2 ** (attempt - 1)))
        try:
            resp = sess.post(url, json=payload, timeout=timeout_s)
        except requests.RequestException as exc:
            last_error = f"request failed: {exc}"
            continue
        if resp.status_code >= 500:
            last_error = f"server error {resp.status_code}"
            continue
        if resp.status_code != 200:
            raise BackendError(f"sidecar rejected request: HTTP {resp.status_code}")
        return _validate_response(resp, params.n_texts)
    raise BackendError(f"sidecar unreachable after {max_attempts} attempts ({last_error})")


def _validate_response(resp, n: int) -> list[str]:
    try:
        body = resp.json()
    except ValueError as exc:
        raise BackendError(f"sidecar response is not JSON: {exc}") from exc
    texts = body.get("texts") if isinstance(body, dict) else None
    if not isinstance(texts, list) or not all(isinstance(t, str) for t in texts):
        raise BackendError("sidecar response lacks a texts array")
    if len(texts) != n:
        raise BackendError(
            f"sidecar returned {len(texts)} texts, {n} requested", partial_texts=texts
        )
    return texts


class HttpBackend:
    """GeneratorBackend speaking the sidecar wire format."""

    tag = "http"

    def __init__(
        self,
        endpoint: str,
        config: TokenizationConfig | None = None,
        *,
        max_attempts: int = 3,
        backoff_s: float = 0.5,
        timeout_s: float = 600.0,
    ):
        self.endpoint = endpoint
        self.config = config or TokenizationConfig()
        self.max_attempts = max_attempts
        self.backoff_s = backoff_s
        self.timeout_s = timeout_s
        self._session = requests.Session()

    def generate(self, query_id: str, seed: str, params: GenerationParams) -> list[str]:
        texts = http_generate(
            self.endpoint,
            seed,
            params,
            max_attempts=self.max_attempts,
            backoff_s=self.backoff_s,
            timeout_s=self.timeout_s,
            session=self._session,
        )
        return [truncate_to_tokens(t, params.length, self.config) for t in texts]
