"""Inverted index with the collection statistics both rankers need.

The index is immutable after build and holds postings as numpy arrays
(doc ordinals and term frequencies), which is what the scoring kernels
consume. Persistence is a single versioned binary image with a trailing
checksum.
"""

from __future__ import annotations

import hashlib
import json
import struct
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .corpus import Document, TokenizationConfig
from .errors import ConfigMismatchError, DataError, IndexFormatError

_MAGIC = b"GQIX"
_VERSION = 1


class Posting(NamedTuple):
    doc_ordinal: int
    tf: int


@dataclass
class IndexStats:
    n_docs: int
    total_tokens: int
    avdl: float
    doc_lengths: np.ndarray  # int32, indexed by doc ordinal
    collection_tf: dict[str, int]


class InvertedIndex:
    """Term dictionary plus postings, doc-id table and global stats."""

    def __init__(
        self,
        terms: dict[str, tuple[np.ndarray, np.ndarray]],
        stats: IndexStats,
        doc_ids: list[str],
        config: TokenizationConfig,
    ):
        self._terms = terms
        self.stats = stats
        self.doc_ids = doc_ids
        self.config = config
        self.fingerprint = config.fingerprint()
        self._ordinals: dict[str, int] | None = None

    @property
    def n_docs(self) -> int:
        return self.stats.n_docs

    @property
    def avdl(self) -> float:
        return self.stats.avdl

    def vocabulary(self) -> Iterator[str]:
        return iter(self._terms)

    def __contains__(self, term: str) -> bool:
        return term in self._terms

    def df(self, term: str) -> int:
        entry = self._terms.get(term)
        return 0 if entry is None else len(entry[0])

    def cf(self, term: str) -> int:
        return self.stats.collection_tf.get(term, 0)

    def p_collection(self, term: str) -> float:
        """Collection language model p(t|C) = cf(t) / total tokens."""
        return self.cf(term) / self.stats.total_tokens

    def postings_arrays(self, term: str) -> tuple[np.ndarray, np.ndarray]:
        entry = self._terms.get(term)
        if entry is None:
            raise KeyError(term)
        return entry

    def postings(self, term: str) -> list[Posting]:
        ordinals, tfs = self.postings_arrays(term)
        return [Posting(int(d), int(f)) for d, f in zip(ordinals, tfs)]

    def ordinal(self, doc_id: str) -> int:
        if self._ordinals is None:
            self._ordinals = {d: i for i, d in enumerate(self.doc_ids)}
        try:
            return self._ordinals[doc_id]
        except KeyError:
            raise DataError(f"unknown doc_id {doc_id!r}") from None

    def check_config(self, config: TokenizationConfig) -> None:
        if config.fingerprint() != self.fingerprint:
            raise ConfigMismatchError(
                "tokenization config does not match the one this index was built with"
            )

    def doc_term_vectors(self, ordinals: Sequence[int]) -> dict[int, dict[str, int]]:
        """Forward term vectors for the given doc ordinals (dictionary scan)."""
        wanted = np.asarray(sorted(set(int(o) for o in ordinals)), dtype=np.int32)
        out: dict[int, dict[str, int]] = {int(o): {} for o in wanted}
        if wanted.size == 0:
            return out
        for term, (ords, tfs) in self._terms.items():
            pos = np.searchsorted(ords, wanted)
            for w, p in zip(wanted, pos):
                if p < ords.size and ords[p] == w:
                    out[int(w)][term] = int(tfs[p])
        return out


def build_index(documents: Sequence[Document], config: TokenizationConfig | None = None) -> InvertedIndex:
    """Build an in-memory index; doc ordinals follow arrival order."""
    if not documents:
        raise DataError("empty collection")
    config = config or TokenizationConfig()

    doc_ids: list[str] = []
    doc_lengths = np.zeros(len(documents), dtype=np.int32)
    term_postings: dict[str, list[tuple[int, int]]] = {}
    collection_tf: Counter[str] = Counter()

    for ordinal, doc in enumerate(documents):
        doc_ids.append(doc.doc_id)
        counts = Counter(doc.tokens)
        doc_lengths[ordinal] = len(doc.tokens)
        for term, tf in counts.items():
            term_postings.setdefault(term, []).append((ordinal, tf))
            collection_tf[term] += tf

    terms: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for term in sorted(term_postings):
        plist = term_postings[term]
        ords = np.fromiter((p[0] for p in plist), dtype=np.int32, count=len(plist))
        tfs = np.fromiter((p[1] for p in plist), dtype=np.int32, count=len(plist))
        terms[term] = (ords, tfs)

    total = int(doc_lengths.sum())
    stats = IndexStats(
        n_docs=len(documents),
        total_tokens=total,
        avdl=total / len(documents),
        doc_lengths=doc_lengths,
        collection_tf=dict(collection_tf),
    )
    return InvertedIndex(terms, stats, doc_ids, config)


def save_index(index: InvertedIndex, path: str | Path) -> None:
    """Write the single-file binary image: header, arrays, sha256 checksum."""
    terms_meta = []
    offset = 0
    for term, (ords, _) in index._terms.items():
        df = len(ords)
        terms_meta.append([term, df, index.stats.collection_tf[term], offset])
        offset += df

    header = {
        "config": index.config.to_dict(),
        "fingerprint": index.fingerprint,
        "n_docs": index.stats.n_docs,
        "total_tokens": index.stats.total_tokens,
        "avdl": index.stats.avdl,
        "doc_ids": index.doc_ids,
        "terms": terms_meta,
    }
    header_blob = json.dumps(header).encode("utf-8")

    all_ords = np.concatenate([v[0] for v in index._terms.values()]) if index._terms else np.empty(0, np.int32)
    all_tfs = np.concatenate([v[1] for v in index._terms.values()]) if index._terms else np.empty(0, np.int32)

    payload = b"".join(
        [
            _MAGIC,
            struct.pack("<I", _VERSION),
            struct.pack("<Q", len(header_blob)),
            header_blob,
            index.stats.doc_lengths.astype("<i4").tobytes(),
            all_ords.astype("<i4").tobytes(),
            all_tfs.astype("<i4").tobytes(),
        ]
    )
    checksum = hashlib.sha256(payload).digest()
    with open(path, "wb") as fh:
        fh.write(payload)
        fh.write(checksum)


def load_index(path: str | Path) -> InvertedIndex:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(_MAGIC) + 4 + 8 + 32:
        raise IndexFormatError("index file too short")
    payload, checksum = blob[:-32], blob[-32:]
    if hashlib.sha256(payload).digest() != checksum:
        raise IndexFormatError("checksum mismatch: index file truncated or corrupt")
    if payload[:4] != _MAGIC:
        raise IndexFormatError("not an index file (bad magic)")
    (version,) = struct.unpack_from("<I", payload, 4)
    if version != _VERSION:
        raise IndexFormatError(f"unsupported index version {version}")
    (header_len,) = struct.unpack_from("<Q", payload, 8)
    pos = 16
    try:
        header = json.loads(payload[pos : pos + header_len].decode("utf-8"))
    except json.JSONDecodeError as exc:
        raise IndexFormatError(f"corrupt index header: {exc}") from exc
    pos += header_len

    n_docs = header["n_docs"]
    doc_lengths = np.frombuffer(payload, dtype="<i4", count=n_docs, offset=pos).astype(np.int32)
    pos += 4 * n_docs
    n_postings = sum(entry[1] for entry in header["terms"])
    all_ords = np.frombuffer(payload, dtype="<i4", count=n_postings, offset=pos).astype(np.int32)
    pos += 4 * n_postings
    all_tfs = np.frombuffer(payload, dtype="<i4", count=n_postings, offset=pos).astype(np.int32)

    terms: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    collection_tf: dict[str, int] = {}
    for term, df, cf, off in header["terms"]:
        terms[term] = (all_ords[off : off + df], all_tfs[off : off + df])
        collection_tf[term] = cf

    config = TokenizationConfig.from_dict(header["config"])
    stats = IndexStats(
        n_docs=n_docs,
        total_tokens=header["total_tokens"],
        avdl=header["avdl"],
        doc_lengths=doc_lengths,
        collection_tf=collection_tf,
    )
    index = InvertedIndex(terms, stats, header["doc_ids"], config)
    if index.fingerprint != header["fingerprint"]:
        raise IndexFormatError("stored fingerprint does not match stored config")
    return index
