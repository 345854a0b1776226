"""Documents, topics, relevance judgments and the shared tokenizer.

One TokenizationConfig is used for documents, queries and generated
texts within an experiment; the index records its fingerprint and
retrieval refuses to run under a different config.
"""

from __future__ import annotations

import hashlib
import io
import json
import re
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import IO, Iterable, Iterator

from .errors import DataError
from ._porter import porter_stem

DEFAULT_TOKEN_PATTERN = r"[0-9A-Za-z]+"

STEMMERS = ("none", "porter")


@dataclass(frozen=True)
class TokenizationConfig:
    """How raw text becomes terms.

    Defaults: lowercase, tokens are maximal ASCII-alphanumeric runs, no
    stopwords, no stemming. Stopwords are matched after case folding, so
    list them lowercase when ``lowercase`` is on.
    """

    lowercase: bool = True
    stopwords: frozenset[str] = frozenset()
    stemmer: str = "none"
    token_pattern: str = DEFAULT_TOKEN_PATTERN

    def __post_init__(self):
        if self.stemmer not in STEMMERS:
            raise ValueError(f"unknown stemmer {self.stemmer!r}, expected one of {STEMMERS}")
        object.__setattr__(self, "stopwords", frozenset(self.stopwords))

    def to_dict(self) -> dict:
        return {
            "lowercase": self.lowercase,
            "stopwords": sorted(self.stopwords),
            "stemmer": self.stemmer,
            "token_pattern": self.token_pattern,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TokenizationConfig":
        return cls(
            lowercase=bool(d.get("lowercase", True)),
            stopwords=frozenset(d.get("stopwords", ())),
            stemmer=d.get("stemmer", "none"),
            token_pattern=d.get("token_pattern", DEFAULT_TOKEN_PATTERN),
        )

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


@lru_cache(maxsize=32)
def _compiled(pattern: str) -> re.Pattern:
    return re.compile(pattern)


def tokenize(text: str, config: TokenizationConfig | None = None) -> list[str]:
    """Deterministic text-to-terms: case fold, split, drop stopwords, stem."""
    config = config or TokenizationConfig()
    if config.lowercase:
        text = text.lower()
    tokens = _compiled(config.token_pattern).findall(text)
    if config.stopwords:
        tokens = [t for t in tokens if t not in config.stopwords]
    if config.stemmer == "porter":
        tokens = [porter_stem(t) for t in tokens]
    return tokens


@dataclass(frozen=True)
class Document:
    doc_id: str
    text: str
    tokens: tuple[str, ...]

    @classmethod
    def from_text(cls, doc_id: str, text: str, config: TokenizationConfig | None = None) -> "Document":
        if not doc_id:
            raise DataError("document with empty doc_id")
        return cls(doc_id=doc_id, text=text, tokens=tuple(tokenize(text, config)))


@dataclass(frozen=True)
class Topic:
    query_id: str
    title: str


@dataclass(frozen=True)
class Qrels:
    """Relevance judgments keyed by (query_id, doc_id); grade > 0 means relevant."""

    entries: dict[tuple[str, str], int] = field(default_factory=dict)

    def __post_init__(self):
        for (qid, did), grade in self.entries.items():
            if grade < 0:
                raise DataError(f"negative relevance grade for ({qid}, {did})")

    def relevant_docs(self, query_id: str) -> set[str]:
        return {d for (q, d), g in self.entries.items() if q == query_id and g > 0}

    def query_ids(self) -> list[str]:
        return sorted({q for (q, _) in self.entries})

    def __len__(self) -> int:
        return len(self.entries)


def _open_maybe(source: str | Path | IO, mode: str = "rb") -> tuple[IO, bool]:
    if isinstance(source, (str, Path)):
        return open(source, mode), True
    return source, False


def _decode(line: bytes | str) -> str:
    return line.decode("utf-8") if isinstance(line, bytes) else line


def load_documents(
    source: str | Path | IO,
    format: str = "jsonl",
    config: TokenizationConfig | None = None,
) -> list[Document]:
    """Read documents from jsonl ({"doc_id","text"} per line) or TREC SGML.

    Order is preserved; a malformed record or duplicate doc_id raises
    DataError naming the offending record.
    """
    if format == "jsonl":
        docs = list(_iter_jsonl_documents(source, config))
    elif format == "trec-sgml":
        docs = list(_iter_trec_documents(source, config))
    else:
        raise DataError(f"unknown document format {format!r}")
    seen: set[str] = set()
    for i, doc in enumerate(docs):
        if doc.doc_id in seen:
            raise DataError(f"duplicate doc_id {doc.doc_id!r} (record {i + 1})")
        seen.add(doc.doc_id)
    return docs


def _iter_jsonl_documents(source, config) -> Iterator[Document]:
    fh, close = _open_maybe(source)
    try:
        for lineno, raw in enumerate(fh, start=1):
            line = _decode(raw).strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                doc_id = obj["doc_id"]
                text = obj["text"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise DataError(f"malformed document record at line {lineno}: {exc}") from exc
            if not isinstance(doc_id, str) or not doc_id:
                raise DataError(f"malformed document record at line {lineno}: bad doc_id")
            yield Document.from_text(doc_id, str(text), config)
    finally:
        if close:
            fh.close()


_DOC_RE = re.compile(rb"<DOC>(.*?)</DOC>", re.DOTALL)
_DOCNO_RE = re.compile(rb"<DOCNO>(.*?)</DOCNO>", re.DOTALL)
_TEXT_RE = re.compile(rb"<TEXT>(.*?)</TEXT>", re.DOTALL)
_TAG_RE = re.compile(rb"<[^>]+>")


def _iter_trec_documents(source, config) -> Iterator[Document]:
    fh, close = _open_maybe(source)
    try:
        data = fh.read()
        if isinstance(data, str):
            data = data.encode("utf-8")
    finally:
        if close:
            fh.close()
    for recno, m in enumerate(_DOC_RE.finditer(data), start=1):
        block = m.group(1)
        docno = _DOCNO_RE.search(block)
        if not docno:
            raise DataError(f"TREC document record {recno} has no <DOCNO>")
        doc_id = docno.group(1).decode("utf-8", "replace").strip()
        texts = _TEXT_RE.findall(block)
        if texts:
            body = b"\n".join(texts)
        else:
            body = _DOCNO_RE.sub(b" ", block)
        body = _TAG_RE.sub(b" ", body)
        yield Document.from_text(doc_id, body.decode("utf-8", "replace").strip(), config)


def write_documents_jsonl(documents: Iterable[Document], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in documents:
            fh.write(json.dumps({"doc_id": doc.doc_id, "text": doc.text}) + "\n")


def load_topics(source: str | Path | IO, format: str = "jsonl") -> list[Topic]:
    """Read topics from jsonl ({"query_id","title"}) or TREC topic SGML.

    Only the number and title of SGML topics are honored; description and
    narrative sections are ignored.
    """
    if format == "jsonl":
        topics = list(_iter_jsonl_topics(source))
    elif format == "trec-sgml":
        topics = list(_iter_trec_topics(source))
    else:
        raise DataError(f"unknown topics format {format!r}")
    seen: set[str] = set()
    for t in topics:
        if t.query_id in seen:
            raise DataError(f"duplicate query_id {t.query_id!r} in topics")
        seen.add(t.query_id)
    return topics


def _iter_jsonl_topics(source) -> Iterator[Topic]:
    fh, close = _open_maybe(source)
    try:
        for lineno, raw in enumerate(fh, start=1):
            line = _decode(raw).strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                yield Topic(query_id=str(obj["query_id"]), title=str(obj["title"]))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise DataError(f"malformed topic record at line {lineno}: {exc}") from exc
    finally:
        if close:
            fh.close()


_TOP_RE = re.compile(r"<top>(.*?)</top>", re.DOTALL | re.IGNORECASE)
_NUM_RE = re.compile(r"<num>\s*(?:Number:)?\s*([^<\n]*)", re.IGNORECASE)
_TITLE_RE = re.compile(r"<title>\s*(?:Topic:)?\s*(.*?)(?=<|$)", re.DOTALL | re.IGNORECASE)


def _iter_trec_topics(source) -> Iterator[Topic]:
    fh, close = _open_maybe(source)
    try:
        data = fh.read()
        if isinstance(data, bytes):
            data = data.decode("utf-8", "replace")
    finally:
        if close:
            fh.close()
    for recno, m in enumerate(_TOP_RE.finditer(data), start=1):
        block = m.group(1)
        num = _NUM_RE.search(block)
        title = _TITLE_RE.search(block)
        if not num or not title:
            raise DataError(f"TREC topic record {recno} lacks <num> or <title>")
        yield Topic(query_id=num.group(1).strip(), title=" ".join(title.group(1).split()))


def write_topics_jsonl(topics: Iterable[Topic], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in topics:
            fh.write(json.dumps({"query_id": t.query_id, "title": t.title}) + "\n")


def load_qrels(source: str | Path | IO) -> Qrels:
    """Parse TREC qrels lines: ``qid 0 docno grade``, whitespace separated."""
    fh, close = _open_maybe(source)
    entries: dict[tuple[str, str], int] = {}
    try:
        for lineno, raw in enumerate(fh, start=1):
            line = _decode(raw).strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) < 4:
                raise DataError(f"qrels line {lineno}: expected 4 fields, got {len(parts)}")
            qid, _, doc_id, grade_s = parts[0], parts[1], parts[2], parts[3]
            try:
                grade = int(grade_s)
            except ValueError as exc:
                raise DataError(f"qrels line {lineno}: non-integer grade {grade_s!r}") from exc
            if grade < 0:
                raise DataError(f"qrels line {lineno}: negative grade {grade}")
            key = (qid, doc_id)
            if key in entries:
                raise DataError(f"qrels line {lineno}: duplicate pair ({qid}, {doc_id})")
            entries[key] = grade
    finally:
        if close:
            fh.close()
    return Qrels(entries=entries)


def write_qrels(qrels: Qrels, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for (qid, did), grade in sorted(qrels.entries.items()):
            fh.write(f"{qid} 0 {did} {grade}\n")


def qrels_from_stream(text: str) -> Qrels:
    return load_qrels(io.StringIO(text))
