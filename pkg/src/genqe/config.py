"""Experiment configuration: one YAML file, overridable per flag.

Unknown keys are rejected so sweep scripts fail loudly on typos.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .corpus import TokenizationConfig
from .errors import DataError, UsageError
from .expansion import ExpansionConfig
from .generation import GenerationParams
from .ranking import Bm25Params, DirichletParams
from .rm3 import Rm3Config

BACKENDS = ("stub", "http", "cache")

STUB_FIT = ("corpus", "qrels")


def _check_keys(d: dict, allowed: set[str], where: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise UsageError(f"unknown config key(s) in {where}: {', '.join(sorted(unknown))}")


@dataclass
class PathsConfig:
    corpus: str = "corpus.jsonl"
    corpus_format: str = "jsonl"
    topics: str = "topics.jsonl"
    topics_format: str = "jsonl"
    qrels: str = "qrels.txt"
    index: str = "index.gqix"
    cache_dir: str = "gen-cache"
    output_dir: str = "out"

    @classmethod
    def from_dict(cls, d: dict) -> "PathsConfig":
        _check_keys(d, set(cls.__dataclass_fields__), "paths")
        return cls(**d)


@dataclass
class ModelConfig:
    name: str = "bm25plus"
    k1: float = 1.2
    k3: float = 1000.0
    b: float = 0.75
    delta: float = 1.0
    mu: float = 2500.0

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        _check_keys(d, set(cls.__dataclass_fields__), "model")
        cfg = cls(**d)
        if cfg.name not in ("bm25plus", "lm_dirichlet"):
            raise UsageError(f"unknown model {cfg.name!r}")
        return cfg

    def ranking_params(self) -> Bm25Params | DirichletParams:
        if self.name == "bm25plus":
            return Bm25Params(k1=self.k1, k3=self.k3, b=self.b, delta=self.delta)
        return DirichletParams(mu=self.mu)

    def dirichlet(self) -> DirichletParams:
        return DirichletParams(mu=self.mu)


@dataclass
class GenerationConfig:
    backend: str = "stub"
    n_texts: int = 100
    length: int = 512
    temperature: float = 0.5
    top_p: float = 0.95
    top_k: int = 40
    rng_seed: int | None = None
    endpoint: str | None = None
    stub_fit: str = "corpus"
    stub_order: int = 1
    workers: int = 4

    @classmethod
    def from_dict(cls, d: dict) -> "GenerationConfig":
        _check_keys(d, set(cls.__dataclass_fields__), "generation")
        cfg = cls(**d)
        if cfg.backend not in BACKENDS:
            raise UsageError(f"unknown generation backend {cfg.backend!r}")
        if cfg.stub_fit not in STUB_FIT:
            raise UsageError(f"unknown stub_fit {cfg.stub_fit!r}")
        if cfg.backend == "http" and not cfg.endpoint:
            raise UsageError("generation.backend=http requires generation.endpoint")
        if cfg.workers < 1:
            raise UsageError("generation.workers must be >= 1")
        return cfg

    def params(self) -> GenerationParams:
        return GenerationParams(
            n_texts=self.n_texts,
            length=self.length,
            temperature=self.temperature,
            top_p=self.top_p,
            top_k=self.top_k,
            rng_seed=self.rng_seed,
        )


@dataclass
class ExperimentConfig:
    paths: PathsConfig = field(default_factory=PathsConfig)
    tokenization: TokenizationConfig = field(default_factory=TokenizationConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    top_k: int = 1000
    run_tag: str = "genqe"
    expansion: ExpansionConfig | None = None
    generation: GenerationConfig | None = None
    rm3: Rm3Config | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d or {})
        _check_keys(d, set(cls.__dataclass_fields__), "config")
        try:
            tok = d.get("tokenization", {})
            _check_keys(tok, {"lowercase", "stopwords", "stemmer", "token_pattern"}, "tokenization")
            exp = d.get("expansion")
            if exp is not None:
                _check_keys(exp, set(ExpansionConfig.__dataclass_fields__), "expansion")
            r = d.get("rm3")
            if r is not None:
                _check_keys(r, set(Rm3Config.__dataclass_fields__), "rm3")
            cfg = cls(
                paths=PathsConfig.from_dict(d.get("paths", {})),
                tokenization=TokenizationConfig.from_dict(tok),
                model=ModelConfig.from_dict(d.get("model", {})),
                top_k=int(d.get("top_k", 1000)),
                run_tag=str(d.get("run_tag", "genqe")),
                expansion=ExpansionConfig(**exp) if exp is not None else None,
                generation=GenerationConfig.from_dict(d["generation"]) if d.get("generation") else None,
                rm3=Rm3Config(**r) if r is not None else None,
            )
        except (TypeError, ValueError) as exc:
            raise UsageError(f"invalid configuration: {exc}") from exc
        if cfg.expansion is not None and cfg.rm3 is not None:
            raise UsageError("expansion and rm3 are mutually exclusive")
        if cfg.expansion is not None and cfg.generation is None:
            raise UsageError("expansion requires a generation section (backend selection)")
        if cfg.top_k < 1:
            raise UsageError("top_k must be >= 1")
        return cfg

    @classmethod
    def from_yaml(cls, path: str | Path, overrides: list[str] | None = None) -> "ExperimentConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = yaml.safe_load(fh) or {}
        except FileNotFoundError:
            raise UsageError(f"config file not found: {path}") from None
        except yaml.YAMLError as exc:
            raise UsageError(f"config file is not valid YAML: {exc}") from exc
        if not isinstance(data, dict):
            raise UsageError("config file must hold a mapping")
        for item in overrides or []:
            _apply_override(data, item)
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        d = {
            "paths": {k: getattr(self.paths, k) for k in PathsConfig.__dataclass_fields__},
            "tokenization": self.tokenization.to_dict(),
            "model": {k: getattr(self.model, k) for k in ModelConfig.__dataclass_fields__},
            "top_k": self.top_k,
            "run_tag": self.run_tag,
            "expansion": None,
            "generation": None,
            "rm3": None,
        }
        if self.expansion is not None:
            d["expansion"] = {
                k: getattr(self.expansion, k) for k in ExpansionConfig.__dataclass_fields__
            }
        if self.generation is not None:
            d["generation"] = {
                k: getattr(self.generation, k) for k in GenerationConfig.__dataclass_fields__
            }
        if self.rm3 is not None:
            d["rm3"] = {k: getattr(self.rm3, k) for k in Rm3Config.__dataclass_fields__}
        return d

    def require_paths(self, *names: str) -> None:
        """Check the referenced input paths exist before a command starts."""
        for name in names:
            p = Path(getattr(self.paths, name))
            if not p.exists():
                raise DataError(f"paths.{name} does not exist: {p}")


def _apply_override(data: dict, item: str) -> None:
    if "=" not in item:
        raise UsageError(f"override must look like section.key=value, got {item!r}")
    dotted, raw = item.split("=", 1)
    keys = dotted.strip().split(".")
    value = yaml.safe_load(raw)
    node = data
    for key in keys[:-1]:
        nxt = node.get(key)
        if nxt is None:
            nxt = {}
            node[key] = nxt
        if not isinstance(nxt, dict):
            raise UsageError(f"cannot override {dotted!r}: {key!r} is not a section")
        node = nxt
    node[keys[-1]] = value
