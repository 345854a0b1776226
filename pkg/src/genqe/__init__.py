"""genqe: query expansion with generated texts over a BM25+/LM retrieval core."""

__version__ = "0.1.0"

from .corpus import Document, Qrels, TokenizationConfig, Topic, tokenize
from .errors import (
    BackendError,
    CacheMissError,
    ConfigMismatchError,
    DataError,
    GenqeError,
    IndexFormatError,
    UsageError,
)
from .index import InvertedIndex, build_index, load_index, save_index
from .ranking import (
    Bm25Params,
    DirichletParams,
    RunResult,
    WeightedQuery,
    bm25plus_wd,
    bm25plus_wq,
    lm_dirichlet_wd,
    score_all,
)

__all__ = [
    "__version__",
    "Document", "Topic", "Qrels", "TokenizationConfig", "tokenize",
    "InvertedIndex", "build_index", "save_index", "load_index",
    "WeightedQuery", "Bm25Params", "DirichletParams", "RunResult",
    "bm25plus_wd", "bm25plus_wq", "lm_dirichlet_wd", "score_all",
    "GenqeError", "UsageError", "DataError", "IndexFormatError",
    "ConfigMismatchError", "CacheMissError", "BackendError",
]
