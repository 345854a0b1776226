import pytest

from genqe.corpus import Document, TokenizationConfig
from genqe.index import build_index


@pytest.fixture
def tok_config():
    return TokenizationConfig()


@pytest.fixture
def toy_docs(tok_config):
    return [
        Document.from_text("d1", "oil oil price", tok_config),
        Document.from_text("d2", "gas price", tok_config),
    ]


@pytest.fixture
def toy_index(toy_docs, tok_config):
    return build_index(toy_docs, tok_config)
