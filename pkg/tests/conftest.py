# tests/conftest.py
import pytest
import torch

from stare_kg.graph.statements import Statement
from stare_kg.graph.vocabulary import build_vocabulary, encode_statements
from stare_kg.run_config import load_run_config
from stare_kg.config import TOY_CONFIG_PATH
from stare_kg.training.trainer import build_graph

torch.set_num_threads(1)


@pytest.fixture
def einstein_statements():
    return [
        Statement("Albert Einstein", "educated at", "ETH Zurich",
                  (("academic degree", "Bachelor"), ("academic major", "Physics"))),
        Statement("Albert Einstein", "educated at", "University of Zurich",
                  (("academic degree", "Doctorate"), ("academic major", "Physics"))),
    ]


@pytest.fixture
def einstein_vocab(einstein_statements):
    return build_vocabulary(einstein_statements)


@pytest.fixture
def einstein_ids(einstein_statements, einstein_vocab):
    return encode_statements(einstein_statements, einstein_vocab)


@pytest.fixture
def einstein_graph(einstein_ids, einstein_vocab):
    """(augmented statements, augmented vocab, GraphTensors)."""
    return build_graph(einstein_ids, einstein_vocab)


@pytest.fixture
def toy_config():
    return load_run_config(TOY_CONFIG_PATH)
