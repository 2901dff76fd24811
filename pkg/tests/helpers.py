# tests/helpers.py
import torch

from stare_kg.graph.vocabulary import build_vocabulary, encode_statements
from stare_kg.model.encoder import EmbeddingStore
from stare_kg.model.link_predictor import LinkPredictor
from stare_kg.training.trainer import prepare_training_data


def random_store(num_entities: int, num_relations: int, dim: int, seed: int = 0) -> EmbeddingStore:
    g = torch.Generator().manual_seed(seed)
    return EmbeddingStore(
        torch.randn(num_entities, dim, generator=g, dtype=torch.float64),
        torch.randn(num_relations, dim, generator=g, dtype=torch.float64),
    )


def central_difference(fn, x: torch.Tensor, step: float = 1e-5) -> torch.Tensor:
    """d sum(fn(x)) / dx by central differences (x is modified in place and restored)."""
    grad = torch.zeros_like(x)
    flat, gflat = x.view(-1), grad.view(-1)
    with torch.no_grad():
        for i in range(flat.numel()):
            orig = flat[i].item()
            flat[i] = orig + step
            plus = fn(x).sum().item()
            flat[i] = orig - step
            minus = fn(x).sum().item()
            flat[i] = orig
            gflat[i] = (plus - minus) / (2 * step)
    return grad


def toy_model(statements, config):
    """LinkPredictor plus its TrainingData for label statements under `config`."""
    vocab = build_vocabulary(statements)
    data = prepare_training_data(encode_statements(statements, vocab), vocab, config.model.use_qualifiers)
    torch.manual_seed(config.seed)
    return LinkPredictor(data.vocab, config), data
