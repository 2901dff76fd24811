# stare_kg/training/trainer.py
"""1-N training loop: full-graph encoder pass per step, batched decoder queries."""
import logging
import os
import time
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import torch
from tqdm import tqdm

from stare_kg.dataset.variants import reduce_to_triples
from stare_kg.errors import NonFiniteLossError
from stare_kg.graph.sparse import to_sparse
from stare_kg.graph.statements import Statement
from stare_kg.graph.vocabulary import Vocabulary, augment_edges
from stare_kg.model.decoders import collate_queries, linearize_query
from stare_kg.model.encoder import GraphTensors
from stare_kg.model.link_predictor import LinkPredictor
from stare_kg.training.labels import LabelIndex, build_label_index, build_training_queries, label_matrix, query_key
from stare_kg.training.loss import bce_loss

log = logging.getLogger(__name__)

TRAIN_LOG_FILE = "train_log.tsv"      # epoch<TAB>loss<TAB>seconds, one line per epoch, no header
ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8


class TrainingData(NamedTuple):
    vocab: Vocabulary           # augmented
    graph: GraphTensors         # augmented train graph
    label_index: LabelIndex
    queries: List[Statement]    # one representative statement per 1-N key


class EpochLog(NamedTuple):
    epoch: int
    loss: float
    seconds: float

    def to_line(self) -> str:
        return f"{self.epoch}\t{self.loss:.8f}\t{self.seconds:.3f}"


def build_graph(train_statements: Sequence[Statement], vocab: Vocabulary,
                use_qualifiers: bool = True) -> Tuple[List[Statement], Vocabulary, GraphTensors]:
    """Augmented facts, augmented vocabulary and message-passing tensors of id-encoded train statements.

    With `use_qualifiers` off the graph is built from the deduplicated main triples.
    """
    if not use_qualifiers:
        train_statements = reduce_to_triples(train_statements)
    aug_statements, aug_vocab = augment_edges(train_statements, vocab)
    graph = GraphTensors.from_graph(to_sparse(aug_statements, aug_vocab), vocab.num_base_relations)
    return aug_statements, aug_vocab, graph


def prepare_training_data(train_statements: Sequence[Statement], vocab: Vocabulary,
                          use_qualifiers: bool = True) -> TrainingData:
    """Augment id-encoded train statements, build the graph and the 1-N index.

    (T) mode keys the 1-N targets on (s, r) alone, so every object of a triple is a positive.
    """
    aug_statements, aug_vocab, graph = build_graph(train_statements, vocab, use_qualifiers)
    label_index = build_label_index(aug_statements, aug_vocab)
    queries = build_training_queries(label_index)
    log.info(f"Training data ready | facts={graph.num_edges} | queries={len(queries)}")
    return TrainingData(aug_vocab, graph, label_index, queries)


def make_optimizer(model: LinkPredictor, lr: float) -> torch.optim.Adam:
    return torch.optim.Adam(model.parameters(), lr=lr, betas=ADAM_BETAS, eps=ADAM_EPS)


def batch_tensors(batch: Sequence[Statement], data: TrainingData, max_len: int, epsilon: float,
                  triple_only: bool = False, dtype=torch.float32, device=None):
    queries = [linearize_query(st, data.vocab, max_len, triple_only=triple_only) for st in batch]
    tokens, mask, _ = collate_queries(queries, device=device)
    labels = label_matrix([query_key(st) for st in batch], data.label_index, data.vocab, epsilon, dtype=dtype)
    return tokens, mask, labels.to(device)


def train_step(model: LinkPredictor, optimizer: torch.optim.Optimizer, graph: GraphTensors,
               tokens: torch.Tensor, mask: torch.Tensor, labels: torch.Tensor) -> float:
    model.train()
    optimizer.zero_grad()
    scores = model(graph, tokens, mask)
    loss = bce_loss(scores, labels, model.num_real_entities)
    if not torch.isfinite(loss):
        raise NonFiniteLossError(f"loss became {loss.item()} | batch={tokens.shape[0]}")
    loss.backward()
    optimizer.step()
    return loss.item()


class Trainer:

    def __init__(
        self,
        model: LinkPredictor,
        data: TrainingData,
        output_dir: str,
        validate: Optional[Callable[[LinkPredictor], object]] = None,
        device: str = "cpu",
    ):
        self.model = model.to(device)
        self.data = data
        self.config = model.config
        self.output_dir = output_dir
        self.validate = validate
        self.device = device
        self.graph = data.graph.to(device)
        self.optimizer = make_optimizer(model, self.config.train.lr)
        self.generator = torch.Generator().manual_seed(self.config.seed)
        self.history: List[EpochLog] = []

    @property
    def dtype(self) -> torch.dtype:
        return torch.float64 if self.config.model.dtype == "float64" else torch.float32

    def batches(self) -> List[List[Statement]]:
        order = torch.randperm(len(self.data.queries), generator=self.generator).tolist()
        size = self.config.train.batch_size
        return [[self.data.queries[i] for i in order[start:start + size]] for start in range(0, len(order), size)]

    def run_epoch(self, epoch: int) -> EpochLog:
        started = time.perf_counter()
        cfg = self.config
        total, count = 0.0, 0
        for batch in self.batches():
            tokens, mask, labels = batch_tensors(
                batch, self.data, cfg.decoder.max_len, cfg.train.label_smoothing,
                triple_only=not cfg.model.use_qualifiers, dtype=self.dtype, device=self.device,
            )
            total += train_step(self.model, self.optimizer, self.graph, tokens, mask, labels) * len(batch)
            count += len(batch)
        return EpochLog(epoch, total / max(count, 1), time.perf_counter() - started)

    def checkpoint(self, name: str) -> str:
        path = os.path.join(self.output_dir, "checkpoints", name)
        self.model.save(path)
        return path

    def fit(self) -> List[EpochLog]:
        cfg = self.config.train
        os.makedirs(self.output_dir, exist_ok=True)
        log_path = os.path.join(self.output_dir, TRAIN_LOG_FILE)
        log.info(f"Training started | epochs={cfg.epochs} | queries={len(self.data.queries)} | lr={cfg.lr}")

        try:
            with open(log_path, "w", encoding="utf-8") as f:
                for epoch in tqdm(range(1, cfg.epochs + 1), desc="Training"):
                    entry = self.run_epoch(epoch)
                    self.history.append(entry)
                    f.write(entry.to_line() + "\n")
                    f.flush()
                    log.debug(f"Epoch done | epoch={epoch} | loss={entry.loss:.6f} | seconds={entry.seconds:.2f}")
                    if cfg.checkpoint_every and epoch % cfg.checkpoint_every == 0:
                        self.checkpoint(f"epoch_{epoch:04d}")
                    if cfg.eval_every and self.validate is not None and epoch % cfg.eval_every == 0:
                        report = self.validate(self.model)
                        log.info(f"Validation | epoch={epoch} | {report}")
        except Exception:
            log.exception(f"Training failed | epoch={len(self.history) + 1}")
            raise

        self.checkpoint("final")
        last = self.history[-1].loss if self.history else float("nan")
        log.info(f"Training finished | epochs={len(self.history)} | last_loss={last:.6f}")
        return self.history
