# stare_kg/evaluation/evaluator.py
"""Filtered subject/object evaluation of any scorer over id-encoded test statements."""
import logging
from typing import Callable, Dict, List, Sequence

import numpy as np
import torch
from tqdm import tqdm

from stare_kg.evaluation.filter_index import Direction, FilterIndex, answer, filter_key
from stare_kg.evaluation.ranking import (
    DEFAULT_HITS_AT, RankReport, average_metrics, compute_metrics, filtered_rank,
)
from stare_kg.graph.statements import Statement
from stare_kg.graph.vocabulary import Vocabulary, invert_statement
from stare_kg.model.decoders import Query, collate_queries, linearize_query
from stare_kg.model.encoder import GraphTensors
from stare_kg.model.link_predictor import LinkPredictor

log = logging.getLogger(__name__)

# queries -> (B, entity_table_size) scores
Scorer = Callable[[Sequence[Query]], np.ndarray]


def model_scorer(model: LinkPredictor, graph: GraphTensors, device: str = "cpu") -> Scorer:
    """Encode the graph once (eval mode, no grad) and score query batches against it."""
    model.eval()
    graph = graph.to(device)
    with torch.no_grad():
        store = model.encode(graph)

    def score(queries: Sequence[Query]) -> np.ndarray:
        tokens, mask, _ = collate_queries(queries, device=device)
        with torch.no_grad():
            return model.score(store, tokens, mask).double().cpu().numpy()

    return score


def direction_query(statement: Statement, direction: Direction, vocab: Vocabulary, max_len: int,
                    triple_only: bool = False) -> Query:
    """Subject prediction = object prediction on the inverse-relation statement (qualifiers kept)."""
    if direction is Direction.SUBJECT:
        statement = invert_statement(statement, vocab)
    return linearize_query(statement, vocab, max_len, triple_only=triple_only)


def evaluate_model(
    scorer: Scorer,
    test_statements: Sequence[Statement],
    filter_index: FilterIndex,
    vocab: Vocabulary,
    max_len: int = 15,
    triple_only: bool = False,
    batch_size: int = 256,
    hits_at: Sequence[int] = DEFAULT_HITS_AT,
) -> RankReport:
    """`vocab` is the augmented vocabulary; reserved PAD/MASK columns never compete."""
    if not test_statements:
        raise ValueError("no statements to evaluate")
    ranks: Dict[str, List] = {}
    n = vocab.num_entities
    for direction in Direction:
        work = [(st, filter_index[filter_key(st, direction)]) for st in test_statements]
        direction_ranks = []
        for start in tqdm(range(0, len(work), batch_size), desc=f"Evaluating {direction.value}", leave=False):
            chunk = work[start:start + batch_size]
            queries = [direction_query(st, direction, vocab, max_len, triple_only) for st, _ in chunk]
            scores = np.array(scorer(queries), dtype=np.float64, copy=True)
            scores[:, n:] = -np.inf
            for row, (st, filter_set) in zip(scores, chunk):
                direction_ranks.append(filtered_rank(row, answer(st, direction), filter_set))
        ranks[direction.value] = direction_ranks

    obj = compute_metrics(ranks["object"], hits_at)
    subj = compute_metrics(ranks["subject"], hits_at)
    report = RankReport(object=obj, subject=subj, both=average_metrics(obj, subj), ranks=ranks)
    log.info(f"Evaluation done | statements={len(test_statements)} | {report}")
    return report
