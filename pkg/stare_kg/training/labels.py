# stare_kg/training/labels.py
"""1-N targets: one query key (s, r, sorted Q) scored against every entity."""
import logging
from collections import defaultdict
from typing import Dict, List, Sequence, Tuple

import torch

from stare_kg.errors import StareError
from stare_kg.graph.statements import Statement
from stare_kg.graph.vocabulary import Vocabulary

log = logging.getLogger(__name__)

QueryKey = Tuple[int, int, Tuple[Tuple[int, int], ...]]


def query_key(statement: Statement) -> QueryKey:
    return statement.qualifier_key()


class LabelIndex:
    """query key -> sorted tuple of every object completing it in the train set."""

    def __init__(self, positives: Dict[QueryKey, Tuple[int, ...]]):
        self.positives = positives

    def __len__(self):
        return len(self.positives)

    def __getitem__(self, key: QueryKey) -> Tuple[int, ...]:
        return self.positives[key]

    def __contains__(self, key) -> bool:
        return key in self.positives

    def keys(self) -> List[QueryKey]:
        return list(self.positives)


def build_label_index(train_statements: Sequence[Statement], vocab: Vocabulary) -> LabelIndex:
    """Index an augmented train set; self-loop facts are graph plumbing and are skipped."""
    self_loop = vocab.self_loop_id if vocab.augmented else -1
    positives = defaultdict(set)
    for st in train_statements:
        if st.relation == self_loop:
            continue
        positives[query_key(st)].add(st.object)
    index = LabelIndex({k: tuple(sorted(v)) for k, v in positives.items()})
    log.info(f"Label index built | keys={len(index)}")
    return index


def build_training_queries(label_index: LabelIndex) -> List[Statement]:
    """One representative statement per 1-N key (object = first positive)."""
    return [Statement(s, r, label_index[(s, r, q)][0], q) for s, r, q in label_index.keys()]


def build_labels(key: QueryKey, label_index: LabelIndex, vocab: Vocabulary, epsilon: float) -> torch.Tensor:
    """(1 - ε)·y + ε/|V| over the full entity table (reserved ids smoothed like negatives)."""
    if key not in label_index or not label_index[key]:
        raise StareError(f"query key without a positive entity: {key}")
    y = torch.zeros(vocab.entity_table_size, dtype=torch.float64)
    y[list(label_index[key])] = 1.0
    return (1.0 - epsilon) * y + epsilon / vocab.num_entities


def label_matrix(keys: Sequence[QueryKey], label_index: LabelIndex, vocab: Vocabulary, epsilon: float,
                 dtype=torch.float32) -> torch.Tensor:
    rows = torch.zeros(len(keys), vocab.entity_table_size, dtype=dtype)
    for i, key in enumerate(keys):
        positives = label_index[key]
        if not positives:
            raise StareError(f"query key without a positive entity: {key}")
        rows[i, list(positives)] = 1.0
    return (1.0 - epsilon) * rows + epsilon / vocab.num_entities
