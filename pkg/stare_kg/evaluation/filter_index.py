# stare_kg/evaluation/filter_index.py
import logging
from collections import defaultdict
from enum import Enum
from typing import Dict, FrozenSet, Sequence, Tuple

from stare_kg.errors import EvaluationIntegrityError
from stare_kg.graph.statements import Statement
from stare_kg.graph.vocabulary import Vocabulary

log = logging.getLogger(__name__)


class Direction(str, Enum):
    OBJECT = "object"
    SUBJECT = "subject"


FilterKey = Tuple[int, int, Tuple[Tuple[int, int], ...], Direction]


def filter_key(statement: Statement, direction: Direction) -> FilterKey:
    """(known entity, base relation, sorted Q, direction); the answer is the other end."""
    head = statement.subject if direction is Direction.OBJECT else statement.object
    return (head, statement.relation, statement.sorted_qualifiers(), direction)


def answer(statement: Statement, direction: Direction) -> int:
    return statement.object if direction is Direction.OBJECT else statement.subject


class FilterIndex:
    """Every true completion of a query key across train ∪ valid ∪ test."""

    def __init__(self, entries: Dict[FilterKey, FrozenSet[int]]):
        self.entries = entries

    def __len__(self):
        return len(self.entries)

    def __contains__(self, key) -> bool:
        return key in self.entries

    def __getitem__(self, key: FilterKey) -> FrozenSet[int]:
        try:
            return self.entries[key]
        except KeyError:
            raise EvaluationIntegrityError(f"query key missing from the filter index: {key}") from None


def build_filter_index(
    train: Sequence[Statement],
    valid: Sequence[Statement],
    test: Sequence[Statement],
    vocab: Vocabulary,
) -> FilterIndex:
    """Index id-encoded base statements of all three splits in both directions."""
    entries = defaultdict(set)
    for st in list(train) + list(valid) + list(test):
        if st.relation >= vocab.num_base_relations or max(st.subject, st.object) >= vocab.num_entities:
            raise EvaluationIntegrityError(f"statement outside the base vocabulary: {st}")
        for direction in Direction:
            entries[filter_key(st, direction)].add(answer(st, direction))
    index = FilterIndex({k: frozenset(v) for k, v in entries.items()})
    log.info(f"Filter index built | keys={len(index)}")
    return index
