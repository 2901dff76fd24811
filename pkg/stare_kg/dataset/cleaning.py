# stare_kg/dataset/cleaning.py
"""Split cleaning: literals, main-triple leakage, unseen test vocabulary, rare entities."""
import logging
import re
from collections import Counter
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from stare_kg.config import DEFAULT_LITERAL_PATTERN
from stare_kg.dataset.io import Split
from stare_kg.graph.statements import Statement, mentioned_entities, mentioned_relations
from stare_kg.run_config import LiteralMode

log = logging.getLogger(__name__)

LiteralDetector = Callable[[str], bool]


class CleaningReport(BaseModel):
    literal_statements_removed: int = 0
    literal_qualifiers_removed: int = 0
    leakage_train_removed: int = 0
    leakage_valid_removed: int = 0
    unseen_test_removed: int = 0


def make_literal_detector(pattern: Optional[str] = None) -> LiteralDetector:
    """Label-pattern predicate; the default treats numbers, dates and quoted strings as literals."""
    regex = re.compile(pattern or DEFAULT_LITERAL_PATTERN)
    return lambda label: bool(regex.match(str(label)))


# ---------------- literals ----------------
def strip_literal_statements(
    statements: Sequence[Statement],
    is_literal: LiteralDetector,
    mode: LiteralMode = LiteralMode.DROP_QUALIFIER,
) -> Tuple[List[Statement], int, int]:
    """Returns (statements', statements removed, qualifier pairs removed).

    DROP_STATEMENT removes any statement with a literal object or qualifier
    value. DROP_QUALIFIER removes literal-object statements and only the
    literal qualifier pairs of the rest.
    """
    mode = LiteralMode(mode)
    kept, dropped_statements, dropped_quals = [], 0, 0
    for st in statements:
        if is_literal(st.object):
            dropped_statements += 1
            continue
        literal_quals = [q for q in st.qualifiers if is_literal(q[1])]
        if not literal_quals:
            kept.append(st)
        elif mode is LiteralMode.DROP_STATEMENT:
            dropped_statements += 1
        else:
            kept.append(st._replace(qualifiers=tuple(q for q in st.qualifiers if not is_literal(q[1]))))
            dropped_quals += len(literal_quals)
    return kept, dropped_statements, dropped_quals


# ---------------- leakage ----------------
def count_leakage(split: Split) -> int:
    test_triples = {st.main_triple for st in split.test}
    return sum(st.main_triple in test_triples for st in split.train + split.valid)


def remove_leakage(split: Split) -> Tuple[Split, int, int]:
    """Drop train/valid statements whose main triple is a test main triple."""
    test_triples = {st.main_triple for st in split.test}
    train = [st for st in split.train if st.main_triple not in test_triples]
    valid = [st for st in split.valid if st.main_triple not in test_triples]
    return Split(train, valid, list(split.test)), len(split.train) - len(train), len(split.valid) - len(valid)


# ---------------- unseen ----------------
def filter_unseen(split: Split) -> Tuple[Split, int]:
    """Drop test statements mentioning an entity or relation absent from train ∪ valid."""
    known_entities, known_relations = set(), set()
    for st in split.train + split.valid:
        known_entities.update(mentioned_entities(st))
        known_relations.update(mentioned_relations(st))
    test = [
        st for st in split.test
        if set(mentioned_entities(st)) <= known_entities and set(mentioned_relations(st)) <= known_relations
    ]
    return Split(list(split.train), list(split.valid), test), len(split.test) - len(test)


def clean_split(
    split: Split,
    is_literal: Optional[LiteralDetector] = None,
    mode: LiteralMode = LiteralMode.DROP_QUALIFIER,
) -> Tuple[Split, CleaningReport]:
    """literal stripping -> remove_leakage -> filter_unseen (order matters)."""
    report = CleaningReport()
    if is_literal is not None:
        parts = []
        for statements in split:
            kept, n_st, n_q = strip_literal_statements(statements, is_literal, mode)
            parts.append(kept)
            report.literal_statements_removed += n_st
            report.literal_qualifiers_removed += n_q
        split = Split(*parts)

    split, report.leakage_train_removed, report.leakage_valid_removed = remove_leakage(split)
    split, report.unseen_test_removed = filter_unseen(split)
    log.info(f"Split cleaned | {report.model_dump()} | sizes={split.sizes()}")
    return split, report


# ---------------- rarity / splitting ----------------
def filter_rare_entities(statements: Sequence[Statement], min_count: int = 2, fixed_point: bool = True) -> List[Statement]:
    current = list(statements)
    rounds = 0
    while True:
        rounds += 1
        counts = Counter(e for st in current for e in mentioned_entities(st))
        rare = {e for e, c in counts.items() if c < min_count}
        if not rare:
            break
        filtered = []
        for st in current:
            if st.subject in rare or st.object in rare:
                continue
            filtered.append(st._replace(qualifiers=tuple(q for q in st.qualifiers if q[1] not in rare)))
        changed = filtered != current
        current = filtered
        if not fixed_point or not changed:
            break
    log.info(f"Rare entities filtered | min_count={min_count} | rounds={rounds} | kept={len(current)}/{len(statements)}")
    return current


def split_statements(statements: Sequence[Statement], valid_fraction: float, test_fraction: float, seed: int) -> Split:
    if valid_fraction < 0 or test_fraction < 0 or valid_fraction + test_fraction > 1:
        raise ValueError(f"invalid split fractions: valid={valid_fraction}, test={test_fraction}")
    order = np.random.default_rng(seed).permutation(len(statements))
    n_test = int(round(len(statements) * test_fraction))
    n_valid = int(round(len(statements) * valid_fraction))
    test = [statements[i] for i in order[:n_test]]
    valid = [statements[i] for i in order[n_test:n_test + n_valid]]
    train = [statements[i] for i in order[n_test + n_valid:]]
    return Split(train, valid, test)
