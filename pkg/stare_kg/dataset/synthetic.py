# stare_kg/dataset/synthetic.py
"""Seeded synthetic hyper-relational KGs for smoke runs, gradient checks and tests."""
import logging
from typing import List

import numpy as np

from stare_kg.graph.statements import Statement

log = logging.getLogger(__name__)


def entity_label(i: int) -> str:
    return f"Q{i}"


def relation_label(j: int) -> str:
    return f"P{j}"


def generate_synthetic_kg(
    num_entities: int = 50,
    num_relations: int = 5,
    num_statements: int = 200,
    qualified_fraction: float = 0.5,
    max_qualifiers: int = 3,
    seed: int = 0,
) -> List[Statement]:
    """Random statements over Q0..Q{n-1} / P0..P{m-1}, distinct by (s, r, o, sorted Q)."""
    if num_entities < 2 or num_relations < 1:
        raise ValueError("need at least 2 entities and 1 relation")
    rng = np.random.default_rng(seed)
    seen, out = set(), []
    attempts = 0
    while len(out) < num_statements:
        attempts += 1
        if attempts > 100 * num_statements:
            raise ValueError(f"cannot draw {num_statements} distinct statements from this vocabulary")
        s, o = rng.choice(num_entities, size=2, replace=False).tolist()
        r = int(rng.integers(num_relations))
        quals = ()
        if max_qualifiers > 0 and rng.random() < qualified_fraction:
            n_q = int(rng.integers(1, max_qualifiers + 1))
            quals = tuple(
                (relation_label(int(rng.integers(num_relations))), entity_label(int(rng.integers(num_entities))))
                for _ in range(n_q)
            )
        st = Statement(entity_label(s), relation_label(r), entity_label(o), quals)
        key = (st.main_triple, st.sorted_qualifiers())
        if key in seen:
            continue
        seen.add(key)
        out.append(st)
    log.info(f"Synthetic KG generated | entities={num_entities} | relations={num_relations} | statements={len(out)}")
    return out


def generate_context_kg(
    num_subjects: int = 30,
    num_relations: int = 2,
    num_contexts: int = 4,
    seed: int = 0,
) -> List[Statement]:
    """(s, r) pairs that are ambiguous without their qualifier.

    Every subject has one statement per (relation, context); the object is
    fixed by (relation, context) alone, so the qualifier value pins down the
    answer while the main triple does not.
    """
    rng = np.random.default_rng(seed)
    subjects = [f"S{i}" for i in range(num_subjects)]
    contexts = [f"C{c}" for c in range(num_contexts)]
    objects = {(r, c): f"O{r}_{c}" for r in range(num_relations) for c in range(num_contexts)}
    out = []
    for s in subjects:
        for r in range(num_relations):
            for c in range(num_contexts):
                out.append(Statement(s, relation_label(r), objects[(r, c)], (("context", contexts[c]),)))
    order = rng.permutation(len(out))
    return [out[i] for i in order]
