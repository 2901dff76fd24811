# stare_kg/evaluation/oracle.py
"""Loop-based reference evaluator, kept free of numpy and of the filter index."""
from fractions import Fraction
from typing import Callable, Dict, List, Sequence

from stare_kg.graph.statements import Statement


def brute_force_rank(scores: Sequence[float], gold: int, filter_set=()) -> Fraction:
    filtered = set(filter_set)
    optimistic = 1
    ties = 0
    for e, s in enumerate(scores):
        if e == gold or e in filtered:
            continue
        if s > scores[gold]:
            optimistic += 1
        elif s == scores[gold]:
            ties += 1
    return Fraction(optimistic + (optimistic + ties), 2)


def brute_force_evaluate(
    score_fn: Callable[[Statement, str], Sequence[float]],
    test_statements: Sequence[Statement],
    all_statements: Sequence[Statement],
    num_entities: int,
) -> Dict[str, List[Fraction]]:
    """Ranks per direction; `score_fn(statement, direction)` returns real-entity scores."""
    ranks = {"object": [], "subject": []}
    for st in test_statements:
        quals = sorted(st.qualifiers)
        objects = [t.object for t in all_statements
                   if t.subject == st.subject and t.relation == st.relation and sorted(t.qualifiers) == quals]
        subjects = [t.subject for t in all_statements
                    if t.object == st.object and t.relation == st.relation and sorted(t.qualifiers) == quals]
        obj_scores = list(score_fn(st, "object"))[:num_entities]
        subj_scores = list(score_fn(st, "subject"))[:num_entities]
        ranks["object"].append(brute_force_rank(obj_scores, st.object, objects))
        ranks["subject"].append(brute_force_rank(subj_scores, st.subject, subjects))
    return ranks
