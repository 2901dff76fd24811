# tests/test_evaluation.py
import random
from fractions import Fraction

import numpy as np
import pytest

from stare_kg.dataset.io import Split, encode_split
from stare_kg.dataset.synthetic import generate_synthetic_kg
from stare_kg.errors import EvaluationIntegrityError
from stare_kg.evaluation.evaluator import direction_query, evaluate_model, model_scorer
from stare_kg.evaluation.filter_index import Direction, build_filter_index, filter_key
from stare_kg.evaluation.oracle import brute_force_evaluate, brute_force_rank
from stare_kg.evaluation.ranking import compute_metrics, filtered_rank
from stare_kg.graph.statements import Statement
from stare_kg.graph.vocabulary import Vocabulary
from stare_kg.training.trainer import build_graph
from tests.helpers import toy_model

MAX_LEN = 9


def _chain(n):
    """Q0 -> Q1 -> ... -> Q{n-1}: every query key has exactly one answer."""
    vocab = Vocabulary([f"Q{i}" for i in range(n)], ["P0"])
    statements = [Statement(i, 0, i + 1) for i in range(n - 1)]
    _, aug_vocab, _ = build_graph(statements, vocab)
    return vocab, aug_vocab, statements


# ---------------- filtered_rank ----------------
def test_rank_examples():
    assert filtered_rank([0.9, 0.5, 0.1], 0) == 1
    assert filtered_rank([0.9, 0.5, 0.1], 2, {1}) == 2
    for gold in range(3):
        assert filtered_rank([0.3, 0.3, 0.3], gold) == 2


def test_rank_ignores_gold_in_filter():
    assert filtered_rank([0.1, 0.9, 0.5], 2, {1, 2}) == 1


def test_rank_of_masked_gold():
    with pytest.raises(EvaluationIntegrityError):
        filtered_rank([0.2, -np.inf], 1)
    with pytest.raises(EvaluationIntegrityError):
        filtered_rank([0.2, 0.1], 5)


def test_rank_matches_brute_force():
    rng = random.Random(0)
    for _ in range(1000):
        n = rng.randrange(1, 12)
        scores = [float(rng.randrange(4)) for _ in range(n)]
        gold = rng.randrange(n)
        filt = {e for e in range(n) if rng.random() < 0.3}
        assert filtered_rank(scores, gold, filt) == brute_force_rank(scores, gold, filt)


def test_filtering_never_increases_rank():
    rng = random.Random(1)
    for _ in range(200):
        scores = [float(rng.randrange(5)) for _ in range(10)]
        gold = rng.randrange(10)
        small = {e for e in range(10) if rng.random() < 0.2}
        large = small | {e for e in range(10) if rng.random() < 0.3}
        assert filtered_rank(scores, gold, large) <= filtered_rank(scores, gold, small)


def test_rank_is_shift_invariant():
    rng = random.Random(2)
    for _ in range(200):
        scores = [float(rng.randrange(5)) for _ in range(8)]
        shifted = [s + 17.0 for s in scores]
        gold = rng.randrange(8)
        assert filtered_rank(scores, gold) == filtered_rank(shifted, gold)


# ---------------- metrics ----------------
def test_metric_examples():
    m = compute_metrics([Fraction(1), Fraction(2), Fraction(10)])
    assert m.mrr == pytest.approx(1.6 / 3)
    assert m.hits[1] == pytest.approx(1 / 3)
    assert m.hits[5] == pytest.approx(2 / 3)
    assert m.hits[10] == 1.0
    assert m.count == 3


def test_perfect_ranks():
    m = compute_metrics([Fraction(1)] * 4)
    assert m.mrr == 1.0
    assert set(m.hits.values()) == {1.0}


def test_metrics_match_definition():
    rng = random.Random(3)
    ranks = [Fraction(rng.randrange(2, 60), 2) for _ in range(50)]
    m = compute_metrics(ranks, hits_at=(1, 3, 10))
    assert m.mrr == pytest.approx(sum(1 / float(r) for r in ranks) / 50)
    for k in (1, 3, 10):
        assert m.hits[k] == pytest.approx(sum(float(r) <= k for r in ranks) / 50)
    assert m.hits[1] <= m.hits[3] <= m.hits[10]


def test_metrics_need_ranks():
    with pytest.raises(ValueError):
        compute_metrics([])


# ---------------- filter index ----------------
def test_filter_index_collects_all_splits():
    vocab = Vocabulary(["a", "b", "c", "d"], ["r"])
    index = build_filter_index([Statement(0, 0, 1)], [Statement(0, 0, 2)], [Statement(3, 0, 1)], vocab)
    assert index[filter_key(Statement(0, 0, 1), Direction.OBJECT)] == {1, 2}
    assert index[filter_key(Statement(0, 0, 1), Direction.SUBJECT)] == {0, 3}


def test_filter_index_separates_qualifier_sets():
    vocab = Vocabulary(["a", "b", "c"], ["r", "q"])
    index = build_filter_index([Statement(0, 0, 1, ((1, 2),)), Statement(0, 0, 2)], [], [], vocab)
    assert index[filter_key(Statement(0, 0, 1, ((1, 2),)), Direction.OBJECT)] == {1}


def test_filter_index_rejects_derived_relations():
    vocab = Vocabulary(["a", "b"], ["r"])
    with pytest.raises(EvaluationIntegrityError):
        build_filter_index([Statement(0, 1, 1)], [], [], vocab)


# ---------------- evaluate_model ----------------
def _oracle_scorer(table_size):
    def score(queries):
        out = np.zeros((len(queries), table_size))
        for row, q in zip(out, queries):
            row[q.target] = 1.0
        return out
    return score


def test_oracle_scorer_is_perfect():
    vocab, aug, statements = _chain(6)
    filters = build_filter_index(statements, [], [], vocab)
    report = evaluate_model(_oracle_scorer(aug.entity_table_size), statements, filters, aug, max_len=MAX_LEN)
    assert report.object.mrr == report.subject.mrr == report.both.mrr == 1.0
    assert report.both.count == 2 * len(statements)


def test_uniform_scorer_mrr():
    n = 6
    vocab, aug, statements = _chain(n)
    filters = build_filter_index(statements, [], [], vocab)
    report = evaluate_model(lambda qs: np.zeros((len(qs), aug.entity_table_size)),
                            statements, filters, aug, max_len=MAX_LEN)
    # every rank is (1 + n) / 2 under the tie rule
    assert all(r == Fraction(n + 1, 2) for r in report.ranks["object"] + report.ranks["subject"])
    assert report.both.mrr == pytest.approx(2 / (n + 1))


def test_reserved_columns_never_compete():
    vocab, aug, statements = _chain(4)
    filters = build_filter_index(statements, [], [], vocab)

    def score(queries):
        out = np.zeros((len(queries), aug.entity_table_size))
        out[:, aug.num_entities:] = 100.0
        for row, q in zip(out, queries):
            row[q.target] = 1.0
        return out

    assert evaluate_model(score, statements, filters, aug, max_len=MAX_LEN).both.mrr == 1.0


def test_evaluation_matches_brute_force():
    statements = generate_synthetic_kg(20, 3, 60, qualified_fraction=0.5, max_qualifiers=3, seed=4)
    vocab, split = encode_split(Split(statements[:40], [], statements[40:]))
    _, aug, _ = build_graph(split.train, vocab)
    filters = build_filter_index(split.train, split.valid, split.test, vocab)

    def scores_for(query):
        rng = np.random.default_rng(abs(hash(query.tokens)))
        return rng.integers(0, 5, size=aug.entity_table_size).astype(np.float64)

    report = evaluate_model(lambda qs: np.stack([scores_for(q) for q in qs]), split.test, filters, aug,
                            max_len=MAX_LEN, batch_size=7)

    def score_fn(st, direction):
        return scores_for(direction_query(st, Direction(direction), aug, MAX_LEN))

    oracle = brute_force_evaluate(score_fn, split.test, split.train + split.test, vocab.num_entities)
    assert report.ranks["object"] == oracle["object"]
    assert report.ranks["subject"] == oracle["subject"]


def test_missing_filter_key_is_an_error():
    vocab, aug, statements = _chain(5)
    filters = build_filter_index(statements[:2], [], [], vocab)
    with pytest.raises(EvaluationIntegrityError):
        evaluate_model(_oracle_scorer(aug.entity_table_size), statements, filters, aug, max_len=MAX_LEN)


def test_nothing_to_evaluate():
    vocab, aug, statements = _chain(3)
    filters = build_filter_index(statements, [], [], vocab)
    with pytest.raises(ValueError):
        evaluate_model(_oracle_scorer(aug.entity_table_size), [], filters, aug)


def test_report_records_and_table():
    vocab, aug, statements = _chain(5)
    filters = build_filter_index(statements, [], [], vocab)
    report = evaluate_model(_oracle_scorer(aug.entity_table_size), statements, filters, aug, max_len=MAX_LEN)
    records = report.to_records()
    assert {"metric": "mrr", "direction": "both", "value": 1.0} in records
    assert len(records) == 3 * 4
    table = report.format_table()
    assert table.splitlines()[0].split()[:3] == ["direction", "count", "MRR"]
    assert "mrr=1.0000" in str(report)


def test_model_scorer_on_toy_model(toy_config):
    statements = generate_synthetic_kg(8, 2, 12, max_qualifiers=2, seed=5)
    model, data = toy_model(statements, toy_config)
    base = data.vocab.base()
    ids = [base.encode(st) for st in statements]
    filters = build_filter_index(ids, [], [], base)
    report = evaluate_model(model_scorer(model, data.graph), ids, filters, data.vocab,
                            max_len=toy_config.decoder.max_len)
    assert 0.0 < report.both.mrr <= 1.0
    assert report.both.hits[1] <= report.both.hits[5] <= report.both.hits[10]
