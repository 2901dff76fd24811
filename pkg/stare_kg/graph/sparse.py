# stare_kg/graph/sparse.py
import logging
from typing import List, Sequence

import numpy as np

from stare_kg.errors import GraphIntegrityError
from stare_kg.graph.statements import Statement
from stare_kg.graph.vocabulary import Vocabulary

log = logging.getLogger(__name__)

# triple matrix columns
S, O, R, K = 0, 1, 2, 3
# qualifier matrix columns
QR, QV, QK = 0, 1, 2


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class HyperGraph:
    """Twin coordinate-list matrices of a hyper-relational graph.

    `triples` is (n, 4) with columns (s, o, r, k); `qualifiers` is (q, 3)
    with columns (qr, qv, k). Rows of the qualifier matrix point back to
    their fact through k, so memory is O(|E| + |Q|).
    """

    def __init__(self, triples: np.ndarray, qualifiers: np.ndarray, num_entities: int, num_relations: int):
        self.triples = _frozen(np.asarray(triples, dtype=np.int64).reshape(-1, 4))
        self.qualifiers = _frozen(np.asarray(qualifiers, dtype=np.int64).reshape(-1, 3))
        self.num_entities = num_entities
        self.num_relations = num_relations
        self.validate()

    @property
    def num_facts(self) -> int:
        return int(self.triples.shape[0])

    @property
    def num_qualifier_rows(self) -> int:
        return int(self.qualifiers.shape[0])

    @property
    def qualifier_counts(self) -> np.ndarray:
        counts = np.zeros(self.num_facts, dtype=np.int64)
        if self.num_qualifier_rows:
            k_to_row = np.empty(int(self.triples[:, K].max()) + 1, dtype=np.int64)
            k_to_row[self.triples[:, K]] = np.arange(self.num_facts)
            np.add.at(counts, k_to_row[self.qualifiers[:, QK]], 1)
        return counts

    def validate(self):
        ks = self.triples[:, K]
        if len(np.unique(ks)) != len(ks):
            raise GraphIntegrityError("fact index k is not unique in the triple matrix")
        if self.num_qualifier_rows:
            dangling = np.setdiff1d(self.qualifiers[:, QK], ks)
            if dangling.size:
                raise GraphIntegrityError(f"qualifier rows reference unknown facts: k={dangling[:5].tolist()}")
        if self.num_facts:
            if self.triples[:, [S, O]].max() >= self.num_entities or self.triples[:, R].max() >= self.num_relations:
                raise GraphIntegrityError("triple matrix id out of vocabulary range")
        if self.num_qualifier_rows:
            if self.qualifiers[:, QV].max() >= self.num_entities or self.qualifiers[:, QR].max() >= self.num_relations:
                raise GraphIntegrityError("qualifier matrix id out of vocabulary range")

    def to_statements(self) -> List[Statement]:
        by_k = {int(k): [] for k in self.triples[:, K]}
        for qr, qv, k in self.qualifiers.tolist():
            by_k[k].append((qr, qv))
        return [Statement(s, r, o, tuple(by_k[k])) for s, o, r, k in self.triples.tolist()]

    def __eq__(self, other) -> bool:
        return (isinstance(other, HyperGraph)
                and np.array_equal(self.triples, other.triples)
                and np.array_equal(self.qualifiers, other.qualifiers)
                and self.num_entities == other.num_entities
                and self.num_relations == other.num_relations)

    def __repr__(self) -> str:
        return f"HyperGraph(facts={self.num_facts}, qualifier_rows={self.num_qualifier_rows})"


def to_sparse(statements: Sequence[Statement], vocab: Vocabulary) -> HyperGraph:
    """Fact j gets k = j; its qualifier pairs become rows sharing that k."""
    triples = np.empty((len(statements), 4), dtype=np.int64)
    qual_rows = []
    for k, st in enumerate(statements):
        triples[k] = (st.subject, st.object, st.relation, k)
        qual_rows.extend((qr, qv, k) for qr, qv in st.qualifiers)
    qualifiers = np.array(qual_rows, dtype=np.int64).reshape(-1, 3)
    graph = HyperGraph(triples, qualifiers, vocab.num_entities, vocab.num_relations)
    log.info(f"Sparse graph | facts={graph.num_facts} | qualifier_rows={graph.num_qualifier_rows}")
    return graph
