# stare_kg/graph/vocabulary.py
import json
import logging
import os
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from stare_kg.errors import DoubleAugmentationError, NamespaceCollisionError
from stare_kg.graph.statements import Statement

log = logging.getLogger(__name__)

INVERSE_SUFFIX = "_inverse"
SELF_LOOP_LABEL = "self_loop"
PAD_LABEL = "[PAD]"
MASK_LABEL = "[MASK]"


class EdgeDirection(str, Enum):
    OUTGOING = "out"
    INCOMING = "in"
    SELF_LOOP = "self"


def edge_direction(relation_id: int, num_base_relations: int) -> EdgeDirection:
    """λ(r): base block -> outgoing, inverse block -> incoming, last id -> self-loop."""
    if relation_id < num_base_relations:
        return EdgeDirection.OUTGOING
    if relation_id < 2 * num_base_relations:
        return EdgeDirection.INCOMING
    return EdgeDirection.SELF_LOOP


class Vocabulary:
    """Bidirectional label <-> id maps for entities and relations.

    Relation ids are laid out as base [0, R), inverse [R, 2R), self-loop 2R
    once the vocabulary has been augmented. PAD and MASK are reserved entity
    ids placed right after the real entities.
    """

    def __init__(
        self,
        entities: Sequence[str],
        relations: Sequence[str],
        num_base_relations: Optional[int] = None,
        augmented: bool = False,
    ):
        self.entities: List[str] = list(entities)
        self.relations: List[str] = list(relations)
        self.entity_to_id: Dict[str, int] = {e: i for i, e in enumerate(self.entities)}
        self.relation_to_id: Dict[str, int] = {r: i for i, r in enumerate(self.relations)}
        self.num_base_relations = len(self.relations) if num_base_relations is None else num_base_relations
        self.augmented = augmented

        clash = self.entity_to_id.keys() & self.relation_to_id.keys()
        if clash:
            raise NamespaceCollisionError(sorted(clash)[0])

    # ---------------- sizes ----------------
    @property
    def num_entities(self) -> int:
        return len(self.entities)

    @property
    def num_relations(self) -> int:
        return len(self.relations)

    @property
    def num_derived_relations(self) -> int:
        return self.num_relations - self.num_base_relations

    @property
    def pad_id(self) -> int:
        return self.num_entities

    @property
    def mask_id(self) -> int:
        return self.num_entities + 1

    @property
    def entity_table_size(self) -> int:
        return self.num_entities + 2

    @property
    def self_loop_id(self) -> int:
        if not self.augmented:
            raise KeyError("vocabulary is not augmented; no self-loop relation")
        return 2 * self.num_base_relations

    def inverse_of(self, relation_id: int) -> int:
        if not self.augmented:
            raise KeyError("vocabulary is not augmented; no inverse relations")
        R = self.num_base_relations
        if relation_id < R:
            return relation_id + R
        if relation_id < 2 * R:
            return relation_id - R
        raise KeyError(f"self-loop relation has no inverse: {relation_id}")

    def direction(self, relation_id: int) -> EdgeDirection:
        return edge_direction(relation_id, self.num_base_relations)

    def base(self) -> "Vocabulary":
        """The vocabulary without inverse and self-loop relations (ids unchanged)."""
        return Vocabulary(self.entities, self.relations[:self.num_base_relations])

    # ---------------- lookups ----------------
    def entity_id(self, label: str) -> int:
        return self.entity_to_id[label]

    def relation_id(self, label: str) -> int:
        return self.relation_to_id[label]

    def entity_label(self, entity_id: int) -> str:
        if entity_id == self.pad_id:
            return PAD_LABEL
        if entity_id == self.mask_id:
            return MASK_LABEL
        return self.entities[entity_id]

    def relation_label(self, relation_id: int) -> str:
        return self.relations[relation_id]

    def encode(self, statement: Statement) -> Statement:
        return Statement(
            self.entity_to_id[statement.subject],
            self.relation_to_id[statement.relation],
            self.entity_to_id[statement.object],
            tuple((self.relation_to_id[qr], self.entity_to_id[qv]) for qr, qv in statement.qualifiers),
        )

    def decode(self, statement: Statement) -> Statement:
        return Statement(
            self.entities[statement.subject],
            self.relations[statement.relation],
            self.entities[statement.object],
            tuple((self.relations[qr], self.entities[qv]) for qr, qv in statement.qualifiers),
        )

    def covers(self, statement: Statement) -> bool:
        """True if every label of a raw statement is known."""
        if statement.subject not in self.entity_to_id or statement.object not in self.entity_to_id:
            return False
        if statement.relation not in self.relation_to_id:
            return False
        return all(qr in self.relation_to_id and qv in self.entity_to_id for qr, qv in statement.qualifiers)

    # ---------------- persistence ----------------
    def to_dict(self) -> dict:
        return {
            "entities": self.entities,
            "relations": self.relations,
            "num_base_relations": self.num_base_relations,
            "augmented": self.augmented,
        }

    def save(self, path: str):
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, ensure_ascii=False)

    @classmethod
    def load(cls, path: str) -> "Vocabulary":
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
        return cls(data["entities"], data["relations"], data["num_base_relations"], data["augmented"])

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self.to_dict() == other.to_dict()

    def __repr__(self) -> str:
        return (f"Vocabulary(entities={self.num_entities}, relations={self.num_relations}, "
                f"base_relations={self.num_base_relations}, augmented={self.augmented})")


def build_vocabulary(statements: Iterable[Statement]) -> Vocabulary:
    """Assign dense ids in first-occurrence order (s, r, o, qr1, qv1, ...)."""
    entities: Dict[str, None] = {}
    relations: Dict[str, None] = {}
    n = 0
    for st in statements:
        n += 1
        entities.setdefault(st.subject)
        relations.setdefault(st.relation)
        entities.setdefault(st.object)
        for qr, qv in st.qualifiers:
            relations.setdefault(qr)
            entities.setdefault(qv)
    vocab = Vocabulary(list(entities), list(relations))
    log.info(f"Vocabulary built | statements={n} | entities={vocab.num_entities} | relations={vocab.num_relations}")
    return vocab


def encode_statements(statements: Iterable[Statement], vocab: Vocabulary) -> List[Statement]:
    return [vocab.encode(st) for st in statements]


def decode_statements(statements: Iterable[Statement], vocab: Vocabulary) -> List[Statement]:
    return [vocab.decode(st) for st in statements]


def augment_edges(statements: Sequence[Statement], vocab: Vocabulary) -> Tuple[List[Statement], Vocabulary]:
    """Append inverse facts (same qualifiers) and one self-loop fact per entity.

    `statements` are id-encoded base facts. The returned vocabulary carries
    the |R| inverse relations and the single self-loop relation.
    """
    if vocab.augmented or vocab.num_derived_relations:
        raise DoubleAugmentationError("vocabulary already carries derived relations")
    R = vocab.num_base_relations
    for st in statements:
        if st.relation >= R:
            raise DoubleAugmentationError(f"statement uses derived relation id {st.relation}")

    relations = vocab.relations + [label + INVERSE_SUFFIX for label in vocab.relations] + [SELF_LOOP_LABEL]
    aug_vocab = Vocabulary(vocab.entities, relations, num_base_relations=R, augmented=True)

    out = list(statements)
    out.extend(Statement(st.object, st.relation + R, st.subject, st.qualifiers) for st in statements)
    self_loop = aug_vocab.self_loop_id
    out.extend(Statement(v, self_loop, v, ()) for v in range(vocab.num_entities))
    log.info(f"Edges augmented | base={len(statements)} | total={len(out)} | relations={aug_vocab.num_relations}")
    return out, aug_vocab


def invert_statement(statement: Statement, vocab: Vocabulary) -> Statement:
    return Statement(statement.object, vocab.inverse_of(statement.relation), statement.subject, statement.qualifiers)
