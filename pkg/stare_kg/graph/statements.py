# stare_kg/graph/statements.py
from typing import Hashable, NamedTuple, Tuple



class Statement(NamedTuple):
    """One hyper-relational fact (s, r, o, [(qr, qv), ...]).

    Fields hold either raw labels (str) or vocabulary ids (int); the
    qualifier order is kept exactly as parsed.
    """
    subject: Hashable
    relation: Hashable
    object: Hashable
    qualifiers: Tuple[Tuple[Hashable, Hashable], ...] = ()

    @property
    def main_triple(self) -> tuple:
        return (self.subject, self.relation, self.object)

    @property
    def has_qualifiers(self) -> bool:
        return len(self.qualifiers) > 0

    def sorted_qualifiers(self) -> tuple:
        return tuple(sorted(self.qualifiers))

    def qualifier_key(self) -> tuple:
        # 1-N 키/필터 키에서 쓰는 정렬된 qualifier multiset
        return (self.subject, self.relation, self.sorted_qualifiers())

    def without_qualifiers(self) -> "Statement":
        return Statement(self.subject, self.relation, self.object, ())

    def to_fields(self) -> list:
        fields = [self.subject, self.relation, self.object]
        for qr, qv in self.qualifiers:
            fields.extend((qr, qv))
        return fields


def make_statement(s, r, o, qualifiers=()) -> Statement:
    return Statement(s, r, o, tuple((qr, qv) for qr, qv in qualifiers))


def mentioned_entities(statement: Statement) -> list:
    return [statement.subject, statement.object] + [qv for _, qv in statement.qualifiers]


def mentioned_relations(statement: Statement) -> list:
    return [statement.relation] + [qr for qr, _ in statement.qualifiers]
