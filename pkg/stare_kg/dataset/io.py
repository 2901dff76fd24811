# stare_kg/dataset/io.py
"""Statement files: one statement per line, `s,r,o[,qr,qv]*`, UTF-8."""
import logging
import os
from typing import Iterable, List, NamedTuple, Optional, Tuple

from stare_kg.config import FIELD_SEPARATOR, SPLIT_FILES
from stare_kg.errors import StatementParseError
from stare_kg.graph.statements import Statement
from stare_kg.graph.vocabulary import Vocabulary, build_vocabulary, encode_statements

log = logging.getLogger(__name__)


class Split(NamedTuple):
    train: List[Statement]
    valid: List[Statement]
    test: List[Statement]

    def all_statements(self) -> List[Statement]:
        return self.train + self.valid + self.test

    def sizes(self) -> dict:
        return {"train": len(self.train), "valid": len(self.valid), "test": len(self.test)}


def parse_line(line: str, path: str = "<input>", line_no: int = 0) -> Optional[Statement]:
    line = line.strip()
    if not line:
        return None
    fields = [f.strip() for f in line.split(FIELD_SEPARATOR)]
    if len(fields) < 3:
        raise StatementParseError(path, line_no, f"expected at least 3 fields, got {len(fields)}")
    if (len(fields) - 3) % 2:
        raise StatementParseError(path, line_no, f"odd qualifier field count ({len(fields) - 3})")
    if any(not f for f in fields):
        raise StatementParseError(path, line_no, "empty field")
    quals = tuple((fields[i], fields[i + 1]) for i in range(3, len(fields), 2))
    return Statement(fields[0], fields[1], fields[2], quals)


def parse_lines(lines: Iterable[str], path: str = "<input>") -> List[Statement]:
    statements = []
    for line_no, line in enumerate(lines, start=1):
        st = parse_line(line, path, line_no)
        if st is not None:
            statements.append(st)
    return statements


def parse_statements(path: str) -> List[Statement]:
    with open(path, "r", encoding="utf-8") as f:
        statements = parse_lines(f, path)
    log.info(f"Statements parsed | path={path} | count={len(statements)}")
    return statements


def format_statement(statement: Statement) -> str:
    return FIELD_SEPARATOR.join(str(f) for f in statement.to_fields())


def write_statements(path: str, statements: Iterable[Statement]):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    count = 0
    with open(path, "w", encoding="utf-8") as f:
        for st in statements:
            f.write(format_statement(st) + "\n")
            count += 1
    log.info(f"Statements written | path={path} | count={count}")


def canonical_order(statements: Iterable[Statement]) -> List[Statement]:
    return sorted(statements, key=lambda st: (st.subject, st.relation, st.object, st.sorted_qualifiers()))


def load_split(directory: str) -> Split:
    """train.txt and test.txt are required; valid.txt may be absent (JF17K)."""
    parts = {}
    for name, filename in SPLIT_FILES.items():
        path = os.path.join(directory, filename)
        if not os.path.exists(path):
            if name == "valid":
                log.warning(f"No validation file | dir={directory}")
                parts[name] = []
                continue
            raise FileNotFoundError(path)
        parts[name] = parse_statements(path)
    return Split(**parts)


def save_split(split: Split, directory: str, sort: bool = True):
    for name, filename in SPLIT_FILES.items():
        statements = getattr(split, name)
        write_statements(os.path.join(directory, filename), canonical_order(statements) if sort else statements)


def encode_split(split: Split) -> Tuple[Vocabulary, Split]:
    """Base vocabulary over every split (train first) and the id-encoded split."""
    vocab = build_vocabulary(split.all_statements())
    return vocab, Split(*(encode_statements(part, vocab) for part in split))
