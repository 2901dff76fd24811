# stare_kg/dataset/stats.py
import logging
from collections import Counter
from typing import Dict, List

from pydantic import BaseModel

from stare_kg.dataset.io import Split

log = logging.getLogger(__name__)

_SCALAR_FIELDS = (
    "statements", "qualified", "qualified_pct", "entities", "relations",
    "qualifier_only_entities", "qualifier_only_relations", "train", "valid", "test",
    "inverse_leakage", "inverse_leakage_pct",
)


class DatasetStats(BaseModel):
    name: str = ""
    statements: int = 0
    qualified: int = 0
    qualified_pct: float = 0.0
    entities: int = 0
    relations: int = 0
    qualifier_only_entities: int = 0
    qualifier_only_relations: int = 0
    train: int = 0
    valid: int = 0
    test: int = 0
    qualifier_histogram: Dict[int, int] = {}    # #qualifiers -> #statements
    in_degree_histogram: Dict[int, int] = {}    # in-degree -> #entities (main triples)
    inverse_leakage: int = 0                    # test (s,r,o) whose (o,r,s) is a train main triple
    inverse_leakage_pct: float = 0.0

    def to_records(self) -> List[dict]:
        records = [{"dataset": self.name, "metric": key, "value": getattr(self, key)} for key in _SCALAR_FIELDS]
        records += [{"dataset": self.name, "metric": f"qualifiers={k}", "value": v}
                    for k, v in sorted(self.qualifier_histogram.items())]
        records += [{"dataset": self.name, "metric": f"in_degree={k}", "value": v}
                    for k, v in sorted(self.in_degree_histogram.items())]
        return records

    def format_table(self) -> str:
        header = ["Dataset", "Statements", "w/Quals (%)", "Entities", "Relations",
                  "E only in Quals", "R only in Quals", "Train", "Valid", "Test"]
        row = [self.name or "-", f"{self.statements:,}", f"{self.qualified:,} ({self.qualified_pct:.1f}%)",
               f"{self.entities:,}", f"{self.relations:,}", f"{self.qualifier_only_entities:,}",
               f"{self.qualifier_only_relations:,}", f"{self.train:,}", f"{self.valid:,}", f"{self.test:,}"]
        widths = [max(len(h), len(v)) for h, v in zip(header, row)]
        lines = [
            " | ".join(h.ljust(w) for h, w in zip(header, widths)),
            "-+-".join("-" * w for w in widths),
            " | ".join(v.ljust(w) for v, w in zip(row, widths)),
            "",
            f"inverse leakage: {self.inverse_leakage:,} test statements ({self.inverse_leakage_pct:.2f}%)",
        ]
        return "\n".join(lines)


def _pct(part: int, whole: int) -> float:
    return 100.0 * part / whole if whole else 0.0


def compute_stats(split: Split, name: str = "") -> DatasetStats:
    statements = split.all_statements()
    main_entities, qual_entities = set(), set()
    main_relations, qual_relations = set(), set()
    in_degree = Counter()
    for st in statements:
        main_entities.update((st.subject, st.object))
        main_relations.add(st.relation)
        in_degree[st.object] += 1
        for qr, qv in st.qualifiers:
            qual_relations.add(qr)
            qual_entities.add(qv)
    entities = main_entities | qual_entities

    qualified = sum(st.has_qualifiers for st in statements)
    train_triples = {st.main_triple for st in split.train}
    inverse = sum((st.object, st.relation, st.subject) in train_triples for st in split.test)

    stats = DatasetStats(
        name=name,
        statements=len(statements),
        qualified=qualified,
        qualified_pct=_pct(qualified, len(statements)),
        entities=len(entities),
        relations=len(main_relations | qual_relations),
        qualifier_only_entities=len(qual_entities - main_entities),
        qualifier_only_relations=len(qual_relations - main_relations),
        train=len(split.train),
        valid=len(split.valid),
        test=len(split.test),
        qualifier_histogram=dict(sorted(Counter(len(st.qualifiers) for st in statements).items())),
        in_degree_histogram=dict(sorted(Counter(in_degree[e] for e in entities).items())),
        inverse_leakage=inverse,
        inverse_leakage_pct=_pct(inverse, len(split.test)),
    )
    log.info(f"Dataset stats | name={name} | statements={stats.statements} | entities={stats.entities} | "
             f"relations={stats.relations}")
    return stats
