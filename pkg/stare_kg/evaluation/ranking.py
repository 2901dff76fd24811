# stare_kg/evaluation/ranking.py
"""Filtered ranks (tie-averaged, exact rationals) and MRR / Hits@k."""
from fractions import Fraction
from typing import Dict, Iterable, List, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from stare_kg.errors import EvaluationIntegrityError

DEFAULT_HITS_AT = (1, 5, 10)


def filtered_rank(scores, gold: int, filter_set: Iterable[int] = ()) -> Fraction:
    """Mean of the optimistic and pessimistic rank among unfiltered competitors.

    optimistic = 1 + #{score > gold}, pessimistic = optimistic + #{score == gold};
    other true answers in `filter_set` are not competitors.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if not 0 <= gold < scores.shape[0]:
        raise EvaluationIntegrityError(f"gold id {gold} outside the score vector")
    g = scores[gold]
    if not np.isfinite(g):
        raise EvaluationIntegrityError(f"gold id {gold} is masked (score {g})")
    competitors = np.ones(scores.shape[0], dtype=bool)
    others = [e for e in filter_set if e != gold]
    if others:
        competitors[others] = False
    competitors[gold] = False
    rest = scores[competitors]
    greater = int((rest > g).sum())
    equal = int((rest == g).sum())
    return Fraction(2 * (1 + greater) + equal, 2)


class MetricSet(BaseModel):
    mrr: float
    hits: Dict[int, float]
    count: int


def compute_metrics(ranks: Sequence[Fraction], hits_at: Sequence[int] = DEFAULT_HITS_AT) -> MetricSet:
    if not ranks:
        raise ValueError("compute_metrics needs at least one rank")
    n = len(ranks)
    mrr = sum((1 / Fraction(r) for r in ranks), Fraction(0)) / n
    hits = {k: sum(1 for r in ranks if r <= k) / n for k in hits_at}
    return MetricSet(mrr=float(mrr), hits=hits, count=n)


def average_metrics(a: MetricSet, b: MetricSet) -> MetricSet:
    return MetricSet(
        mrr=(a.mrr + b.mrr) / 2,
        hits={k: (a.hits[k] + b.hits[k]) / 2 for k in a.hits},
        count=a.count + b.count,
    )


class RankReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    object: MetricSet
    subject: MetricSet
    both: MetricSet
    ranks: Dict[str, List[Fraction]] = {}

    def metric_sets(self) -> Dict[str, MetricSet]:
        return {"object": self.object, "subject": self.subject, "both": self.both}

    def to_records(self) -> List[dict]:
        records = []
        for direction, m in self.metric_sets().items():
            records.append({"metric": "mrr", "direction": direction, "value": m.mrr})
            for k, v in m.hits.items():
                records.append({"metric": f"hits@{k}", "direction": direction, "value": v})
        return records

    def format_table(self) -> str:
        ks = list(self.both.hits)
        header = f"{'direction':<10}{'count':>8}{'MRR':>9}" + "".join(f"{'H@' + str(k):>9}" for k in ks)
        lines = [header, "-" * len(header)]
        for direction, m in self.metric_sets().items():
            lines.append(f"{direction:<10}{m.count:>8}{m.mrr:>9.4f}" + "".join(f"{m.hits[k]:>9.4f}" for k in ks))
        return "\n".join(lines)

    def __str__(self):
        return f"mrr={self.both.mrr:.4f} | " + " | ".join(f"h@{k}={v:.4f}" for k, v in self.both.hits.items())
