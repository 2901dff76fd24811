# stare_kg/dataset/variants.py
"""Derived dataset variants: qualifier ratio, qualifier truncation, triple reduction."""
import logging
from typing import List, Sequence

import numpy as np

from stare_kg.dataset.io import Split
from stare_kg.errors import UnreachableRatioError
from stare_kg.graph.statements import Statement

log = logging.getLogger(__name__)

# train / valid / test 별 시드 오프셋
SPLIT_SEED_OFFSETS = (0, 1, 2)


def sample_by_qualifier_ratio(statements: Sequence[Statement], ratio: float, seed: int) -> List[Statement]:
    """Keep every qualified statement and a seeded subset of plain ones so q / (q + p) ≈ ratio."""
    if not 0.0 < ratio <= 1.0:
        raise ValueError(f"ratio must lie in (0, 1], got {ratio}")
    qualified = [i for i, st in enumerate(statements) if st.has_qualifiers]
    plain = [i for i, st in enumerate(statements) if not st.has_qualifiers]
    wanted = int(round(len(qualified) * (1.0 - ratio) / ratio))
    if wanted > len(plain):
        raise UnreachableRatioError(
            f"ratio {ratio} needs {wanted} triple-only statements, only {len(plain)} available "
            f"({len(qualified)} qualified)"
        )
    rng = np.random.default_rng(seed)
    chosen = set(rng.choice(len(plain), size=wanted, replace=False).tolist()) if wanted else set()
    keep = set(qualified) | {plain[j] for j in chosen}
    out = [st for i, st in enumerate(statements) if i in keep]
    log.info(f"Ratio sample | ratio={ratio} | qualified={len(qualified)} | plain={wanted}/{len(plain)}")
    return out


def truncate_qualifiers(statements: Sequence[Statement], n: int, seed: int) -> List[Statement]:
    """At most n qualifier pairs per statement; a truncated statement keeps a seeded choice in sorted order."""
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    rng = np.random.default_rng(seed)
    out = []
    for st in statements:
        if len(st.qualifiers) <= n:
            out.append(st)
            continue
        keep = rng.choice(len(st.qualifiers), size=n, replace=False)
        out.append(st._replace(qualifiers=tuple(sorted(st.qualifiers[i] for i in keep))))
    return out


def reduce_to_triples(statements: Sequence[Statement]) -> List[Statement]:
    """Strip qualifiers and deduplicate main triples (first occurrence wins)."""
    seen, out = set(), []
    for st in statements:
        if st.main_triple in seen:
            continue
        seen.add(st.main_triple)
        out.append(st.without_qualifiers())
    return out


# ---------------- split-level ----------------
def ratio_split(split: Split, ratio: float, seed: int) -> Split:
    return Split(*(sample_by_qualifier_ratio(part, ratio, seed + off) for part, off in zip(split, SPLIT_SEED_OFFSETS)))


def truncate_split(split: Split, n: int, seed: int) -> Split:
    return Split(*(truncate_qualifiers(part, n, seed + off) for part, off in zip(split, SPLIT_SEED_OFFSETS)))


def triples_split(split: Split) -> Split:
    return Split(*(reduce_to_triples(part) for part in split))
