# stare_kg/embedding/index_builder.py
import logging

import faiss
import numpy as np

log = logging.getLogger(__name__)

# 디코더 점수가 내적이므로 inner product 인덱스 사용 (정규화하지 않음)
FAISS_METRIC = faiss.METRIC_INNER_PRODUCT


def _as_float32(vectors) -> np.ndarray:
    if hasattr(vectors, "detach"):
        vectors = vectors.detach().cpu().numpy()
    arr = np.ascontiguousarray(vectors, dtype="float32")
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {arr.shape}")
    return arr


def build_entity_index(entity_vectors) -> faiss.Index:
    """Exact inner-product index over the encoded real-entity matrix; vector id = entity id."""
    vecs = _as_float32(entity_vectors)
    index = faiss.IndexFlatIP(vecs.shape[1])
    index.add(vecs)
    log.info(f"Entity index built | entities={index.ntotal} | dim={vecs.shape[1]}")
    return index


def search_entities(index: faiss.Index, query_vectors, k: int):
    """Top-k (scores, entity ids) per query row, best first."""
    queries = _as_float32(query_vectors)
    k = min(k, index.ntotal)
    scores, ids = index.search(queries, k)
    return scores, ids

