# stare_kg/model/encoder.py
"""StarE message passing over the twin-COO hyper-relational graph.

Per layer, for every edge (u, r, v) of fact k:

    h_q  = W_q · Σ_{(qr, qv) ∈ Q_k} φ_q(h_qr, h_qv)        (mean optional)
    m    = W_λ(r) · φ_r(h_u, γ(h_r, h_q))                   (γ bypassed if Q_k = ∅)
    h_v' = f(Σ_{edges into v} m),   h_r' = W_rel · h_r

Scatter-adds run in edge-row order (qualifier rows in (k, qr, qv) order),
so eval-mode outputs are reproducible bit for bit.
"""
import logging
from dataclasses import dataclass
from typing import Dict, NamedTuple, Sequence, Union

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from stare_kg.errors import DimensionMismatchError
from stare_kg.graph.sparse import HyperGraph, K, O, QK, QR, QV, R, S
from stare_kg.graph.vocabulary import EdgeDirection
from stare_kg.model.compose import GammaKind, gamma, gamma_output_dim, phi
from stare_kg.run_config import Activation, EncoderConfig, QualifierAggregation

log = logging.getLogger(__name__)

DIRECTIONS = (EdgeDirection.OUTGOING, EdgeDirection.INCOMING, EdgeDirection.SELF_LOOP)
_WEIGHT_NAME = {EdgeDirection.OUTGOING: "w_out", EdgeDirection.INCOMING: "w_in", EdgeDirection.SELF_LOOP: "w_self"}


class _Empty:
    """Marker for a fact with no qualifiers: γ is skipped, φ_r sees h_r."""
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "EMPTY"

    def __bool__(self):
        return False


EMPTY = _Empty()


class EmbeddingStore(NamedTuple):
    v: torch.Tensor     # |V| x d
    r: torch.Tensor     # |R_aug| x d


# ---------------- graph tensors ----------------
@dataclass(frozen=True)
class GraphTensors:
    src: torch.Tensor           # (E,) subject ids
    dst: torch.Tensor           # (E,) object ids
    rel: torch.Tensor           # (E,) relation ids
    direction: torch.Tensor     # (E,) 0 out, 1 in, 2 self
    qual_rel: torch.Tensor      # (Q,) canonical (edge, qr, qv) order
    qual_ent: torch.Tensor      # (Q,)
    qual_edge: torch.Tensor     # (Q,) edge row of each qualifier row
    qual_count: torch.Tensor    # (E,)
    num_entities: int
    num_relations: int

    @property
    def num_edges(self) -> int:
        return int(self.src.shape[0])

    @property
    def has_qualifiers(self) -> torch.Tensor:
        return self.qual_count > 0

    @classmethod
    def from_graph(cls, graph: HyperGraph, num_base_relations: int) -> "GraphTensors":
        t = graph.triples
        q = graph.qualifiers
        E = graph.num_facts
        k_to_row = np.zeros(int(t[:, K].max()) + 1 if E else 0, dtype=np.int64)
        k_to_row[t[:, K]] = np.arange(E)
        qual_edge = k_to_row[q[:, QK]] if len(q) else np.zeros(0, dtype=np.int64)
        order = np.lexsort((q[:, QV], q[:, QR], qual_edge)) if len(q) else np.zeros(0, dtype=np.int64)

        rel = t[:, R]
        direction = np.where(rel < num_base_relations, 0, np.where(rel < 2 * num_base_relations, 1, 2))
        qual_count = np.bincount(qual_edge, minlength=E) if len(q) else np.zeros(E, dtype=np.int64)
        as_long = lambda a: torch.as_tensor(np.ascontiguousarray(a), dtype=torch.long)
        return cls(
            src=as_long(t[:, S]),
            dst=as_long(t[:, O]),
            rel=as_long(rel),
            direction=as_long(direction),
            qual_rel=as_long(q[order, QR]) if len(q) else as_long(np.zeros(0)),
            qual_ent=as_long(q[order, QV]) if len(q) else as_long(np.zeros(0)),
            qual_edge=as_long(qual_edge[order]),
            qual_count=as_long(qual_count),
            num_entities=graph.num_entities,
            num_relations=graph.num_relations,
        )

    def to(self, device) -> "GraphTensors":
        moved = {name: getattr(self, name).to(device) for name in
                 ("src", "dst", "rel", "direction", "qual_rel", "qual_ent", "qual_edge", "qual_count")}
        return GraphTensors(**moved, num_entities=self.num_entities, num_relations=self.num_relations)


# ---------------- layer ----------------
_ACTIVATIONS = {
    Activation.TANH: torch.tanh,
    Activation.RELU: torch.relu,
    Activation.IDENTITY: lambda x: x,
}


class StarELayer(nn.Module):

    def __init__(self, in_dim: int, out_dim: int, config: EncoderConfig):
        super().__init__()
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.config = config
        self.w_out = nn.Parameter(torch.empty(in_dim, out_dim))
        self.w_in = nn.Parameter(torch.empty(in_dim, out_dim))
        self.w_self = nn.Parameter(torch.empty(in_dim, out_dim))
        self.w_q = nn.Parameter(torch.empty(in_dim, in_dim))
        self.w_rel = nn.Parameter(torch.empty(in_dim, out_dim))
        if config.gamma is GammaKind.CONCAT:
            self.w_gamma = nn.Parameter(torch.empty(gamma_output_dim(config.gamma, in_dim), in_dim))
        else:
            self.register_parameter("w_gamma", None)
        self.reset_parameters()

    def reset_parameters(self):
        for p in self.parameters():
            nn.init.xavier_normal_(p)

    def direction_weight(self, direction: Union[EdgeDirection, int]) -> torch.Tensor:
        if isinstance(direction, int):
            direction = DIRECTIONS[direction]
        return getattr(self, _WEIGHT_NAME[EdgeDirection(direction)])

    # -- qualifiers --
    def qualifier_vectors(self, graph: GraphTensors, store: EmbeddingStore) -> torch.Tensor:
        """h_q for every edge (zero rows where the fact has no qualifiers)."""
        d = store.v.shape[1]
        composed = phi(store.r[graph.qual_rel], store.v[graph.qual_ent], self.config.phi_q)
        summed = store.v.new_zeros(graph.num_edges, d).index_add(0, graph.qual_edge, composed)
        if self.config.qual_aggregation is QualifierAggregation.MEAN:
            summed = summed / graph.qual_count.clamp(min=1).unsqueeze(1).to(summed.dtype)
        return summed @ self.w_q

    def merge_relation(self, h_r: torch.Tensor, h_q) -> torch.Tensor:
        if h_q is EMPTY:
            return h_r
        merged = gamma(h_r, h_q, self.config.gamma, self.config.alpha)
        if self.w_gamma is not None:
            merged = merged @ self.w_gamma
        return merged

    def relation_inputs(self, graph: GraphTensors, store: EmbeddingStore) -> torch.Tensor:
        h_r = store.r[graph.rel]
        has_q = graph.has_qualifiers
        if not bool(has_q.any()):
            return h_r
        merged = self.merge_relation(h_r, self.qualifier_vectors(graph, store))
        return torch.where(has_q.unsqueeze(1), merged, h_r)

    # -- messages --
    def message(self, h_u: torch.Tensor, h_r: torch.Tensor, h_q, direction) -> torch.Tensor:
        if h_u.shape[-1] != self.in_dim or h_r.shape[-1] != self.in_dim:
            raise DimensionMismatchError(f"message inputs must have dim {self.in_dim}")
        composed = phi(h_u, self.merge_relation(h_r, h_q), self.config.phi_r)
        return composed @ self.direction_weight(direction)

    def messages(self, graph: GraphTensors, store: EmbeddingStore) -> torch.Tensor:
        composed = phi(store.v[graph.src], self.relation_inputs(graph, store), self.config.phi_r)
        out = composed.new_zeros(graph.num_edges, self.out_dim)
        for code, direction in enumerate(DIRECTIONS):
            rows = (graph.direction == code).nonzero(as_tuple=True)[0]
            if rows.numel():
                out = out.index_copy(0, rows, composed[rows] @ self.direction_weight(direction))
        return out

    def forward(self, graph: GraphTensors, store: EmbeddingStore) -> EmbeddingStore:
        msgs = self.messages(graph, store)
        agg = msgs.new_zeros(store.v.shape[0], self.out_dim).index_add(0, graph.dst, msgs)
        if self.config.degree_norm:
            deg = torch.bincount(graph.dst, minlength=store.v.shape[0]).clamp(min=1)
            agg = agg / deg.unsqueeze(1).to(agg.dtype)
        v = _ACTIVATIONS[self.config.activation](agg)
        v = F.dropout(v, p=self.config.dropout, training=self.training)
        return EmbeddingStore(v, store.r @ self.w_rel)


# ---------------- functional surface ----------------
def aggregate_qualifiers(fact_id: int, graph: GraphTensors, store: EmbeddingStore, layer: StarELayer):
    """h_q of the fact stored in edge row `fact_id`, or EMPTY."""
    rows = (graph.qual_edge == fact_id).nonzero(as_tuple=True)[0]
    if rows.numel() == 0:
        return EMPTY
    composed = phi(store.r[graph.qual_rel[rows]], store.v[graph.qual_ent[rows]], layer.config.phi_q)
    summed = store.v.new_zeros(1, store.v.shape[1]).index_add(0, torch.zeros_like(rows), composed)
    if layer.config.qual_aggregation is QualifierAggregation.MEAN:
        summed = summed / rows.numel()
    return (summed @ layer.w_q)[0]


def message(h_u, h_r, h_q_or_empty, direction, layer: StarELayer) -> torch.Tensor:
    return layer.message(h_u, h_r, h_q_or_empty, direction)


def layer_forward(graph: GraphTensors, store: EmbeddingStore, layer: StarELayer) -> EmbeddingStore:
    return layer(graph, store)


def encoder_forward(graph: GraphTensors, store: EmbeddingStore, layers: Sequence[StarELayer], mode: str = "eval"):
    if not layers:
        raise ValueError("encoder needs at least one layer")
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be train or eval, got {mode!r}")
    for layer in layers:
        layer.train(mode == "train")
        store = layer(graph, store)
    return store.v, store.r


# ---------------- encoder module ----------------
class StarEEncoder(nn.Module):

    def __init__(self, config: EncoderConfig):
        super().__init__()
        self.config = config
        self.layers = nn.ModuleList(StarELayer(config.dim, config.dim, config) for _ in range(config.num_layers))

    def forward(self, graph: GraphTensors, store: EmbeddingStore) -> EmbeddingStore:
        for layer in self.layers:
            store = layer(graph, store)
        return store

    def checkpoint_state(self) -> Dict[str, torch.Tensor]:
        state = {}
        for i, layer in enumerate(self.layers):
            for name, p in layer.named_parameters():
                state[f"layer{i}.{name}"] = p.detach().clone()
        return state

    def load_checkpoint_state(self, state: Dict[str, torch.Tensor]):
        with torch.no_grad():
            for i, layer in enumerate(self.layers):
                for name, p in layer.named_parameters():
                    p.copy_(state[f"layer{i}.{name}"])


class EmbeddingTable(nn.Module):
    """Learnable V and R matrices (the store fed to the encoder)."""

    def __init__(self, num_entities: int, num_relations: int, dim: int):
        super().__init__()
        self.v = nn.Parameter(torch.empty(num_entities, dim))
        self.r = nn.Parameter(torch.empty(num_relations, dim))
        nn.init.xavier_normal_(self.v)
        nn.init.xavier_normal_(self.r)

    def forward(self) -> EmbeddingStore:
        return EmbeddingStore(self.v, self.r)
