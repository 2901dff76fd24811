# stare_kg/model/decoders.py
"""Query decoders: linearize (s, r, qr1, qv1, ...) and score it against every entity.

All decoders zero the embeddings of padded positions before use, so the
content of masked positions never reaches the scores. Score columns cover
the real entities followed by the reserved PAD and MASK ids; callers mask
those two at ranking time and drop them from the loss.
"""
import logging
from typing import NamedTuple, Sequence, Tuple

import torch
import torch.nn as nn

from stare_kg.errors import DimensionMismatchError, QueryTruncationError
from stare_kg.graph.statements import Statement
from stare_kg.graph.vocabulary import Vocabulary
from stare_kg.run_config import DecoderConfig, DecoderKind

log = logging.getLogger(__name__)


# ---------------- queries ----------------
class Query(NamedTuple):
    tokens: Tuple[int, ...]
    mask: Tuple[bool, ...]
    target: int
    max_len: int

    @property
    def num_real(self) -> int:
        return sum(self.mask)


def linearize_query(statement: Statement, vocab: Vocabulary, max_len: int, triple_only: bool = False) -> Query:
    """[s, r, qr1, qv1, ...] with qualifier pairs sorted by (qr, qv), PAD-filled to max_len.

    The object of the (id-encoded) statement is the prediction target;
    subject prediction goes through the inverse-relation statement.
    """
    quals = () if triple_only else tuple(sorted(statement.qualifiers))
    tokens = [statement.subject, statement.relation]
    for qr, qv in quals:
        tokens.extend((qr, qv))
    if len(tokens) > max_len:
        raise QueryTruncationError(f"query needs {len(tokens)} positions, max_len is {max_len}")
    n_real = len(tokens)
    tokens.extend([vocab.pad_id] * (max_len - n_real))
    mask = (True,) * n_real + (False,) * (max_len - n_real)
    return Query(tuple(tokens), mask, statement.object, max_len)


def collate_queries(queries: Sequence[Query], device=None) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    tokens = torch.tensor([q.tokens for q in queries], dtype=torch.long, device=device)
    mask = torch.tensor([q.mask for q in queries], dtype=torch.bool, device=device)
    targets = torch.tensor([q.target for q in queries], dtype=torch.long, device=device)
    return tokens, mask, targets


# ---------------- shape helpers ----------------
def conve_image_shape(max_len: int, dim: int, height: int) -> Tuple[int, int]:
    total = max_len * dim
    if total % height:
        raise DimensionMismatchError(f"cannot reshape {max_len}x{dim} into an image of height {height}")
    return height, total // height


def conv_output_shape(height: int, width: int, kernel_h: int, kernel_w: int) -> Tuple[int, int]:
    """Valid (unpadded, stride 1) convolution output size."""
    return height - kernel_h + 1, width - kernel_w + 1


# ---------------- base ----------------
class QueryDecoder(nn.Module):
    """Shared token embedding: entity slots read [V̄ ; PAD ; MASK], relation slots read R̄."""

    def __init__(self, dim: int, config: DecoderConfig, pad_id: int, mask_id: int):
        super().__init__()
        self.dim = dim
        self.config = config
        self.pad_id = pad_id
        self.mask_id = mask_id
        self.special = nn.Parameter(torch.empty(2, dim))   # PAD, MASK
        nn.init.xavier_normal_(self.special)

    def entity_table(self, v: torch.Tensor) -> torch.Tensor:
        return torch.cat([v, self.special.to(v.dtype)], dim=0)

    @staticmethod
    def relation_slots(length: int, device=None) -> torch.Tensor:
        pos = torch.arange(length, device=device)
        return (pos == 1) | ((pos >= 2) & (pos % 2 == 0))

    def embed_tokens(self, tokens: torch.Tensor, mask: torch.Tensor, ent: torch.Tensor, rel: torch.Tensor) -> torch.Tensor:
        is_rel = self.relation_slots(tokens.shape[1], tokens.device).unsqueeze(0) & mask
        ent_ids = torch.where(is_rel, torch.full_like(tokens, self.pad_id), tokens)
        rel_ids = torch.where(is_rel, tokens, torch.zeros_like(tokens))
        x = torch.where(is_rel.unsqueeze(-1), rel[rel_ids], ent[ent_ids])
        return x * mask.unsqueeze(-1).to(x.dtype)

    def encode_query(self, tokens, mask, ent, rel) -> torch.Tensor:
        raise NotImplementedError

    def forward(self, tokens: torch.Tensor, mask: torch.Tensor, v: torch.Tensor, r: torch.Tensor) -> torch.Tensor:
        ent = self.entity_table(v)
        return self.encode_query(tokens, mask, ent, r) @ ent.t()


def _transformer(dim: int, config: DecoderConfig) -> nn.TransformerEncoder:
    layer = nn.TransformerEncoderLayer(
        d_model=dim,
        nhead=config.trf_heads,
        dim_feedforward=config.trf_hidden,
        dropout=config.trf_dropout,
        activation=config.trf_activation,
        batch_first=True,
    )
    return nn.TransformerEncoder(layer, num_layers=config.trf_layers, enable_nested_tensor=False)


# ---------------- decoders ----------------
class PooledTransformerDecoder(QueryDecoder):
    """Learned positions -> transformer -> mean over real positions -> FC."""

    def __init__(self, dim: int, config: DecoderConfig, pad_id: int, mask_id: int):
        super().__init__(dim, config, pad_id, mask_id)
        if dim % config.trf_heads:
            raise DimensionMismatchError(f"dim {dim} is not divisible by {config.trf_heads} heads")
        self.position = nn.Embedding(config.max_len, dim)
        self.transformer = _transformer(dim, config)
        self.fc = nn.Linear(dim, dim)

    def encode_query(self, tokens, mask, ent, rel):
        L = tokens.shape[1]
        x = self.embed_tokens(tokens, mask, ent, rel) + self.position(torch.arange(L, device=tokens.device))
        h = self.transformer(x, src_key_padding_mask=~mask)
        keep = mask.unsqueeze(-1).to(h.dtype)
        pooled = (h * keep).sum(dim=1) / keep.sum(dim=1)
        return self.fc(pooled)


class MaskedTransformerDecoder(QueryDecoder):
    """(s, r, [MASK], qr1, qv1, ...) -> transformer -> state at the MASK slot -> FC."""

    MASK_POSITION = 2

    def __init__(self, dim: int, config: DecoderConfig, pad_id: int, mask_id: int):
        super().__init__(dim, config, pad_id, mask_id)
        if dim % config.trf_heads:
            raise DimensionMismatchError(f"dim {dim} is not divisible by {config.trf_heads} heads")
        self.position = nn.Embedding(config.max_len + 1, dim)
        self.transformer = _transformer(dim, config)
        self.fc = nn.Linear(dim, dim)

    @staticmethod
    def relation_slots(length: int, device=None) -> torch.Tensor:
        pos = torch.arange(length, device=device)
        return (pos == 1) | ((pos >= 3) & (pos % 2 == 1))

    def insert_mask(self, tokens: torch.Tensor, mask: torch.Tensor):
        p = self.MASK_POSITION
        mask_col = torch.full_like(tokens[:, :1], self.mask_id)
        tokens = torch.cat([tokens[:, :p], mask_col, tokens[:, p:]], dim=1)
        mask = torch.cat([mask[:, :p], torch.ones_like(mask[:, :1]), mask[:, p:]], dim=1)
        return tokens, mask

    def encode_query(self, tokens, mask, ent, rel):
        tokens, mask = self.insert_mask(tokens, mask)
        L = tokens.shape[1]
        x = self.embed_tokens(tokens, mask, ent, rel) + self.position(torch.arange(L, device=tokens.device))
        h = self.transformer(x, src_key_padding_mask=~mask)
        return self.fc(h[:, self.MASK_POSITION])


class ConvEDecoder(QueryDecoder):
    """Stacked sequence embeddings reshaped to an H x W image, one k x k convolution."""

    def __init__(self, dim: int, config: DecoderConfig, pad_id: int, mask_id: int):
        super().__init__(dim, config, pad_id, mask_id)
        k = config.conv_kernel
        self.image_shape = conve_image_shape(config.max_len, dim, config.conve_height)
        out_h, out_w = conv_output_shape(*self.image_shape, k, k)
        if out_h < 1 or out_w < 1:
            raise DimensionMismatchError(f"kernel {k}x{k} larger than image {self.image_shape}")
        self.conv = nn.Conv2d(1, config.conv_filters, kernel_size=k)
        self.fc = nn.Linear(config.conv_filters * out_h * out_w, dim)

    def encode_query(self, tokens, mask, ent, rel):
        x = self.embed_tokens(tokens, mask, ent, rel)
        if x.shape[1] * self.dim != self.image_shape[0] * self.image_shape[1]:
            raise DimensionMismatchError(f"query length {x.shape[1]} does not match the configured image")
        img = x.reshape(x.shape[0], 1, *self.image_shape)
        return self.fc(torch.relu(self.conv(img)).flatten(1))


class ConvKBDecoder(QueryDecoder):
    """L_Q x k kernels sliding along the embedding dimension of the stacked query."""

    def __init__(self, dim: int, config: DecoderConfig, pad_id: int, mask_id: int):
        super().__init__(dim, config, pad_id, mask_id)
        k = config.conv_kernel
        if dim < k:
            raise DimensionMismatchError(f"kernel width {k} exceeds embedding dim {dim}")
        self.out_width = dim - k + 1
        self.conv = nn.Conv2d(1, config.conv_filters, kernel_size=(config.max_len, k))
        self.fc = nn.Linear(config.conv_filters * self.out_width, dim)

    def encode_query(self, tokens, mask, ent, rel):
        x = self.embed_tokens(tokens, mask, ent, rel).unsqueeze(1)
        return self.fc(torch.relu(self.conv(x)).flatten(1))


_DECODERS = {
    DecoderKind.POOLED_TRANSFORMER: PooledTransformerDecoder,
    DecoderKind.MASKED_TRANSFORMER: MaskedTransformerDecoder,
    DecoderKind.CONVE: ConvEDecoder,
    DecoderKind.CONVKB: ConvKBDecoder,
}


def build_decoder(config: DecoderConfig, dim: int, vocab: Vocabulary) -> QueryDecoder:
    decoder = _DECODERS[config.kind](dim, config, vocab.pad_id, vocab.mask_id)
    log.info(f"Decoder built | kind={config.kind.value} | dim={dim} | max_len={config.max_len}")
    return decoder


# ---------------- functional surface ----------------
def _decode(queries: Sequence[Query], v: torch.Tensor, r: torch.Tensor, decoder: QueryDecoder, kind: type) -> torch.Tensor:
    if not isinstance(decoder, kind):
        raise TypeError(f"expected {kind.__name__}, got {type(decoder).__name__}")
    tokens, mask, _ = collate_queries(queries, device=v.device)
    return decoder(tokens, mask, v, r)


def pooled_transformer_decode(queries: Sequence[Query], v, r, decoder: PooledTransformerDecoder) -> torch.Tensor:
    return _decode(queries, v, r, decoder, PooledTransformerDecoder)


def masked_transformer_decode(queries: Sequence[Query], v, r, decoder: MaskedTransformerDecoder) -> torch.Tensor:
    return _decode(queries, v, r, decoder, MaskedTransformerDecoder)


def conve_decode(queries: Sequence[Query], v, r, decoder: ConvEDecoder) -> torch.Tensor:
    return _decode(queries, v, r, decoder, ConvEDecoder)


def convkb_decode(queries: Sequence[Query], v, r, decoder: ConvKBDecoder) -> torch.Tensor:
    return _decode(queries, v, r, decoder, ConvKBDecoder)
