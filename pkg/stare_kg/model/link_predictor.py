# stare_kg/model/link_predictor.py
import logging
import os
from typing import Dict, Optional

import torch
import torch.nn as nn

from stare_kg.graph.vocabulary import Vocabulary
from stare_kg.model.decoders import QueryDecoder, build_decoder
from stare_kg.model.encoder import EmbeddingStore, EmbeddingTable, GraphTensors, StarEEncoder
from stare_kg.run_config import EncoderKind, RunConfig, dump_run_config, load_run_config

log = logging.getLogger(__name__)

CHECKPOINT_FILE = "model.pt"
VOCAB_FILE = "vocab.json"
CONFIG_FILE = "run.conf"


class LinkPredictor(nn.Module):
    """Embedding store -> optional StarE encoder -> query decoder -> entity scores."""

    def __init__(self, vocab: Vocabulary, config: RunConfig):
        super().__init__()
        if not vocab.augmented:
            raise ValueError("LinkPredictor expects an augmented vocabulary")
        self.vocab = vocab
        self.config = config
        dim = config.encoder.dim
        self.embeddings = EmbeddingTable(vocab.num_entities, vocab.num_relations, dim)
        self.encoder: Optional[StarEEncoder] = (
            StarEEncoder(config.encoder) if config.model.encoder is EncoderKind.STARE else None
        )
        self.decoder: QueryDecoder = build_decoder(config.decoder, dim, vocab)
        if config.model.dtype == "float64":
            self.double()

    @property
    def num_real_entities(self) -> int:
        return self.vocab.num_entities

    def encode(self, graph: Optional[GraphTensors]) -> EmbeddingStore:
        store = self.embeddings()
        if self.encoder is not None:
            store = self.encoder(graph, store)
        return store

    def score(self, store: EmbeddingStore, tokens: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        return self.decoder(tokens, mask, store.v, store.r)

    def forward(self, graph: Optional[GraphTensors], tokens: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        return self.score(self.encode(graph), tokens, mask)

    # ---------------- checkpoints ----------------
    def checkpoint_state(self) -> Dict[str, torch.Tensor]:
        state = {"v": self.embeddings.v.detach().clone(), "r": self.embeddings.r.detach().clone()}
        if self.encoder is not None:
            state.update(self.encoder.checkpoint_state())
        for name, tensor in self.decoder.state_dict().items():
            state[f"decoder.{name}"] = tensor.detach().clone()
        return state

    def load_checkpoint_state(self, state: Dict[str, torch.Tensor]):
        with torch.no_grad():
            self.embeddings.v.copy_(state["v"])
            self.embeddings.r.copy_(state["r"])
        if self.encoder is not None:
            self.encoder.load_checkpoint_state(state)
        self.decoder.load_state_dict({k[len("decoder."):]: v for k, v in state.items() if k.startswith("decoder.")})

    def save(self, directory: str):
        os.makedirs(directory, exist_ok=True)
        torch.save(self.checkpoint_state(), os.path.join(directory, CHECKPOINT_FILE))
        self.vocab.save(os.path.join(directory, VOCAB_FILE))
        with open(os.path.join(directory, CONFIG_FILE), "w", encoding="utf-8") as f:
            f.write(dump_run_config(self.config))
        log.info(f"Checkpoint saved | dir={directory}")

    @classmethod
    def load(cls, directory: str, map_location="cpu") -> "LinkPredictor":
        config = load_run_config(os.path.join(directory, CONFIG_FILE))
        vocab = Vocabulary.load(os.path.join(directory, VOCAB_FILE))
        model = cls(vocab, config)
        model.load_checkpoint_state(torch.load(os.path.join(directory, CHECKPOINT_FILE), map_location=map_location))
        log.info(f"Checkpoint loaded | dir={directory} | entities={vocab.num_entities}")
        return model
