# stare_kg/api/predict.py
import logging
import os
from typing import List, Optional, Sequence, Tuple

import torch
from fastapi import APIRouter, Depends, HTTPException, Request
from pydantic import BaseModel

from stare_kg.dataset.io import load_split
from stare_kg.embedding.index_builder import build_entity_index, search_entities
from stare_kg.errors import QueryTruncationError
from stare_kg.evaluation.filter_index import Direction
from stare_kg.graph.statements import Statement
from stare_kg.graph.vocabulary import encode_statements
from stare_kg.model.decoders import collate_queries, linearize_query
from stare_kg.model.encoder import GraphTensors
from stare_kg.model.link_predictor import LinkPredictor
from stare_kg.training.trainer import build_graph

log = logging.getLogger(__name__)

router = APIRouter()


# 요청: 알려진 엔티티 + 관계 + qualifier 쌍, 반환할 개수와 예측 방향
# 응답: 엔티티 라벨 + 내적 점수 (높을수록 유력)
class PredictRequest(BaseModel):
    subject: Optional[str] = None     # direction=object 일 때 필수
    object: Optional[str] = None      # direction=subject 일 때 필수
    relation: str
    qualifiers: List[List[str]] = []
    top_k: int = 10
    direction: str = "object"


class Prediction(BaseModel):
    entity: str
    score: float


class UnknownLabelError(KeyError):
    def __init__(self, kind: str, label: str):
        super().__init__(label)
        self.kind = kind
        self.label = label

    def __str__(self):
        return f"unknown {self.kind}: {self.label}"


class Predictor:
    """Encodes the train graph once and answers link-prediction queries by top-k inner product."""

    def __init__(self, model: LinkPredictor, graph: GraphTensors, device: str = "cpu"):
        self.model = model.to(device).eval()
        self.vocab = model.vocab
        self.device = device
        with torch.no_grad():
            self.store = self.model.encode(graph.to(device))
            self.entity_table = self.model.decoder.entity_table(self.store.v)
        self.index = build_entity_index(self.store.v)

    @classmethod
    def from_checkpoint(cls, directory: str, data_dir: Optional[str] = None, device: str = "cpu") -> "Predictor":
        model = LinkPredictor.load(directory, map_location=device)
        data_dir = data_dir or model.config.data.dir
        base_vocab = model.vocab.base()
        train = encode_statements(load_split(data_dir).train, base_vocab)
        _, _, graph = build_graph(train, base_vocab, model.config.model.use_qualifiers)
        log.info(f"Predictor ready | checkpoint={directory} | data={data_dir}")
        return cls(model, graph, device)

    def _entity(self, label: str) -> int:
        if label not in self.vocab.entity_to_id:
            raise UnknownLabelError("entity", label)
        return self.vocab.entity_id(label)

    def _relation(self, label: str) -> int:
        rid = self.vocab.relation_to_id.get(label)
        if rid is None or rid >= self.vocab.num_base_relations:
            raise UnknownLabelError("relation", label)
        return rid

    def predict(self, known: str, relation: str, qualifiers: Sequence[Tuple[str, str]],
                top_k: int = 10, direction: Direction = Direction.OBJECT) -> List[Tuple[str, float]]:
        head = self._entity(known)
        rid = self._relation(relation)
        quals = tuple((self._relation(qr), self._entity(qv)) for qr, qv in qualifiers)
        if direction is Direction.SUBJECT:
            rid = self.vocab.inverse_of(rid)
        cfg = self.model.config
        query = linearize_query(Statement(head, rid, self.vocab.pad_id, quals), self.vocab,
                                cfg.decoder.max_len, triple_only=not cfg.model.use_qualifiers)
        tokens, mask, _ = collate_queries([query], device=self.device)
        with torch.no_grad():
            out = self.model.decoder.encode_query(tokens, mask, self.entity_table, self.store.r)
        scores, ids = search_entities(self.index, out, top_k)
        return [(self.vocab.entity_label(int(i)), float(s)) for i, s in zip(ids[0], scores[0]) if i >= 0]


def get_predictor(request: Request) -> Predictor:
    state = request.app.state
    if getattr(state, "predictor", None) is None:
        checkpoint = getattr(state, "checkpoint_path", None)
        if not checkpoint or not os.path.isdir(checkpoint):
            raise HTTPException(status_code=503, detail="model checkpoint not available")
        state.predictor = Predictor.from_checkpoint(checkpoint, device=getattr(state, "device", "cpu"))
    return state.predictor


def _parse_request(req: PredictRequest) -> Tuple[str, Direction, List[Tuple[str, str]]]:
    try:
        direction = Direction(req.direction)
    except ValueError:
        raise HTTPException(status_code=400, detail=f"direction must be object or subject, got {req.direction!r}")
    known = req.subject if direction is Direction.OBJECT else req.object
    if not known:
        field = "subject" if direction is Direction.OBJECT else "object"
        raise HTTPException(status_code=400, detail=f"{field} is required for direction={direction.value}")
    if req.top_k < 1:
        raise HTTPException(status_code=400, detail="top_k must be >= 1")
    if any(len(pair) != 2 for pair in req.qualifiers):
        raise HTTPException(status_code=400, detail="qualifiers must be [relation, value] pairs")
    return known, direction, [(qr, qv) for qr, qv in req.qualifiers]


@router.post("/predict", response_model=list[Prediction])
def predict_endpoint(req: PredictRequest, predictor: Predictor = Depends(get_predictor)):
    known, direction, qualifiers = _parse_request(req)
    try:
        results = predictor.predict(known, req.relation, qualifiers, req.top_k, direction)
    except UnknownLabelError as e:
        raise HTTPException(status_code=404, detail=str(e))
    except QueryTruncationError as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        log.exception(f"Prediction failed | relation={req.relation} | direction={req.direction}")
        raise HTTPException(status_code=500, detail=str(e))
    return [{"entity": label, "score": round(score, 6)} for label, score in results]


@router.get("/health")
def health(request: Request):
    predictor = getattr(request.app.state, "predictor", None)
    if predictor is None:
        return {"status": "ok", "loaded": False}
    vocab = predictor.vocab
    cfg = predictor.model.config
    return {
        "status": "ok",
        "loaded": True,
        "entities": vocab.num_entities,
        "relations": vocab.num_base_relations,
        "decoder": cfg.decoder.kind.value,
        "encoder": cfg.model.encoder.value,
        "dim": cfg.encoder.dim,
    }
