# tests/test_api.py
import pytest
import torch
from fastapi.testclient import TestClient

from stare_kg.api.predict import Predictor
from stare_kg.config import TOY_CONFIG_PATH
from stare_kg.dataset.io import Split, save_split
from stare_kg.evaluation.filter_index import Direction
from stare_kg.graph.statements import Statement
from stare_kg.main import create_app
from stare_kg.model.decoders import collate_queries, linearize_query
from stare_kg.run_config import load_run_config
from tests.helpers import toy_model


@pytest.fixture
def predictor(einstein_statements, toy_config):
    model, data = toy_model(einstein_statements, toy_config)
    return Predictor(model, data.graph)


@pytest.fixture
def client(predictor):
    return TestClient(create_app(predictor=predictor, checkpoint_path=None))


def _ask(client, **body):
    body.setdefault("relation", "educated at")
    return client.post("/predict", json=body)


def test_health(client):
    body = client.get("/health").json()
    assert body["loaded"] is True
    assert (body["entities"], body["relations"]) == (6, 3)
    assert body["decoder"] == "transformer"
    assert body["dim"] == 8


def test_health_without_model():
    body = TestClient(create_app(checkpoint_path=None)).get("/health").json()
    assert body == {"status": "ok", "loaded": False}


def test_predict_without_model_is_unavailable():
    res = _ask(TestClient(create_app(checkpoint_path=None)), subject="Albert Einstein")
    assert res.status_code == 503


def test_predict_object(client, predictor):
    res = _ask(client, subject="Albert Einstein", qualifiers=[["academic degree", "Bachelor"]], top_k=3)
    assert res.status_code == 200, res.text
    results = res.json()
    assert len(results) == 3
    scores = [r["score"] for r in results]
    assert scores == sorted(scores, reverse=True)
    assert {r["entity"] for r in results} <= set(predictor.vocab.entities)


def test_predict_scores_match_decoder(client, predictor):
    results = _ask(client, subject="Albert Einstein", top_k=6).json()
    vocab = predictor.vocab
    st = Statement(vocab.entity_id("Albert Einstein"), vocab.relation_id("educated at"), vocab.pad_id)
    q = linearize_query(st, vocab, predictor.model.config.decoder.max_len)
    tokens, mask, _ = collate_queries([q])
    with torch.no_grad():
        full = predictor.model.score(predictor.store, tokens, mask)[0]
    for r in results:
        assert r["score"] == pytest.approx(full[vocab.entity_id(r["entity"])].item(), abs=1e-4)


def test_top_k_is_clamped(client):
    assert len(_ask(client, subject="Albert Einstein", top_k=100).json()) == 6


def test_predict_subject_direction(client, predictor):
    res = _ask(client, object="ETH Zurich", direction="subject", top_k=2)
    assert res.status_code == 200, res.text
    assert len(res.json()) == 2
    assert predictor.predict("ETH Zurich", "educated at", [], 2, Direction.SUBJECT) == \
        [(r["entity"], pytest.approx(r["score"], abs=1e-5)) for r in res.json()]


@pytest.mark.parametrize("body", [
    {"subject": "Marie Curie"},
    {"subject": "Albert Einstein", "relation": "educated at_inverse"},
    {"subject": "Albert Einstein", "qualifiers": [["academic degree", "Master"]]},
])
def test_unknown_labels_are_404(client, body):
    res = _ask(client, **body)
    assert res.status_code == 404
    assert "unknown" in res.json()["detail"]


@pytest.mark.parametrize("body", [
    {"subject": "Albert Einstein", "direction": "sideways"},
    {"object": "ETH Zurich"},
    {"subject": "Albert Einstein", "direction": "subject"},
    {"subject": "Albert Einstein", "top_k": 0},
    {"subject": "Albert Einstein", "qualifiers": [["academic degree"]]},
])
def test_bad_requests_are_400(client, body):
    assert _ask(client, **body).status_code == 400


def test_malformed_body_is_400(client):
    res = client.post("/predict", json={"subject": "Albert Einstein"})
    assert res.status_code == 400
    assert res.json()["detail"][0]["loc"][-1] == "relation"


def test_too_many_qualifiers_is_400(client):
    quals = [["academic degree", "Bachelor"], ["academic major", "Physics"], ["academic degree", "Doctorate"]]
    res = _ask(client, subject="Albert Einstein", qualifiers=quals)
    assert res.status_code == 400


def test_lazy_load_from_checkpoint(tmp_path, einstein_statements):
    data_dir = tmp_path / "data"
    save_split(Split(einstein_statements, [], []), str(data_dir))
    config = load_run_config(TOY_CONFIG_PATH, [f"data.dir={data_dir}"])
    model, _ = toy_model(einstein_statements, config)
    model.save(str(tmp_path / "ckpt"))

    client = TestClient(create_app(checkpoint_path=str(tmp_path / "ckpt")))
    assert client.get("/health").json()["loaded"] is False
    res = _ask(client, subject="Albert Einstein", top_k=2)
    assert res.status_code == 200, res.text
    assert client.get("/health").json()["loaded"] is True
