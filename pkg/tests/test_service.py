"""HTTP chat service: protocol shape, session lifecycle, fault handling."""

import pytest
from fastapi.testclient import TestClient

import bort.service as service
from bort.corpus.gen import generate_corpus
from bort.db import generate_db
from bort.model.network import ModelConfig, Seq2SeqModel, init_params
from bort.model.vocab import build_vocab
from bort.schema import default_schema, schema_hash
from bort.service import PROTOCOL_NOTE, build_app


class FakeClock:
    def __init__(self):
        self.now = 0.0

    def __call__(self):
        return self.now


@pytest.fixture(scope="module")
def world():
    schema = default_schema()
    db = generate_db(schema, seed=5)
    corpus = generate_corpus(schema, db, {"train": 8, "dev": 2, "test": 2}, seed=41)
    vocab = build_vocab(schema, corpus.splits["train"])
    cfg = ModelConfig(vocab_size=len(vocab), hidden_size=8, embed_size=8, seed=2)
    model = Seq2SeqModel(cfg, init_params(cfg))
    return schema, db, vocab, model


@pytest.fixture()
def client(world):
    schema, db, vocab, model = world
    clock = FakeClock()
    app = build_app(model, vocab, schema, db, idle_seconds=1800, clock=clock)
    with TestClient(app) as tc:
        tc.clock = clock
        yield tc


def _new_session(client) -> str:
    resp = client.post("/api/v1/session")
    assert resp.status_code == 200
    doc = resp.json()
    assert doc["protocol_note"] == PROTOCOL_NOTE
    return doc["session_id"]


def test_utterance_document_shape(client):
    sid = _new_session(client)
    resp = client.post(
        f"/api/v1/session/{sid}/utterance",
        json={"text": "I need a cheap hotel in the north"},
    )
    assert resp.status_code == 200
    doc = resp.json()
    assert doc["session_id"] == sid
    assert doc["turn"] == 1
    assert isinstance(doc["levenshtein_state"], list)
    assert isinstance(doc["merged_state"], dict)
    assert set(doc["db"]) == {"match_count", "bookable", "bucket_id"}
    assert 0 <= doc["db"]["bucket_id"] < 10
    assert isinstance(doc["response_delex"], list)
    assert isinstance(doc["response_lex"], list)
    assert doc["warnings"] >= 0
    assert doc["protocol_note"] == PROTOCOL_NOTE


def test_interleaved_sessions_do_not_share_state(client):
    # greedy decoding is deterministic, so a session's trajectory must match
    # a solo replay of the same utterances regardless of interleaving
    a = _new_session(client)
    b = _new_session(client)
    texts_a = ["i need a cheap hotel in the north", "what is the phone number"]
    texts_b = ["find me a thai restaurant please", "actually never mind that"]
    docs_a = []
    for ta, tb in zip(texts_a, texts_b):
        docs_a.append(
            client.post(f"/api/v1/session/{a}/utterance", json={"text": ta}).json()
        )
        client.post(f"/api/v1/session/{b}/utterance", json={"text": tb})
    solo = _new_session(client)
    for doc, text in zip(docs_a, texts_a):
        replay = client.post(
            f"/api/v1/session/{solo}/utterance", json={"text": text}
        ).json()
        assert replay["merged_state"] == doc["merged_state"]
        assert replay["response_delex"] == doc["response_delex"]
    for sid in (a, b):
        transcript = client.get(f"/api/v1/session/{sid}").json()
        assert len(transcript["turns"]) == 2


def test_state_persists_across_turns(client):
    sid = _new_session(client)
    first = client.post(
        f"/api/v1/session/{sid}/utterance", json={"text": "hello there"}
    ).json()
    second = client.post(
        f"/api/v1/session/{sid}/utterance", json={"text": "anything cheap"}
    ).json()
    assert second["turn"] == 2
    info = client.get(f"/api/v1/session/{sid}").json()
    assert len(info["turns"]) == 2
    assert info["merged_state"] == second["merged_state"]
    assert info["turns"][0]["response_delex"] == first["response_delex"]


def test_unknown_session_404(client):
    assert client.get("/api/v1/session/zzz").status_code == 404
    assert client.post(
        "/api/v1/session/zzz/utterance", json={"text": "hi"}
    ).status_code == 404
    assert client.delete("/api/v1/session/zzz").status_code == 404


def test_empty_utterance_400(client):
    sid = _new_session(client)
    resp = client.post(f"/api/v1/session/{sid}/utterance", json={"text": "   "})
    assert resp.status_code == 400


def test_delete_session(client):
    sid = _new_session(client)
    assert client.delete(f"/api/v1/session/{sid}").status_code == 200
    assert client.get(f"/api/v1/session/{sid}").status_code == 404


def test_idle_sessions_evicted(client):
    sid = _new_session(client)
    client.clock.now += 1801.0
    # any request sweeps; the old session is past the idle window
    client.post("/api/v1/session")
    assert client.get(f"/api/v1/session/{sid}").status_code == 404


def test_recent_sessions_survive_sweep(client):
    sid = _new_session(client)
    client.clock.now += 600.0
    client.post("/api/v1/session")
    assert client.get(f"/api/v1/session/{sid}").status_code == 200


def test_schema_endpoint(client, world):
    schema = world[0]
    doc = client.get("/api/v1/schema").json()
    assert doc["hash"] == schema_hash(schema)
    names = [d["name"] for d in doc["schema"]["domains"]]
    assert names == list(schema.domain_names())


def test_decode_fault_returns_turn_not_500(client, monkeypatch):
    def boom(*args, **kwargs):
        raise RuntimeError("decoder fell over")

    monkeypatch.setattr(service, "predict_turn_state", boom)
    sid = _new_session(client)
    resp = client.post(f"/api/v1/session/{sid}/utterance", json={"text": "hi"})
    assert resp.status_code == 200
    doc = resp.json()
    assert doc["response_delex"] == []
    assert doc["warnings"] == 1
    assert "decoder fell over" in doc["error"]
    # the session survives and the next (healthy) turn still counts up
    monkeypatch.undo()
    resp = client.post(f"/api/v1/session/{sid}/utterance", json={"text": "hi again"})
    assert resp.status_code == 200
    assert resp.json()["turn"] == 2


def test_static_bundle_served(world, tmp_path):
    schema, db, vocab, model = world
    static = tmp_path / "static"
    static.mkdir()
    (static / "index.html").write_text("<html><body>console</body></html>")
    app = build_app(model, vocab, schema, db, static_dir=str(static))
    with TestClient(app) as tc:
        page = tc.get("/")
        assert page.status_code == 200
        assert "console" in page.text
        assert tc.get("/api/v1/schema").status_code == 200


def test_without_static_dir_root_is_404(client):
    assert client.get("/").status_code == 404
