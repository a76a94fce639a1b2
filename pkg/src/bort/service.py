"""HTTP chat service over the trained model.

Every utterance runs the same two-pass pipeline as scripted evaluation,
with one deliberate difference: live chat has no reference transcript,
so the tracker context carries the model's own previous reply.  Each
response flags that substitution in `protocol_note`.

Decode or parse problems never surface as a 500; the turn comes back
with an empty reply and a warning count instead, and the session state
stays as it was.
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import APIRouter, FastAPI, HTTPException
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .contexts import active_domain
from .db import Database, db_state_id
from .delex import build_lexicon, delexicalize, find_value_spans, relexicalize
from .inference import predict_turn_response, predict_turn_state
from .model.network import Seq2SeqModel
from .model.vocab import Vocab
from .schema import Schema, schema_hash
from .state import DialogState

PROTOCOL_NOTE = (
    "tracker context uses the generated previous reply; "
    "scripted evaluation feeds the reference one"
)
IDLE_SECONDS = 30 * 60
MAX_UTTERANCE_TOKENS = 60


class UtteranceIn(BaseModel):
    text: str


@dataclass
class ChatSession:
    id: str
    state: DialogState = field(default_factory=lambda: DialogState({}))
    prev_resp: list[str] = field(default_factory=list)
    domain: str | None = None
    turns: list[dict] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)
    last_used: float = 0.0


class SessionStore:
    """Thread-safe session registry with idle-based eviction."""

    def __init__(self, idle_seconds: float = IDLE_SECONDS, clock=time.monotonic):
        self._sessions: dict[str, ChatSession] = {}
        self._lock = threading.Lock()
        self._idle = idle_seconds
        self._clock = clock

    def create(self) -> ChatSession:
        session = ChatSession(id=uuid.uuid4().hex[:12], last_used=self._clock())
        with self._lock:
            self._sessions[session.id] = session
        return session

    def get(self, session_id: str) -> ChatSession | None:
        with self._lock:
            session = self._sessions.get(session_id)
            if session is not None:
                session.last_used = self._clock()
            return session

    def delete(self, session_id: str) -> bool:
        with self._lock:
            return self._sessions.pop(session_id, None) is not None

    def evict_idle(self) -> int:
        cutoff = self._clock() - self._idle
        with self._lock:
            stale = [k for k, s in self._sessions.items() if s.last_used < cutoff]
            for k in stale:
                del self._sessions[k]
        return len(stale)

    def __len__(self) -> int:
        with self._lock:
            return len(self._sessions)


def build_app(
    model: Seq2SeqModel,
    vocab: Vocab,
    schema: Schema,
    db: Database,
    static_dir: str | None = None,
    idle_seconds: float = IDLE_SECONDS,
    clock=time.monotonic,
) -> FastAPI:
    app = FastAPI(title="dialog console", docs_url=None, redoc_url=None)
    store = SessionStore(idle_seconds=idle_seconds, clock=clock)
    app.state.sessions = store
    lexicon = build_lexicon(
        schema, [e for d in schema.domain_names() for e in db.entities(d)]
    )
    api = APIRouter(prefix="/api/v1")

    @api.post("/session")
    def create_session():
        store.evict_idle()
        session = store.create()
        return {"session_id": session.id, "protocol_note": PROTOCOL_NOTE}

    def _session_or_404(session_id: str) -> ChatSession:
        session = store.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"no session {session_id}")
        return session

    def _turn(session: ChatSession, tokens: list[str]) -> dict:
        delta, new_state, warnings = predict_turn_state(
            model, vocab, schema, session.state, session.prev_resp, tokens
        )
        domain = active_domain(delta, session.domain, schema)
        result = db.query(new_state, domain)
        user_delex = delexicalize(tokens, find_value_spans(tokens, lexicon))
        resp = predict_turn_response(
            model, vocab, schema, session.prev_resp, user_delex, new_state, result
        )
        lookup = (
            {e.id: e for e in db.entities(domain)}
            if schema.domain(domain).has_db else {}
        )
        resp_lex = relexicalize(resp, result, new_state, lookup)
        session.state = new_state
        session.domain = domain
        session.prev_resp = list(resp)
        return {
            "levenshtein_state": [
                {"domain": e.domain, "slot": e.slot, "value": e.value}
                for e in delta.edits
            ],
            "merged_state": new_state.as_dict(),
            "db": {
                "match_count": result.match_count,
                "bookable": result.bookable,
                "bucket_id": db_state_id(result),
            },
            "response_delex": list(resp),
            "response_lex": list(resp_lex),
            "warnings": warnings,
        }

    @api.post("/session/{session_id}/utterance")
    def post_utterance(session_id: str, body: UtteranceIn):
        store.evict_idle()
        session = _session_or_404(session_id)
        tokens = body.text.strip().lower().split()[:MAX_UTTERANCE_TOKENS]
        if not tokens:
            raise HTTPException(status_code=400, detail="empty utterance")
        with session.lock:
            try:
                doc = _turn(session, tokens)
            except Exception as err:  # keep the session alive on any decode fault
                doc = {
                    "levenshtein_state": [],
                    "merged_state": session.state.as_dict(),
                    "db": {"match_count": 0, "bookable": False, "bucket_id": 0},
                    "response_delex": [],
                    "response_lex": [],
                    "warnings": 1,
                    "error": str(err) or err.__class__.__name__,
                }
            doc["session_id"] = session.id
            doc["protocol_note"] = PROTOCOL_NOTE
            session.turns.append({"user": tokens, **doc})
            doc["turn"] = len(session.turns)
        return doc

    @api.get("/session/{session_id}")
    def get_session(session_id: str):
        store.evict_idle()
        session = _session_or_404(session_id)
        with session.lock:
            return {
                "session_id": session.id,
                "merged_state": session.state.as_dict(),
                "turns": list(session.turns),
            }

    @api.delete("/session/{session_id}")
    def delete_session(session_id: str):
        if not store.delete(session_id):
            raise HTTPException(status_code=404, detail=f"no session {session_id}")
        return {"deleted": session_id}

    @api.get("/schema")
    def get_schema():
        return {"schema": schema.to_json(), "hash": schema_hash(schema)}

    app.include_router(api)
    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="console")
    return app
