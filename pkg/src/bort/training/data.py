"""Per-turn training examples with precomputed contexts and targets.

Everything that is fixed across epochs (contexts, targets, DB state ids)
is materialized once; only the denoising corruptions are drawn fresh at
batch time, so those keep the raw pieces they need.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..contexts import (
    active_domain,
    delta_target,
    dst_context,
    resp_context,
    resp_target,
)
from ..corpus.gen import Session
from ..db import Database, db_state_id
from ..schema import Schema
from ..state import DialogState, serialize_state
from ..tokens import EOS


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class TurnExample:
    session_id: str
    turn_index: int               # 1-based within the session
    dst_ctx: tuple[str, ...]
    state_tgt: tuple[str, ...]    # serialized delta + <eos>
    resp_ctx_delex: tuple[str, ...]
    resp_ctx_lex: tuple[str, ...]
    resp_tgt: tuple[str, ...]     # delexicalized response + <eos>
    recon_tgt: tuple[str, ...]    # the tracker context itself + <eos>
    db_id: int
    prev_db_id: int
    prev_state: DialogState
    prev_state_tokens: tuple[str, ...]
    prev_resp: tuple[str, ...]
    user_lex: tuple[str, ...]
    user_delex: tuple[str, ...]
    curr_state_tokens: tuple[str, ...]


def _check_lengths(ex: TurnExample, max_ctx: int, max_state: int, max_resp: int) -> None:
    if len(ex.dst_ctx) > max_ctx or len(ex.resp_ctx_delex) > max_ctx or len(ex.resp_ctx_lex) > max_ctx:
        raise DataError(f"{ex.session_id} turn {ex.turn_index}: context exceeds {max_ctx} tokens")
    if len(ex.state_tgt) > max_state:
        raise DataError(f"{ex.session_id} turn {ex.turn_index}: state target exceeds {max_state} tokens")
    if len(ex.resp_tgt) > max_resp:
        raise DataError(f"{ex.session_id} turn {ex.turn_index}: response target exceeds {max_resp} tokens")


def session_examples(
    session: Session,
    schema: Schema,
    db: Database,
    max_ctx_len: int = 120,
    max_state_len: int = 40,
    max_resp_len: int = 60,
) -> list[TurnExample]:
    out: list[TurnExample] = []
    prev_state = DialogState({})
    prev_resp: list[str] = []
    prev_active: str | None = None
    prev_db = 0
    for i, turn in enumerate(session.turns):
        domain = active_domain(turn.gold_delta, prev_active, schema)
        result = db.query(turn.gold_state, domain)
        db_id = db_state_id(result)
        ctx = dst_context(prev_state, prev_resp, list(turn.user_lex), schema)
        ex = TurnExample(
            session_id=session.id,
            turn_index=i + 1,
            dst_ctx=tuple(ctx),
            state_tgt=tuple(delta_target(turn.gold_delta, schema)),
            resp_ctx_delex=tuple(
                resp_context(prev_resp, list(turn.user_delex), turn.gold_state, schema)
            ),
            resp_ctx_lex=tuple(
                resp_context(prev_resp, list(turn.user_lex), turn.gold_state, schema)
            ),
            resp_tgt=tuple(resp_target(list(turn.resp_delex))),
            recon_tgt=tuple(ctx + [EOS]),
            db_id=db_id,
            prev_db_id=prev_db,
            prev_state=prev_state,
            prev_state_tokens=tuple(serialize_state(prev_state, schema)),
            prev_resp=tuple(prev_resp),
            user_lex=tuple(turn.user_lex),
            user_delex=tuple(turn.user_delex),
            curr_state_tokens=tuple(serialize_state(turn.gold_state, schema)),
        )
        _check_lengths(ex, max_ctx_len, max_state_len, max_resp_len)
        out.append(ex)
        prev_state = turn.gold_state
        prev_resp = list(turn.resp_delex)
        prev_active = domain
        prev_db = db_id
    return out


def build_examples(
    sessions: list[Session],
    schema: Schema,
    db: Database,
    max_ctx_len: int = 120,
    max_state_len: int = 40,
    max_resp_len: int = 60,
) -> list[TurnExample]:
    out: list[TurnExample] = []
    for session in sessions:
        out.extend(
            session_examples(session, schema, db, max_ctx_len, max_state_len, max_resp_len)
        )
    if not out:
        raise DataError("no turns in corpus split")
    return out
