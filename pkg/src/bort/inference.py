"""Session rollouts: greedy decoding chained over turns.

Two modes.  end_to_end tracks state with the model's own previous
predictions (oracle previous response feeds the tracker, the generated
one feeds response generation).  policy_opt skips tracking and instead
conditions responses on the oracle state, optionally mask-corrupted, to
measure how response quality degrades with state errors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import rng
from .contexts import active_domain, dst_context_noisy, resp_context_from_tokens
from .corpus.noise import mask_tokens
from .db import Database, DbResult, db_state_id
from .delex import relexicalize
from .model.network import Seq2SeqModel, pad_batch
from .model.vocab import Vocab
from .schema import Schema
from .state import (
    DialogState,
    Edit,
    LevenshteinState,
    diff_state,
    merge_state,
    parse_delta,
    parse_state,
    serialize_state,
)

MODES = ("end_to_end", "policy_opt")


@dataclass(frozen=True)
class PredictedTurn:
    pred_delta: LevenshteinState
    pred_state: DialogState
    db_result: DbResult
    resp_delex: list[str]
    resp_lex: list[str]
    warnings: int


@dataclass(frozen=True)
class SessionRun:
    session_id: str
    turns: list[PredictedTurn]


@dataclass
class RunArtifact:
    mode: str
    p: float
    seed: int
    sessions: list[SessionRun]
    checkpoint_hash: str = ""
    corpus_hash: str = ""

    def session(self, session_id: str) -> SessionRun:
        for run in self.sessions:
            if run.session_id == session_id:
                return run
        raise KeyError(f"no session {session_id} in artifact")


@dataclass
class _Live:
    """Mutable rollout cursor for one session."""

    session: object
    gen: np.random.Generator
    pred_state: DialogState = field(default_factory=lambda: DialogState({}))
    prev_gen_resp: list[str] = field(default_factory=list)
    domain: str | None = None
    turns: list[PredictedTurn] = field(default_factory=list)


def _decode_batch(
    model: Seq2SeqModel,
    vocab: Vocab,
    prefix: str,
    contexts: list[list[str]],
    max_len: int,
    db_ids: np.ndarray | None = None,
) -> list[list[str]]:
    ids, mask = pad_batch([vocab.encode(c) for c in contexts], model.p("embed").dtype)
    enc = model.encode(ids, mask)
    rows = model.decode_greedy(prefix, enc.states, enc.mask, enc.summary, max_len, db_ids=db_ids)
    return [vocab.decode(row) for row in rows]


def rollout_sessions(
    model: Seq2SeqModel,
    vocab: Vocab,
    schema: Schema,
    db: Database,
    sessions: list,
    mode: str,
    p: float = 0.0,
    seed: int = 0,
    trace: Callable[[dict], None] | None = None,
) -> list[SessionRun]:
    """Lockstep greedy rollout over many sessions at once."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"noise proportion must be in [0, 1], got {p}")
    cfg = model.config
    live = [
        _Live(session=s, gen=rng.stream(seed, f"rollout:{s.id}")) for s in sessions
    ]
    max_turns = max((len(c.session.turns) for c in live), default=0)
    for t in range(max_turns):
        active = [c for c in live if t < len(c.session.turns)]
        if not active:
            break

        # resolve this turn's state for every active session
        states: list[tuple[DialogState, LevenshteinState, int]] = []
        if mode == "end_to_end":
            contexts = []
            for c in active:
                turn = c.session.turns[t]
                oracle_prev = list(c.session.turns[t - 1].resp_delex) if t else []
                ctx = dst_context_noisy(
                    serialize_state(c.pred_state, schema), oracle_prev, list(turn.user_lex)
                )
                contexts.append(ctx)
                if trace:
                    trace({"kind": "dst_ctx", "session_id": c.session.id,
                           "turn": t + 1, "tokens": list(ctx)})
            decoded = _decode_batch(model, vocab, "dec_state", contexts, cfg.max_state_len)
            for c, tokens in zip(active, decoded):
                delta, warnings = parse_delta(tokens, schema)
                new_state = merge_state(delta, c.pred_state)
                states.append((new_state, delta, warnings))
        else:
            for c in active:
                turn = c.session.turns[t]
                noisy = mask_tokens(serialize_state(turn.gold_state, schema), p, c.gen)
                parsed, warnings = parse_state(noisy, schema)
                delta = diff_state(c.pred_state, parsed, schema)
                states.append((parsed, delta, warnings))

        # DB lookup, then the response pass
        resp_contexts = []
        db_results = []
        db_ids = []
        for c, (new_state, delta, _) in zip(active, states):
            c.domain = active_domain(delta, c.domain, schema)
            result = db.query(new_state, c.domain)
            db_results.append(result)
            db_ids.append(db_state_id(result))
            turn = c.session.turns[t]
            ctx = resp_context_from_tokens(
                list(c.prev_gen_resp), list(turn.user_delex), serialize_state(new_state, schema)
            )
            resp_contexts.append(ctx)
            if trace:
                trace({"kind": "resp_ctx", "session_id": c.session.id,
                       "turn": t + 1, "tokens": list(ctx)})
        responses = _decode_batch(
            model, vocab, "dec_resp", resp_contexts, cfg.max_resp_len,
            db_ids=np.asarray(db_ids, dtype=np.int64),
        )

        for c, (new_state, delta, warnings), result, resp in zip(
            active, states, db_results, responses
        ):
            lookup = (
                {e.id: e for e in db.entities(c.domain)}
                if schema.domain(c.domain).has_db else {}
            )
            resp_lex = relexicalize(resp, result, new_state, lookup)
            c.turns.append(PredictedTurn(
                pred_delta=delta,
                pred_state=new_state,
                db_result=result,
                resp_delex=resp,
                resp_lex=resp_lex,
                warnings=warnings,
            ))
            c.pred_state = new_state
            c.prev_gen_resp = list(resp)
    return [SessionRun(session_id=c.session.id, turns=c.turns) for c in live]


def rollout_session(
    model: Seq2SeqModel,
    vocab: Vocab,
    schema: Schema,
    db: Database,
    session,
    mode: str,
    p: float = 0.0,
    seed: int = 0,
) -> SessionRun:
    return rollout_sessions(model, vocab, schema, db, [session], mode, p, seed)[0]


def run_corpus(
    model: Seq2SeqModel,
    vocab: Vocab,
    schema: Schema,
    db: Database,
    sessions: list,
    mode: str,
    p: float = 0.0,
    seed: int = 0,
    checkpoint_hash: str = "",
    corpus_hash: str = "",
    trace: Callable[[dict], None] | None = None,
) -> RunArtifact:
    runs = rollout_sessions(model, vocab, schema, db, sessions, mode, p, seed, trace=trace)
    return RunArtifact(
        mode=mode, p=p, seed=seed, sessions=runs,
        checkpoint_hash=checkpoint_hash, corpus_hash=corpus_hash,
    )


def predict_turn_state(
    model: Seq2SeqModel,
    vocab: Vocab,
    schema: Schema,
    prev_pred_state: DialogState,
    prev_resp: list[str],
    user_lex: list[str],
):
    """One tracker step: greedy delta decode, lenient parse, merge."""
    ctx = dst_context_noisy(serialize_state(prev_pred_state, schema), prev_resp, user_lex)
    tokens = _decode_batch(model, vocab, "dec_state", [ctx], model.config.max_state_len)[0]
    delta, warnings = parse_delta(tokens, schema)
    return delta, merge_state(delta, prev_pred_state), warnings


def predict_turn_response(
    model: Seq2SeqModel,
    vocab: Vocab,
    schema: Schema,
    prev_resp: list[str],
    user_delex: list[str],
    state: DialogState,
    db_result: DbResult,
) -> list[str]:
    """One response step conditioned on the resolved state and DB outcome."""
    ctx = resp_context_from_tokens(prev_resp, user_delex, serialize_state(state, schema))
    db_ids = np.asarray([db_state_id(db_result)], dtype=np.int64)
    return _decode_batch(
        model, vocab, "dec_resp", [ctx], model.config.max_resp_len, db_ids=db_ids
    )[0]


def _delta_json(delta) -> list[dict]:
    return [
        {"domain": e.domain, "slot": e.slot, "value": e.value} for e in delta.edits
    ]


def save_artifact(artifact: RunArtifact, path: str | Path) -> None:
    meta = {
        "checkpoint_hash": artifact.checkpoint_hash,
        "corpus_hash": artifact.corpus_hash,
        "mode": artifact.mode,
        "p": artifact.p,
        "seed": artifact.seed,
    }
    lines = [json.dumps(meta)]
    for run in artifact.sessions:
        doc = {
            "session_id": run.session_id,
            "turns": [
                {
                    "pred_delta": _delta_json(turn.pred_delta),
                    "pred_state": turn.pred_state.as_dict(),
                    "db": {
                        "match_count": turn.db_result.match_count,
                        "bookable": turn.db_result.bookable,
                    },
                    "resp_delex": list(turn.resp_delex),
                    "resp_lex": list(turn.resp_lex),
                    "warnings": turn.warnings,
                }
                for turn in run.turns
            ],
        }
        lines.append(json.dumps(doc))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_artifact(path: str | Path) -> RunArtifact:
    """Rebuild an artifact from disk.

    The db entry only persists match_count/bookable; matched entity ids
    are a pure function of (pred_state, active domain) and anything that
    needs them re-queries the database.
    """
    text = Path(path).read_text(encoding="utf-8").strip().splitlines()
    if not text:
        raise ValueError(f"empty artifact file {path}")
    meta = json.loads(text[0])
    sessions = []
    for line in text[1:]:
        doc = json.loads(line)
        turns = []
        for t in doc["turns"]:
            delta = LevenshteinState(tuple(
                Edit(e["domain"], e["slot"], e["value"]) for e in t["pred_delta"]
            ))
            turns.append(PredictedTurn(
                pred_delta=delta,
                pred_state=DialogState(t["pred_state"]),
                db_result=DbResult(
                    match_count=t["db"]["match_count"],
                    bookable=t["db"]["bookable"],
                    matched_entities=(),
                ),
                resp_delex=list(t["resp_delex"]),
                resp_lex=list(t["resp_lex"]),
                warnings=int(t["warnings"]),
            ))
        sessions.append(SessionRun(session_id=doc["session_id"], turns=turns))
    return RunArtifact(
        mode=meta["mode"], p=meta["p"], seed=meta["seed"], sessions=sessions,
        checkpoint_hash=meta["checkpoint_hash"], corpus_hash=meta["corpus_hash"],
    )
