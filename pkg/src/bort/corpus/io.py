"""Corpus persistence: one session per JSON line, three split files plus meta."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from ..delex import Span
from ..schema import Schema, schema_hash
from ..state import DialogState, Edit, LevenshteinState
from .gen import Corpus, CorpusError, Goal, Session, Turn

SPLITS = ("train", "dev", "test")


def _turn_to_json(turn: Turn) -> dict:
    return {
        "user_lex": turn.user_lex,
        "user_spans": [
            {"start": s.start, "end": s.end, "domain": s.domain, "slot": s.slot}
            for s in turn.user_spans
        ],
        "user_delex": turn.user_delex,
        "resp_delex": turn.resp_delex,
        "resp_lex": turn.resp_lex,
        "gold_state": turn.gold_state.as_dict(),
        "gold_delta": [
            {"domain": e.domain, "slot": e.slot, "value": e.value}
            for e in turn.gold_delta
        ],
        "offered_entity": turn.offered_entity,
        "provided_requestables": sorted([d, s] for d, s in turn.provided_requestables),
    }


def _turn_from_json(doc: dict) -> Turn:
    return Turn(
        user_lex=list(doc["user_lex"]),
        user_spans=[
            Span(s["start"], s["end"], s["domain"], s["slot"]) for s in doc["user_spans"]
        ],
        user_delex=list(doc["user_delex"]),
        resp_delex=list(doc["resp_delex"]),
        resp_lex=list(doc["resp_lex"]),
        gold_state=DialogState(doc["gold_state"]),
        gold_delta=LevenshteinState(
            [Edit(e["domain"], e["slot"], e["value"]) for e in doc["gold_delta"]]
        ),
        offered_entity=doc["offered_entity"],
        provided_requestables=frozenset((d, s) for d, s in doc["provided_requestables"]),
    )


def session_to_json(session: Session) -> dict:
    return {
        "id": session.id,
        "goal": {
            "constraints": session.goal.constraints,
            "requests": {d: list(r) for d, r in session.goal.requests.items()},
        },
        "turns": [_turn_to_json(t) for t in session.turns],
        "domains": sorted(session.domains),
    }


def session_from_json(doc: dict) -> Session:
    goal = Goal(
        constraints={d: dict(s) for d, s in doc["goal"]["constraints"].items()},
        requests={d: tuple(r) for d, r in doc["goal"]["requests"].items()},
    )
    return Session(
        id=doc["id"],
        goal=goal,
        turns=[_turn_from_json(t) for t in doc["turns"]],
        domains=frozenset(doc["domains"]),
    )


def save_corpus(corpus: Corpus, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for split in SPLITS:
        lines = [json.dumps(session_to_json(s)) for s in corpus.splits.get(split, [])]
        (out / f"{split}.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")
    meta = {
        "seed": corpus.seed,
        "schema_hash": corpus.schema_ref,
        "counts": {split: len(corpus.splits.get(split, [])) for split in SPLITS},
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")


def load_corpus(data_dir: str | Path, schema: Schema | None = None) -> Corpus:
    data = Path(data_dir)
    if schema is None:
        schema_path = data / "schema.json"
        if not schema_path.exists():
            raise CorpusError(f"no schema.json in {data}")
        schema = Schema.load(schema_path)
    meta = json.loads((data / "meta.json").read_text(encoding="utf-8"))
    if meta["schema_hash"] != schema_hash(schema):
        raise CorpusError("corpus was generated against a different schema")
    corpus = Corpus(schema=schema, seed=int(meta["seed"]))
    for split in SPLITS:
        path = data / f"{split}.jsonl"
        sessions = []
        with path.open(encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    sessions.append(session_from_json(json.loads(line)))
        if len(sessions) != meta["counts"][split]:
            raise CorpusError(f"{split} count mismatch vs meta.json")
        corpus.splits[split] = sessions
    return corpus


def corpus_fingerprint(corpus: Corpus) -> str:
    """Content hash over all splits; ties run artifacts to their data."""
    digest = hashlib.sha256()
    digest.update(corpus.schema_ref.encode())
    for split in SPLITS:
        for session in corpus.splits.get(split, []):
            digest.update(json.dumps(session_to_json(session), sort_keys=True).encode())
    return digest.hexdigest()
