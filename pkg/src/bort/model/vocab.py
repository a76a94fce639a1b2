"""Token-id bijection built from the schema plus the training split."""

from __future__ import annotations

import json
from pathlib import Path

from ..schema import Schema
from ..state import serialize_state
from ..tokens import RESERVED, UNK, domain_tag, placeholder


class Vocab:
    def __init__(self, tokens: list[str]):
        if len(set(tokens)) != len(tokens):
            raise ValueError("duplicate tokens in vocabulary")
        for tok in RESERVED:
            if tok not in tokens:
                raise ValueError(f"reserved token {tok!r} missing")
        self._tokens = list(tokens)
        self._ids = {t: i for i, t in enumerate(tokens)}
        self.unk_id = self._ids[UNK]

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._ids

    def id(self, token: str) -> int:
        return self._ids.get(token, self.unk_id)

    def token(self, idx: int) -> str:
        return self._tokens[idx]

    def encode(self, tokens: list[str]) -> list[int]:
        return [self.id(t) for t in tokens]

    def decode(self, ids: list[int]) -> list[str]:
        return [self._tokens[i] for i in ids]

    def tokens(self) -> list[str]:
        return list(self._tokens)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self._tokens, indent=0) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocab":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))


def schema_tokens(schema: Schema) -> list[str]:
    out: list[str] = []
    for spec in schema.domains:
        out.append(domain_tag(spec.name))
        for slot in spec.informable:
            out.append(slot)
            out.append(placeholder(spec.name, slot))
        for slot in spec.requestable:
            out.append(slot)
            out.append(placeholder(spec.name, slot))
        if spec.has_db:
            out.append("name")
            out.append(placeholder(spec.name, "name"))
    seen: set[str] = set()
    unique = []
    for tok in out:
        if tok not in seen:
            seen.add(tok)
            unique.append(tok)
    return unique


def build_vocab(schema: Schema, train_sessions) -> Vocab:
    """Reserved tokens, schema surface, then sorted train-split words."""
    fixed = list(RESERVED) + schema_tokens(schema)
    known = set(fixed)
    words: set[str] = set()
    for session in train_sessions:
        for turn in session.turns:
            for seq in (turn.user_lex, turn.user_delex, turn.resp_delex):
                words.update(seq)
            words.update(serialize_state(turn.gold_state, schema))
    return Vocab(fixed + sorted(words - known))
