"""Encoder input layouts and decode targets shared by training and inference.

The state tracker reads (prev state, prev response, user utterance); the
response generator reads (prev response, user utterance, current state).
Segments are joined with <sep> and an empty segment becomes a single <pad>
so segment boundaries never collapse.
"""

from __future__ import annotations

from .schema import Schema
from .state import DialogState, LevenshteinState, serialize_delta, serialize_state
from .tokens import EOS, PAD, SEP


def _segment(tokens: list[str]) -> list[str]:
    return tokens if tokens else [PAD]


def join_segments(*segments: list[str]) -> list[str]:
    out: list[str] = []
    for i, seg in enumerate(segments):
        if i > 0:
            out.append(SEP)
        out.extend(_segment(seg))
    return out


def dst_context(
    prev_state: DialogState, prev_resp: list[str], user_lex: list[str], schema: Schema
) -> list[str]:
    return join_segments(serialize_state(prev_state, schema), prev_resp, user_lex)


def dst_context_noisy(
    noisy_state_tokens: list[str], prev_resp: list[str], user_lex: list[str]
) -> list[str]:
    return join_segments(noisy_state_tokens, prev_resp, user_lex)


def resp_context(
    prev_resp: list[str], user: list[str], curr_state: DialogState, schema: Schema
) -> list[str]:
    return join_segments(prev_resp, user, serialize_state(curr_state, schema))


def resp_context_from_tokens(
    prev_resp: list[str], user: list[str], state_tokens: list[str]
) -> list[str]:
    return join_segments(prev_resp, user, state_tokens)


def delta_target(delta: LevenshteinState, schema: Schema) -> list[str]:
    return serialize_delta(delta, schema) + [EOS]


def resp_target(resp_delex: list[str]) -> list[str]:
    return resp_delex + [EOS]


def active_domain(delta: LevenshteinState, prev_active: str | None, schema: Schema) -> str:
    """Domain whose DB the current turn consults.

    The first edit of the turn wins; an empty delta keeps the previous
    turn's domain; before any edit at all, fall back to the schema's
    first domain.
    """
    if delta.edits:
        return delta.edits[0].domain
    if prev_active is not None:
        return prev_active
    return schema.domain_names()[0]
