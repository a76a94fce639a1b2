"""Placeholder substitution between lexical and delexicalized token forms."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .db import DbResult, Entity
from .schema import Schema
from .state import DialogState, normalize_value
from .tokens import placeholder

_PLACEHOLDER = re.compile(r"\[([a-z]+)_([a-z]+)\]")


class SpanError(ValueError):
    pass


@dataclass(frozen=True)
class Span:
    """Half-open token range [start, end) carrying a slot value mention."""

    start: int
    end: int
    domain: str
    slot: str

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise SpanError(f"bad span bounds [{self.start}, {self.end})")


def validate_spans(spans: list[Span], n_tokens: int) -> None:
    ordered = sorted(spans, key=lambda s: s.start)
    prev_end = 0
    for span in ordered:
        if span.end > n_tokens:
            raise SpanError(f"span {span} beyond {n_tokens} tokens")
        if span.start < prev_end:
            raise SpanError(f"overlapping span {span}")
        prev_end = span.end


def delexicalize(tokens: list[str], spans: list[Span]) -> list[str]:
    """Replace each annotated span with one `[domain_slot]` placeholder."""
    validate_spans(spans, len(tokens))
    out: list[str] = []
    pos = 0
    for span in sorted(spans, key=lambda s: s.start):
        out.extend(tokens[pos:span.start])
        out.append(placeholder(span.domain, span.slot))
        pos = span.end
    out.extend(tokens[pos:])
    return out


def split_placeholder(token: str) -> tuple[str, str] | None:
    m = _PLACEHOLDER.fullmatch(token)
    return (m.group(1), m.group(2)) if m else None


def relexicalize(
    delex_tokens: list[str],
    db_result: DbResult,
    state: DialogState,
    entities: dict[int, Entity] | None = None,
) -> list[str]:
    """Fill placeholders from the dialog state and the first matched entity.

    `[domain_name]` and requestable placeholders come from the entity;
    informable placeholders come from the state.  Anything unfillable is
    kept verbatim so the gap stays visible.
    """
    first: Entity | None = None
    if db_result.matched_entities and entities:
        first = entities.get(db_result.matched_entities[0])
    out: list[str] = []
    for tok in delex_tokens:
        parts = split_placeholder(tok)
        if parts is None:
            out.append(tok)
            continue
        domain, slot = parts
        filled: str | None = None
        state_value = state.get(domain, slot)
        if state_value is not None:
            filled = state_value
        elif first is not None and first.domain == domain and slot in first.attributes:
            filled = first.attributes[slot]
        if filled is None:
            out.append(tok)
        else:
            out.extend(filled.split())
    return out


def build_lexicon(
    schema: Schema,
    entities: list[Entity],
    free_values: dict[tuple[str, str], list[str]] | None = None,
) -> dict[tuple[str, ...], tuple[str, str]]:
    """Value-token lookup for span detection over raw user text.

    Closed-vocabulary informable values come from the schema; free-text
    slots contribute nothing there, so callers supply their candidate
    values (e.g. the generator's place/time pools) via free_values.  When
    two slots share a surface value the first schema entry wins.
    """
    lexicon: dict[tuple[str, ...], tuple[str, str]] = {}
    for spec in schema.domains:
        for slot, values in spec.informable.items():
            for value in values or ():
                key = tuple(normalize_value(value).split())
                lexicon.setdefault(key, (spec.name, slot))
    for ent in entities:
        for slot, value in ent.attributes.items():
            if slot in schema.domain(ent.domain).informable:
                key = tuple(normalize_value(value).split())
                lexicon.setdefault(key, (ent.domain, slot))
    for (domain, slot), values in (free_values or {}).items():
        for value in values:
            key = tuple(normalize_value(value).split())
            lexicon.setdefault(key, (domain, slot))
    return lexicon


def find_value_spans(
    tokens: list[str], lexicon: dict[tuple[str, ...], tuple[str, str]]
) -> list[Span]:
    """Greedy left-to-right longest-match span detection against a lexicon."""
    if not lexicon:
        return []
    max_len = max(len(k) for k in lexicon)
    spans: list[Span] = []
    i = 0
    while i < len(tokens):
        hit = None
        for width in range(min(max_len, len(tokens) - i), 0, -1):
            key = tuple(tokens[i:i + width])
            if key in lexicon:
                hit = (width, lexicon[key])
                break
        if hit is None:
            i += 1
        else:
            width, (domain, slot) = hit
            spans.append(Span(i, i + width, domain, slot))
            i += width
    return spans
