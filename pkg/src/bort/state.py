"""Dialog-state algebra: canonical serialization, lenient parsing, merge and diff.

A dialog state is a nested domain -> slot -> value map; a Levenshtein state
is the minimal edit list between two dialog states, where a null-valued
edit deletes a slot.  The canonical token form is

    [domain] slot = value tokens ; slot = value tokens ; [domain] ...

with domains and slots in schema order, so serialization is a pure function
of the state's content.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .schema import Schema, SchemaViolation
from .tokens import END_OF_ENTRY, EQUALS, NULL, domain_tag

_BARE_TAG = re.compile(r"\[[a-z]+\]")


def normalize_value(text: str) -> str:
    """Lowercase, single-space value normal form used before any comparison."""
    return " ".join(text.lower().split())


class DialogState:
    """Accumulated slot-value constraints, compared by content only."""

    __slots__ = ("_entries",)

    def __init__(self, entries: dict[str, dict[str, str]] | None = None):
        cleaned: dict[str, dict[str, str]] = {}
        for domain, slots in (entries or {}).items():
            if slots:
                cleaned[domain] = {s: normalize_value(v) for s, v in slots.items()}
        self._entries = cleaned

    def as_dict(self) -> dict[str, dict[str, str]]:
        return {d: dict(s) for d, s in self._entries.items()}

    def domains(self) -> tuple[str, ...]:
        return tuple(self._entries)

    def get(self, domain: str, slot: str) -> str | None:
        return self._entries.get(domain, {}).get(slot)

    def constraints(self, domain: str) -> dict[str, str]:
        return dict(self._entries.get(domain, {}))

    def is_empty(self) -> bool:
        return not self._entries

    def validate(self, schema: Schema) -> None:
        for domain, slots in self._entries.items():
            spec = schema.domain(domain)
            for slot, value in slots.items():
                if slot not in spec.informable:
                    raise SchemaViolation(f"unknown slot {domain}.{slot}")
                if not value:
                    raise SchemaViolation(f"empty value for {domain}.{slot}")
                if value == NULL:
                    raise SchemaViolation(f"null value stored for {domain}.{slot}")

    def __eq__(self, other) -> bool:
        if not isinstance(other, DialogState):
            return NotImplemented
        return self._entries == other._entries

    def __hash__(self):
        return hash(
            tuple(sorted((d, tuple(sorted(s.items()))) for d, s in self._entries.items()))
        )

    def __bool__(self) -> bool:
        return bool(self._entries)

    def __repr__(self) -> str:
        return f"DialogState({self._entries!r})"


@dataclass(frozen=True)
class Edit:
    domain: str
    slot: str
    value: str | None  # None deletes the slot

    def is_delete(self) -> bool:
        return self.value is None


class LevenshteinState:
    """Ordered edit list transforming one dialog state into another."""

    __slots__ = ("edits",)

    def __init__(self, edits: tuple[Edit, ...] | list[Edit] = ()):
        norm = []
        for e in edits:
            value = None if e.value is None else normalize_value(e.value)
            norm.append(Edit(e.domain, e.slot, value))
        self.edits = tuple(norm)

    def validate(self, schema: Schema) -> None:
        keys = [(e.domain, e.slot) for e in self.edits]
        if len(set(keys)) != len(keys):
            raise SchemaViolation(f"duplicate edits in {keys}")
        order = [(schema.domain_index(d), schema.slot_index(d, s)) for d, s in keys]
        if order != sorted(order):
            raise SchemaViolation("edits not in schema order")

    def is_empty(self) -> bool:
        return not self.edits

    def __eq__(self, other) -> bool:
        if not isinstance(other, LevenshteinState):
            return NotImplemented
        return self.edits == other.edits

    def __iter__(self):
        return iter(self.edits)

    def __len__(self):
        return len(self.edits)

    def __repr__(self) -> str:
        return f"LevenshteinState({list(self.edits)!r})"


def _ordered_items(state: DialogState, schema: Schema):
    """Yield (domain, [(slot, value), ...]) in schema order; reject unknowns."""
    entries = state.as_dict()
    for domain in entries:
        if not schema.has_domain(domain):
            raise SchemaViolation(f"unknown domain {domain!r}")
    for spec in schema.domains:
        slots = entries.get(spec.name)
        if not slots:
            continue
        for slot in slots:
            if slot not in spec.informable:
                raise SchemaViolation(f"unknown slot {spec.name}.{slot}")
        ordered = [(s, slots[s]) for s in spec.informable if s in slots]
        yield spec.name, ordered


def serialize_state(state: DialogState, schema: Schema) -> list[str]:
    """Canonical token form of a dialog state; empty state -> empty sequence."""
    tokens: list[str] = []
    for domain, pairs in _ordered_items(state, schema):
        tokens.append(domain_tag(domain))
        for slot, value in pairs:
            tokens.extend([slot, EQUALS, *value.split(), END_OF_ENTRY])
    return tokens


def serialize_state_with_spans(
    state: DialogState, schema: Schema
) -> tuple[list[str], dict[str, int], dict[tuple[str, str], tuple[int, int]]]:
    """Serialization plus token positions of each domain tag and slot entry.

    A slot entry span covers slot name, '=', value tokens and the trailing
    ';' (half-open).  Used to map token-level corruption back to slots.
    """
    tokens: list[str] = []
    tag_pos: dict[str, int] = {}
    slot_spans: dict[tuple[str, str], tuple[int, int]] = {}
    for domain, pairs in _ordered_items(state, schema):
        tag_pos[domain] = len(tokens)
        tokens.append(domain_tag(domain))
        for slot, value in pairs:
            start = len(tokens)
            tokens.extend([slot, EQUALS, *value.split(), END_OF_ENTRY])
            slot_spans[(domain, slot)] = (start, len(tokens))
    return tokens, tag_pos, slot_spans


def serialize_delta(delta: LevenshteinState, schema: Schema) -> list[str]:
    """Canonical token form of an edit list; deletions carry the null symbol."""
    tokens: list[str] = []
    current = None
    for e in delta:
        if not schema.has_domain(e.domain):
            raise SchemaViolation(f"unknown domain {e.domain!r}")
        if e.slot not in schema.domain(e.domain).informable:
            raise SchemaViolation(f"unknown slot {e.domain}.{e.slot}")
        if e.domain != current:
            tokens.append(domain_tag(e.domain))
            current = e.domain
        value_tokens = [NULL] if e.value is None else e.value.split()
        tokens.extend([e.slot, EQUALS, *value_tokens, END_OF_ENTRY])
    return tokens


def _lenient_entries(
    tokens: list[str], schema: Schema, allow_null: bool
) -> tuple[dict[tuple[str, str], str | None], int]:
    """Best-effort entry extraction shared by state and delta parsing.

    Fragments that fail the grammar are skipped and counted; a duplicate
    (domain, slot) keeps the last occurrence without a warning, mirroring
    sequential overwrite semantics.
    """
    tag_map = schema.tag_to_domain()
    entries: dict[tuple[str, str], str | None] = {}
    warnings = 0
    domain: str | None = None
    buf: list[str] = []

    def flush():
        nonlocal warnings
        if not buf:
            return
        toks, buf[:] = list(buf), []
        if domain is None:
            warnings += 1
            return
        if len(toks) < 3 or toks[1] != EQUALS:
            warnings += 1
            return
        slot, value_tokens = toks[0], toks[2:]
        if slot not in schema.domain(domain).informable:
            warnings += 1
            return
        if value_tokens == [NULL]:
            if allow_null:
                entries[(domain, slot)] = None
            else:
                warnings += 1
            return
        value = normalize_value(" ".join(value_tokens))
        if not value:
            warnings += 1
            return
        entries[(domain, slot)] = value

    for tok in tokens:
        if tok in tag_map:
            flush()
            domain = tag_map[tok]
        elif _BARE_TAG.fullmatch(tok):
            # looks like a domain tag but is not one we know
            flush()
            domain = None
            warnings += 1
        elif tok == END_OF_ENTRY:
            flush()
        else:
            buf.append(tok)
    flush()
    return entries, warnings


def _schema_sorted(keys, schema: Schema):
    return sorted(keys, key=lambda k: (schema.domain_index(k[0]), schema.slot_index(*k)))


def parse_state(tokens: list[str], schema: Schema) -> tuple[DialogState, int]:
    """Lenient inverse of serialize_state; never raises, returns a warning count."""
    entries, warnings = _lenient_entries(tokens, schema, allow_null=False)
    nested: dict[str, dict[str, str]] = {}
    for domain, slot in _schema_sorted(entries, schema):
        nested.setdefault(domain, {})[slot] = entries[(domain, slot)]
    return DialogState(nested), warnings


def parse_delta(tokens: list[str], schema: Schema) -> tuple[LevenshteinState, int]:
    """Lenient inverse of serialize_delta; null values become deletions."""
    entries, warnings = _lenient_entries(tokens, schema, allow_null=True)
    edits = [
        Edit(domain, slot, entries[(domain, slot)])
        for domain, slot in _schema_sorted(entries, schema)
    ]
    return LevenshteinState(edits), warnings


def merge_state(delta: LevenshteinState, prev: DialogState) -> DialogState:
    """Apply an edit list to a previous state (the state-update function).

    Null edits delete (a no-op when the slot is absent); other edits insert
    or overwrite.  The previous state is not mutated.
    """
    result = prev.as_dict()
    for e in delta:
        if e.value is None:
            result.get(e.domain, {}).pop(e.slot, None)
        else:
            result.setdefault(e.domain, {})[e.slot] = e.value
    return DialogState(result)


def diff_state(prev: DialogState, curr: DialogState, schema: Schema) -> LevenshteinState:
    """Minimal schema-ordered edit list with merge_state(diff, prev) == curr."""
    p, c = prev.as_dict(), curr.as_dict()
    edits: list[Edit] = []
    for spec in schema.domains:
        p_slots = p.get(spec.name, {})
        c_slots = c.get(spec.name, {})
        for slot in spec.informable:
            in_p, in_c = slot in p_slots, slot in c_slots
            if in_p and not in_c:
                edits.append(Edit(spec.name, slot, None))
            elif in_c and (not in_p or p_slots[slot] != c_slots[slot]):
                edits.append(Edit(spec.name, slot, c_slots[slot]))
    return LevenshteinState(edits)
