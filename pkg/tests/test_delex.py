"""Placeholder substitution and lexicon-driven span detection."""

import pytest

from bort.db import DbResult
from bort.delex import (
    Span,
    SpanError,
    build_lexicon,
    delexicalize,
    find_value_spans,
    relexicalize,
    split_placeholder,
)
from bort.state import DialogState


def test_no_spans_leaves_input_unchanged():
    tokens = ["i", "need", "a", "hotel"]
    assert delexicalize(tokens, []) == tokens


def test_single_span_becomes_one_placeholder():
    tokens = ["arrive", "by", "02:15"]
    spans = [Span(2, 3, "taxi", "arriveby")]
    assert delexicalize(tokens, spans) == ["arrive", "by", "[taxi_arriveby]"]


def test_multi_token_span_collapses():
    tokens = ["go", "to", "stevenage", "train", "station", "please"]
    spans = [Span(2, 5, "taxi", "destination")]
    assert delexicalize(tokens, spans) == ["go", "to", "[taxi_destination]", "please"]


def test_adjacent_spans_order_preserved():
    tokens = ["cheap", "italian", "food"]
    spans = [
        Span(0, 1, "restaurant", "pricerange"),
        Span(1, 2, "restaurant", "food"),
    ]
    assert delexicalize(tokens, spans) == [
        "[restaurant_pricerange]", "[restaurant_food]", "food",
    ]


def test_span_count_rule():
    tokens = ["a", "b", "c", "d", "e"]
    spans = [Span(1, 3, "hotel", "area")]
    out = delexicalize(tokens, spans)
    assert len(out) == len(tokens) - (3 - 1) + 1 - 1 + 1  # one placeholder per span
    assert out == ["a", "[hotel_area]", "d", "e"]


def test_overlapping_spans_rejected():
    with pytest.raises(SpanError):
        delexicalize(["a", "b", "c"], [Span(0, 2, "hotel", "area"), Span(1, 3, "hotel", "stars")])


def test_span_beyond_end_rejected():
    with pytest.raises(SpanError):
        delexicalize(["a"], [Span(0, 2, "hotel", "area")])


def test_split_placeholder():
    assert split_placeholder("[hotel_name]") == ("hotel", "name")
    assert split_placeholder("[hotel]") is None
    assert split_placeholder("plain") is None


def test_relex_no_placeholders_unchanged(db):
    tokens = ["how", "about", "this", "one", "?"]
    assert relexicalize(tokens, DbResult(0, False, ()), DialogState()) == tokens


def test_relex_name_from_first_match(db):
    first = db.entities("hotel")[0]
    result = DbResult(1, True, (first.id,))
    out = relexicalize(
        ["try", "[hotel_name]", "."],
        result,
        DialogState(),
        entities={e.id: e for e in db.entities("hotel")},
    )
    assert out == ["try", *first.name().split(), "."]


def test_relex_unfillable_kept_verbatim():
    out = relexicalize(["try", "[hotel_name]"], DbResult(0, False, ()), DialogState())
    assert out == ["try", "[hotel_name]"]


def test_relex_informable_from_state(db):
    state = DialogState({"hotel": {"area": "north"}})
    out = relexicalize(["in", "the", "[hotel_area]"], DbResult(0, False, ()), state)
    assert out == ["in", "the", "north"]


def test_relex_requestable_from_entity(db):
    first = db.entities("restaurant")[0]
    lookup = {e.id: e for e in db.entities("restaurant")}
    out = relexicalize(
        ["call", "[restaurant_phone]"], DbResult(2, True, (first.id, first.id + 1)), DialogState(), lookup
    )
    assert out == ["call", first.attributes["phone"]]


def test_lexicon_finds_longest_match(schema, db):
    lexicon = build_lexicon(
        schema,
        db.entities("hotel") + db.entities("restaurant"),
        free_values={("taxi", "destination"): ["stevenage train station", "station"]},
    )
    spans = find_value_spans(["to", "stevenage", "train", "station", "now"], lexicon)
    assert spans == [Span(1, 4, "taxi", "destination")]


def test_lexicon_schema_values(schema):
    lexicon = build_lexicon(schema, [])
    spans = find_value_spans(["somewhere", "north", "and", "cheap"], lexicon)
    domains_slots = [(s.domain, s.slot, s.start, s.end) for s in spans]
    assert ("hotel", "area", 1, 2) in domains_slots
    assert ("hotel", "pricerange", 3, 4) in domains_slots


def test_lexicon_no_hits(schema):
    assert find_value_spans(["hello", "there"], build_lexicon(schema, [])) == []


def test_delex_relex_roundtrip_on_entity_name(schema, db):
    first = db.entities("hotel")[0]
    tokens = ["book", *first.name().split(), "please"]
    name_len = len(first.name().split())
    spans = [Span(1, 1 + name_len, "hotel", "name")]
    delexed = delexicalize(tokens, spans)
    assert delexed == ["book", "[hotel_name]", "please"]
    back = relexicalize(
        delexed, DbResult(1, True, (first.id,)), DialogState(), {first.id: first}
    )
    assert back == tokens
