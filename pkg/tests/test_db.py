"""Database generation, scan queries, and the bucketed state-id table."""

import pytest

from bort.db import Database, DbResult, bucket, db_state_id, generate_db
from bort.state import DialogState


def test_generation_deterministic(schema):
    a = generate_db(schema, seed=17)
    b = generate_db(schema, seed=17)
    assert a.to_json() == b.to_json()
    assert a.to_json() != generate_db(schema, seed=18).to_json()


def test_generation_covers_db_domains_only(schema, db):
    assert len(db.entities("hotel")) == 40
    assert len(db.entities("restaurant")) == 40
    assert db.entities("taxi") == []


def test_entities_carry_all_slots(schema, db):
    for domain in ("hotel", "restaurant"):
        spec = schema.domain(domain)
        for ent in db.entities(domain):
            assert set(ent.attributes) == {"name", *spec.informable, *spec.requestable}


def test_entity_names_unique_per_domain(db):
    names = [e.name() for e in db.entities("hotel")]
    assert len(set(names)) == len(names)


def test_query_unconstrained_matches_all(db):
    result = db.query(DialogState(), "hotel")
    assert result.match_count == 40
    assert result.bookable
    assert len(result.matched_entities) == 40


def test_query_out_of_lexicon_value(db):
    result = db.query(DialogState({"hotel": {"area": "moon"}}), "hotel")
    assert result == DbResult(match_count=0, bookable=False, matched_entities=())


def test_query_matches_brute_force_scan(db):
    state = DialogState({"hotel": {"area": "north", "pricerange": "cheap"}})
    expected = [
        e.id
        for e in db.entities("hotel")
        if e.attributes["area"] == "north" and e.attributes["pricerange"] == "cheap"
    ]
    result = db.query(state, "hotel")
    assert list(result.matched_entities) == expected
    assert result.match_count == len(expected)
    assert result.bookable == (len(expected) >= 1)


def test_query_ignores_other_domains(db):
    state = DialogState({"restaurant": {"food": "italian"}})
    assert db.query(state, "hotel").match_count == 40


def test_dbless_domain_always_bookable(db):
    result = db.query(DialogState({"taxi": {"destination": "airport"}}), "taxi")
    assert result == DbResult(match_count=0, bookable=True, matched_entities=())


@pytest.mark.parametrize(
    "count,expected_bucket",
    [(0, 0), (1, 1), (2, 2), (3, 2), (4, 3), (9, 3), (10, 4), (57, 4)],
)
def test_bucket_table(count, expected_bucket):
    assert bucket(count) == expected_bucket


@pytest.mark.parametrize(
    "count,bookable,expected",
    [
        (0, False, 0),
        (0, True, 1),
        (1, False, 2),
        (1, True, 3),
        (2, False, 4),
        (3, True, 5),
        (4, False, 6),
        (7, True, 7),
        (10, False, 8),
        (25, True, 9),
    ],
)
def test_db_state_id_covers_all_ten(count, bookable, expected):
    assert db_state_id(DbResult(count, bookable, ())) == expected


def test_json_roundtrip(schema, db, tmp_path):
    path = tmp_path / "db.json"
    db.save(path)
    loaded = Database.load(schema, path)
    assert loaded.to_json() == db.to_json()
