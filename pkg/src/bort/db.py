"""Entity databases: synthetic generation, constraint queries, bucketed state ids.

Each entity row carries every informable slot plus the requestable
attributes (name, phone, address for the default schema).  Queries are a
brute-force scan over normalized exact matches; at 40 entities per domain
that scan is also the test oracle.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from . import rng
from .schema import Schema, SchemaViolation
from .state import DialogState, normalize_value

_ADJECTIVES = (
    "golden", "royal", "quiet", "grand", "little", "old", "blue",
    "copper", "garden", "harbour", "ivory", "lucky",
)
_HOTEL_NOUNS = ("crown", "anchor", "willow", "lantern", "bridge", "swan", "orchard")
_RESTAURANT_NOUNS = ("table", "kitchen", "spoon", "oven", "pantry", "grill", "plate")
_STREETS = (
    "mill", "station", "church", "bridge", "park", "king", "queen", "market",
)


@dataclass(frozen=True)
class Entity:
    id: int
    domain: str
    attributes: dict[str, str]

    def name(self) -> str:
        return self.attributes.get("name", "")


@dataclass(frozen=True)
class DbResult:
    match_count: int
    bookable: bool
    matched_entities: tuple[int, ...]


def bucket(match_count: int) -> int:
    if match_count < 0:
        raise ValueError(f"negative match count {match_count}")
    if match_count == 0:
        return 0
    if match_count == 1:
        return 1
    if match_count <= 3:
        return 2
    if match_count <= 9:
        return 3
    return 4


N_DB_STATES = 10


def db_state_id(result: DbResult) -> int:
    """Map (match count, bookable) to one of 10 embedding rows."""
    return bucket(result.match_count) * 2 + (1 if result.bookable else 0)


class Database:
    """Per-domain entity tables with scan-based constraint matching."""

    def __init__(self, schema: Schema, entities: list[Entity]):
        self.schema = schema
        self._by_domain: dict[str, list[Entity]] = {d: [] for d in schema.domain_names()}
        for ent in entities:
            if ent.domain not in self._by_domain:
                raise SchemaViolation(f"entity {ent.id} in unknown domain {ent.domain!r}")
            self._by_domain[ent.domain].append(ent)
        for rows in self._by_domain.values():
            rows.sort(key=lambda e: e.id)

    def entities(self, domain: str) -> list[Entity]:
        return list(self._by_domain[domain])

    def entity(self, domain: str, entity_id: int) -> Entity:
        for ent in self._by_domain[domain]:
            if ent.id == entity_id:
                return ent
        raise KeyError(f"no entity {entity_id} in {domain}")

    def query(self, state: DialogState, domain: str) -> DbResult:
        """Entities satisfying every constraint present in state[domain].

        Absent slots are unconstrained.  Db-less domains always report
        zero matches but stay bookable; has_db domains are bookable iff
        at least one entity matched.
        """
        spec = self.schema.domain(domain)
        if not spec.has_db:
            return DbResult(match_count=0, bookable=True, matched_entities=())
        constraints = {
            slot: normalize_value(value)
            for slot, value in state.constraints(domain).items()
        }
        matched = [
            ent.id
            for ent in self._by_domain[domain]
            if all(ent.attributes.get(s) == v for s, v in constraints.items())
        ]
        return DbResult(
            match_count=len(matched),
            bookable=len(matched) >= 1,
            matched_entities=tuple(matched),
        )

    def to_json(self) -> list[dict]:
        return [
            {"id": e.id, "domain": e.domain, "attributes": dict(e.attributes)}
            for d in self.schema.domain_names()
            for e in self._by_domain[d]
        ]

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def from_json(cls, schema: Schema, rows: list[dict]) -> "Database":
        entities = [
            Entity(id=int(r["id"]), domain=r["domain"], attributes=dict(r["attributes"]))
            for r in rows
        ]
        return cls(schema, entities)

    @classmethod
    def load(cls, schema: Schema, path: str | Path) -> "Database":
        return cls.from_json(schema, json.loads(Path(path).read_text(encoding="utf-8")))


def _name_pool(domain: str) -> list[str]:
    nouns = _HOTEL_NOUNS if domain == "hotel" else _RESTAURANT_NOUNS
    return [f"{a} {n}" for a in _ADJECTIVES for n in nouns]


def generate_db(schema: Schema, seed: int, entities_per_domain: int = 40) -> Database:
    """Deterministic synthetic entity tables for every has_db domain."""
    gen = rng.stream(seed, "db")
    entities: list[Entity] = []
    next_id = 0
    for spec in schema.domains:
        if not spec.has_db:
            continue
        pool = _name_pool(spec.name)
        if entities_per_domain > len(pool):
            raise ValueError(f"name pool too small for {entities_per_domain} entities")
        names = [pool[i] for i in gen.choice(len(pool), size=entities_per_domain, replace=False)]
        for name in names:
            attrs = {"name": name}
            for slot, values in spec.informable.items():
                if values is None:
                    raise SchemaViolation(f"free-text slot {spec.name}.{slot} in a DB domain")
                attrs[slot] = values[int(gen.integers(len(values)))]
            for slot in spec.requestable:
                if slot == "phone":
                    attrs[slot] = "0" + "".join(str(d) for d in gen.integers(10, size=9))
                elif slot == "address":
                    num = int(gen.integers(1, 99))
                    street = _STREETS[int(gen.integers(len(_STREETS)))]
                    attrs[slot] = f"{num} {street} street"
                else:
                    attrs[slot] = f"{slot} of {name}"
            entities.append(Entity(id=next_id, domain=spec.name, attributes=attrs))
            next_id += 1
    return Database(schema, entities)
