"""Dialog schema: the fixed ontology of domains, slots and value lexicons.

The schema ordering is total and drives every canonical serialization in
the package, so domain and slot order is part of the contract, not an
implementation detail.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .tokens import domain_tag

FREE = None  # lexicon marker for free-text slots


class SchemaViolation(ValueError):
    """A domain or slot that does not exist in the schema."""


@dataclass(frozen=True)
class DomainSpec:
    name: str
    informable: dict[str, tuple[str, ...] | None]  # slot -> lexicon, None = free text
    requestable: tuple[str, ...]
    has_db: bool

    def lexicon(self, slot: str) -> tuple[str, ...] | None:
        if slot not in self.informable:
            raise SchemaViolation(f"unknown informable slot {self.name}.{slot}")
        return self.informable[slot]


@dataclass(frozen=True)
class Schema:
    domains: tuple[DomainSpec, ...]

    def __post_init__(self):
        names = [d.name for d in self.domains]
        if len(set(names)) != len(names):
            raise SchemaViolation(f"duplicate domain names in {names}")
        for d in self.domains:
            slots = list(d.informable) + list(d.requestable)
            if len(set(slots)) != len(slots):
                raise SchemaViolation(f"duplicate slot names in domain {d.name}")

    def domain_names(self) -> tuple[str, ...]:
        return tuple(d.name for d in self.domains)

    def domain(self, name: str) -> DomainSpec:
        for d in self.domains:
            if d.name == name:
                return d
        raise SchemaViolation(f"unknown domain {name!r}")

    def has_domain(self, name: str) -> bool:
        return any(d.name == name for d in self.domains)

    def domain_index(self, name: str) -> int:
        for i, d in enumerate(self.domains):
            if d.name == name:
                return i
        raise SchemaViolation(f"unknown domain {name!r}")

    def slot_index(self, domain: str, slot: str) -> int:
        spec = self.domain(domain)
        for i, s in enumerate(spec.informable):
            if s == slot:
                return i
        raise SchemaViolation(f"unknown informable slot {domain}.{slot}")

    def tag_to_domain(self) -> dict[str, str]:
        return {domain_tag(d.name): d.name for d in self.domains}

    def to_json(self) -> dict:
        return {
            "domains": [
                {
                    "name": d.name,
                    "informable": {
                        s: (list(lex) if lex is not None else "free")
                        for s, lex in d.informable.items()
                    },
                    "requestable": list(d.requestable),
                    "has_db": d.has_db,
                }
                for d in self.domains
            ]
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Schema":
        domains = []
        for d in doc["domains"]:
            informable = {
                s: (None if lex == "free" else tuple(lex))
                for s, lex in d["informable"].items()
            }
            domains.append(
                DomainSpec(
                    name=d["name"],
                    informable=informable,
                    requestable=tuple(d["requestable"]),
                    has_db=bool(d["has_db"]),
                )
            )
        return cls(domains=tuple(domains))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )

    @classmethod
    def load(cls, path: str | Path) -> "Schema":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def schema_hash(schema: Schema) -> str:
    canonical = json.dumps(schema.to_json(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


AREAS = ("north", "south", "east", "west", "centre")
STARS = ("1", "2", "3", "4", "5")
PRICERANGES = ("cheap", "moderate", "expensive")
FOODS = ("italian", "chinese", "indian", "british")


def default_schema() -> Schema:
    """Compact three-domain ontology: two DB-backed domains plus a DB-less one."""
    return Schema(
        domains=(
            DomainSpec(
                name="hotel",
                informable={"area": AREAS, "stars": STARS, "pricerange": PRICERANGES},
                requestable=("phone", "address"),
                has_db=True,
            ),
            DomainSpec(
                name="restaurant",
                informable={"area": AREAS, "food": FOODS, "pricerange": PRICERANGES},
                requestable=("phone", "address"),
                has_db=True,
            ),
            DomainSpec(
                name="taxi",
                informable={"destination": FREE, "leaveat": FREE},
                requestable=(),
                has_db=False,
            ),
        )
    )
