"""Template-grammar generator for synthetic multi-domain dialog sessions.

Goals are entity-backed: constraint values for database domains are copied
from a concrete entity, so a session that follows its own script always
ends with at least one matching row and the gold responses earn full task
scores.  Lexical variety comes from per-act template pools; the content
plan, not the surface form, carries the dialog semantics.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .. import rng
from ..db import Database
from ..delex import Span, delexicalize, relexicalize, split_placeholder
from ..schema import Schema, schema_hash
from ..state import DialogState, Edit, LevenshteinState, diff_state, merge_state
from ..tokens import placeholder


class CorpusError(ValueError):
    pass


TAXI_PLACES = (
    "stevenage train station", "city centre", "the airport", "riverside museum",
    "king street corner", "the old harbour", "north bus depot", "cinema plaza",
    "the science park", "market square", "west gate mall", "the grand library",
)
TAXI_TIMES = (
    "02:15", "05:45", "08:00", "09:30", "11:15", "12:45",
    "14:00", "15:30", "17:05", "18:20", "20:10", "22:40",
)

FREE_SLOT_VALUES: dict[tuple[str, str], tuple[str, ...]] = {
    ("taxi", "destination"): TAXI_PLACES,
    ("taxi", "leaveat"): TAXI_TIMES,
}


@dataclass(frozen=True)
class Goal:
    constraints: dict[str, dict[str, str]]
    requests: dict[str, tuple[str, ...]]

    def domains(self) -> tuple[str, ...]:
        return tuple(self.constraints)


@dataclass(frozen=True)
class Turn:
    user_lex: list[str]
    user_spans: list[Span]
    user_delex: list[str]
    resp_delex: list[str]
    resp_lex: list[str]
    gold_state: DialogState
    gold_delta: LevenshteinState
    offered_entity: int | None
    provided_requestables: frozenset[tuple[str, str]]


@dataclass(frozen=True)
class Session:
    id: str
    goal: Goal
    turns: list[Turn]
    domains: frozenset[str]


@dataclass
class Corpus:
    schema: Schema
    seed: int
    splits: dict[str, list[Session]] = field(default_factory=dict)

    @property
    def schema_ref(self) -> str:
        return schema_hash(self.schema)


# Per-slot surface phrases.  Each entry is a list of (tokens-before, tokens-after)
# wrapped around the value tokens, so span offsets stay mechanical.
_SLOT_PHRASES: dict[tuple[str, str], tuple[tuple[tuple[str, ...], tuple[str, ...]], ...]] = {
    ("hotel", "area"): ((("in", "the"), ()), (("near", "the"), ("side",)), (("in", "the"), ("part", "of", "town"))),
    ("hotel", "stars"): ((("with",), ("stars",)), (("rated",), ("stars",)), (("that", "has"), ("stars",))),
    ("hotel", "pricerange"): ((("in", "the"), ("price", "range")), (("with", "a"), ("price",)), (("that", "is"), ("priced",))),
    ("restaurant", "area"): ((("in", "the"), ()), (("around", "the"), ("area",)), (("in", "the"), ("part", "of", "town"))),
    ("restaurant", "food"): ((("serving",), ("food",)), (("that", "serves"), ("dishes",)), (("with",), ("cuisine",))),
    ("restaurant", "pricerange"): ((("in", "the"), ("price", "range")), (("with", "a"), ("price",)), (("that", "is"), ("priced",))),
    ("taxi", "destination"): ((("to",), ()), (("going", "to"), ()), (("headed", "to"), ())),
    ("taxi", "leaveat"): ((("leaving", "at"), ()), (("departing", "at"), ()), (("that", "leaves", "at"), ())),
}

_DOMAIN_NOUNS = {"hotel": "hotel", "restaurant": "restaurant", "taxi": "taxi"}

_OPEN_PREFIXES = (
    "i am looking for a", "i need a", "can you find a", "hi , i want a",
    "please find me a", "is there a",
)
_MORE_PREFIXES = (
    "it should be", "i would like it", "make it", "preferably",
    "it must be", "ideally",
)
_CHANGE_PREFIXES = (
    "actually i want it", "sorry , make that", "on second thought ,",
    "change that to", "wait , i prefer it", "let us do",
)
_RETRACT_TEMPLATES = (
    "actually the {slot} does not matter", "forget about the {slot}",
    "any {slot} is fine really", "the {slot} is not important",
    "never mind the {slot}", "drop the {slot} requirement",
)
_REQUEST_PREFIXES = (
    "what is the", "can i have the", "could you give me the",
    "please tell me the", "may i get the", "i also need the",
)
_USER_CLOSINGS = (
    "thank you , goodbye .", "thanks , bye .", "that is all , thanks .",
    "great , thank you .", "perfect , thanks a lot .", "thank you for the help .",
)

_SYS_REQUEST_LEADS = ("sure ,", "okay ,", "happy to help .", "no problem .", "of course .", "alright ,")
_SYS_SLOT_QUESTIONS = {
    ("hotel", "area"): "which area do you prefer ?",
    ("hotel", "stars"): "how many stars should it have ?",
    ("hotel", "pricerange"): "what price range are you thinking of ?",
    ("restaurant", "area"): "which part of town suits you ?",
    ("restaurant", "food"): "what kind of food would you like ?",
    ("restaurant", "pricerange"): "what price range works for you ?",
    ("taxi", "destination"): "where are you going ?",
    ("taxi", "leaveat"): "when do you want to leave ?",
}
_SYS_OFFERS = (
    "i recommend {name} , it matches your request .",
    "how about {name} ?",
    "{name} would be a great fit .",
    "you could try {name} .",
    "i suggest {name} for you .",
    "{name} fits all your needs .",
)
_SYS_CLARIFY = (
    "just to confirm , you want {slot} ?",
    "so that is {slot} , correct ?",
    "got it , {slot} .",
    "noted , {slot} it is .",
    "okay , {slot} then .",
    "sure , {slot} , let me check .",
)
_SYS_ANSWER_LEADS = ("sure ,", "of course ,", "here you go ,", "no problem ,", "gladly ,", "certainly ,")
_SYS_TAXI_CONFIRMS = (
    "your taxi to {dest} is booked{leave} .",
    "done , a taxi to {dest} is reserved{leave} .",
    "i have booked your taxi to {dest}{leave} .",
    "a taxi will take you to {dest}{leave} .",
    "your ride to {dest} is confirmed{leave} .",
    "all set , the taxi to {dest} is arranged{leave} .",
)
_SYS_CLOSINGS = (
    "you are welcome , goodbye .", "glad to help , bye .", "have a nice day .",
    "enjoy , goodbye .", "you are welcome , have a great day .",
    "goodbye , thanks for using our service .",
)


def _pick(gen, pool):
    return pool[int(gen.integers(len(pool)))]


def _value_phrase(gen, domain: str, slot: str, value: str) -> tuple[list[str], int, int]:
    """Tokens for one slot mention plus the value span within them."""
    before, after = _pick(gen, _SLOT_PHRASES[(domain, slot)])
    value_tokens = value.split()
    tokens = [*before, *value_tokens, *after]
    return tokens, len(before), len(before) + len(value_tokens)


def _realize_inform(gen, domain: str, pairs: list[tuple[str, str]], opening: bool) -> tuple[list[str], list[Span]]:
    prefix = _pick(gen, _OPEN_PREFIXES if opening else _MORE_PREFIXES)
    tokens = prefix.split()
    if opening:
        tokens.append(_DOMAIN_NOUNS[domain])
    spans: list[Span] = []
    for i, (slot, value) in enumerate(pairs):
        if i > 0:
            tokens.append("and")
        part, lo, hi = _value_phrase(gen, domain, slot, value)
        spans.append(Span(len(tokens) + lo, len(tokens) + hi, domain, slot))
        tokens.extend(part)
    tokens.append(".")
    return tokens, spans


def _realize_change(gen, domain: str, slot: str, value: str) -> tuple[list[str], list[Span]]:
    prefix = _pick(gen, _CHANGE_PREFIXES)
    tokens = prefix.split()
    part, lo, hi = _value_phrase(gen, domain, slot, value)
    span = Span(len(tokens) + lo, len(tokens) + hi, domain, slot)
    tokens.extend(part)
    tokens.append(".")
    return tokens, [span]


def _realize_retract(gen, slot: str) -> list[str]:
    return _pick(gen, _RETRACT_TEMPLATES).format(slot=slot).split() + ["."]


def _realize_request(gen, slots: list[str]) -> list[str]:
    prefix = _pick(gen, _REQUEST_PREFIXES)
    tokens = prefix.split()
    for i, slot in enumerate(slots):
        if i > 0:
            tokens.extend(["and", "the"])
        tokens.append(slot)
    tokens.append("?")
    return tokens


@dataclass(frozen=True)
class _Act:
    kind: str  # inform | change | retract | request | close
    domain: str
    pairs: tuple[tuple[str, str], ...] = ()
    slot: str = ""
    value: str = ""
    opening: bool = False
    slots: tuple[str, ...] = ()


def _sample_goal(gen, schema: Schema, db: Database, domains: list[str]) -> Goal:
    constraints: dict[str, dict[str, str]] = {}
    requests: dict[str, tuple[str, ...]] = {}
    multi = len(domains) > 1
    for domain in domains:
        spec = schema.domain(domain)
        if spec.has_db:
            entities = db.entities(domain)
            entity = entities[int(gen.integers(len(entities)))]
            slots = list(spec.informable)
            n = int(gen.integers(1, 3 if multi else 4))
            chosen = [slots[i] for i in gen.permutation(len(slots))[:n]]
            constraints[domain] = {s: entity.attributes[s] for s in chosen}
            if spec.requestable:
                n_req = int(gen.integers(0, 2 if multi else 3))
                reqs = [spec.requestable[i] for i in sorted(gen.permutation(len(spec.requestable))[:n_req])]
                if reqs:
                    requests[domain] = tuple(reqs)
        else:
            picked = {"destination": _pick(gen, TAXI_PLACES)}
            if gen.random() < 0.5:
                picked["leaveat"] = _pick(gen, TAXI_TIMES)
            constraints[domain] = picked
    return Goal(constraints=constraints, requests=requests)


def _plan_acts(gen, schema: Schema, goal: Goal, domains: list[str]) -> list[_Act]:
    acts: list[_Act] = []
    detour_used = False
    for domain in domains:
        spec = schema.domain(domain)
        final = dict(goal.constraints[domain])
        slots = [list(final)[i] for i in gen.permutation(len(final))]

        change_slot: str | None = None
        wrong_value = ""
        retract_slot: str | None = None
        retract_value = ""
        if not detour_used and gen.random() < 0.3:
            if gen.random() < 0.5:
                candidates = [
                    s for s in slots
                    if (spec.informable[s] is None and len(FREE_SLOT_VALUES[(domain, s)]) > 1)
                    or (spec.informable[s] is not None and len(spec.informable[s]) > 1)
                ]
                if candidates:
                    change_slot = _pick(gen, candidates)
                    pool = spec.informable[change_slot] or FREE_SLOT_VALUES[(domain, change_slot)]
                    others = [v for v in pool if v != final[change_slot]]
                    wrong_value = _pick(gen, others)
                    detour_used = True
            else:
                extras = [s for s in spec.informable if s not in final]
                if extras:
                    retract_slot = _pick(gen, extras)
                    pool = spec.informable[retract_slot] or FREE_SLOT_VALUES[(domain, retract_slot)]
                    retract_value = _pick(gen, pool)
                    detour_used = True

        first_values = dict(final)
        if change_slot:
            first_values[change_slot] = wrong_value

        chunks: list[list[tuple[str, str]]] = []
        i = 0
        while i < len(slots):
            width = int(gen.integers(1, 3))
            chunk = [(s, first_values[s]) for s in slots[i:i + width]]
            chunks.append(chunk)
            i += width
        if retract_slot:
            where = int(gen.integers(len(chunks)))
            chunks[where].append((retract_slot, retract_value))

        for j, chunk in enumerate(chunks):
            acts.append(_Act("inform", domain, pairs=tuple(chunk), opening=(j == 0)))
        if change_slot:
            acts.append(_Act("change", domain, slot=change_slot, value=final[change_slot]))
        if retract_slot:
            acts.append(_Act("retract", domain, slot=retract_slot))
        if domain in goal.requests:
            acts.append(_Act("request", domain, slots=goal.requests[domain]))
    acts.append(_Act("close", domains[-1]))
    return acts


def _system_response(
    gen, schema: Schema, db: Database, goal: Goal, act: _Act, state: DialogState,
    offered: set[str],
) -> tuple[list[str], int | None]:
    """Delexicalized response plus the offered entity id, if any."""
    domain = act.domain
    if act.kind == "close":
        return _pick(gen, _SYS_CLOSINGS).split(), None
    if act.kind == "request":
        lead = _pick(gen, _SYS_ANSWER_LEADS)
        parts = [f"the {slot} is {placeholder(domain, slot)}" for slot in act.slots]
        return f"{lead} {' and '.join(parts)} .".split(), None

    spec = schema.domain(domain)
    goal_slots = goal.constraints[domain]
    current = state.constraints(domain)
    missing = [s for s in goal_slots if s not in current]
    if missing:
        lead = _pick(gen, _SYS_REQUEST_LEADS)
        question = _SYS_SLOT_QUESTIONS[(domain, missing[0])]
        return f"{lead} {question}".split(), None
    if current != goal_slots:
        # a change or retraction is still coming; echo an in-flux slot back
        off = [s for s in current if s not in goal_slots or current[s] != goal_slots[s]]
        slot = off[0] if off else list(current)[0]
        return _pick(gen, _SYS_CLARIFY).format(slot=placeholder(domain, slot)).split(), None
    if not spec.has_db:
        leave = ""
        if "leaveat" in goal_slots:
            leave = f" leaving at {placeholder(domain, 'leaveat')}"
        text = _pick(gen, _SYS_TAXI_CONFIRMS).format(dest=placeholder(domain, "destination"), leave=leave)
        offered.add(domain)
        return text.split(), None
    result = db.query(state, domain)
    offered.add(domain)
    entity_id = result.matched_entities[0] if result.matched_entities else None
    return _pick(gen, _SYS_OFFERS).format(name=placeholder(domain, "name")).split(), entity_id


def generate_session(gen, schema: Schema, db: Database, session_id: str) -> Session:
    domain_names = list(schema.domain_names())
    n_domains = 1 if gen.random() < 0.6 else 2
    order = gen.permutation(len(domain_names))
    domains = [domain_names[i] for i in order[:n_domains]]

    goal = _sample_goal(gen, schema, db, domains)
    acts = _plan_acts(gen, schema, goal, domains)

    turns: list[Turn] = []
    state = DialogState()
    offered: set[str] = set()
    active = domains[0]
    for act in acts:
        if act.kind == "inform":
            user_lex, spans = _realize_inform(gen, act.domain, list(act.pairs), act.opening)
            target = state.as_dict()
            for slot, value in act.pairs:
                target.setdefault(act.domain, {})[slot] = value
            new_state = DialogState(target)
        elif act.kind == "change":
            user_lex, spans = _realize_change(gen, act.domain, act.slot, act.value)
            target = state.as_dict()
            target[act.domain][act.slot] = act.value
            new_state = DialogState(target)
        elif act.kind == "retract":
            user_lex, spans = _realize_retract(gen, act.slot), []
            target = state.as_dict()
            target[act.domain].pop(act.slot, None)
            new_state = DialogState(target)
        elif act.kind == "request":
            user_lex, spans = _realize_request(gen, list(act.slots)), []
            new_state = state
        else:
            user_lex, spans = _pick(gen, _USER_CLOSINGS).split(), []
            new_state = state

        delta = diff_state(state, new_state, schema)
        resp_delex, offered_entity = _system_response(gen, schema, db, goal, act, new_state, offered)
        if act.kind != "close":
            active = act.domain
        db_result = db.query(new_state, active)
        lookup = {e.id: e for e in db.entities(active)} if schema.domain(active).has_db else {}
        resp_lex = relexicalize(resp_delex, db_result, new_state, lookup)
        provided = frozenset(
            parts
            for tok in resp_delex
            if (parts := _requestable_placeholder(schema, tok)) is not None
        )
        turns.append(
            Turn(
                user_lex=user_lex,
                user_spans=spans,
                user_delex=delexicalize(user_lex, spans),
                resp_delex=resp_delex,
                resp_lex=resp_lex,
                gold_state=new_state,
                gold_delta=delta,
                offered_entity=offered_entity,
                provided_requestables=provided,
            )
        )
        state = new_state
    return Session(id=session_id, goal=goal, turns=turns, domains=frozenset(domains))


def _requestable_placeholder(schema: Schema, token: str) -> tuple[str, str] | None:
    parts = split_placeholder(token)
    if parts is None:
        return None
    domain, slot = parts
    if schema.has_domain(domain) and slot in schema.domain(domain).requestable:
        return (domain, slot)
    return None


def validate_session(session: Session, schema: Schema) -> None:
    if not 1 <= len(session.turns) <= 8:
        raise CorpusError(f"{session.id}: {len(session.turns)} turns")
    if not session.goal.constraints:
        raise CorpusError(f"{session.id}: empty goal")
    state = DialogState()
    touched: set[str] = set()
    for i, turn in enumerate(session.turns):
        expect = merge_state(turn.gold_delta, state)
        if expect != turn.gold_state:
            raise CorpusError(f"{session.id} turn {i}: state chain broken")
        if delexicalize(turn.user_lex, turn.user_spans) != turn.user_delex:
            raise CorpusError(f"{session.id} turn {i}: user_delex mismatch")
        turn.gold_state.validate(schema)
        touched.update(turn.gold_state.domains())
        state = turn.gold_state
    if touched != set(session.goal.domains()):
        raise CorpusError(f"{session.id}: goal domains {session.goal.domains()} vs states {touched}")


def validate_corpus(corpus: Corpus) -> None:
    seen: set[str] = set()
    for split, sessions in corpus.splits.items():
        for session in sessions:
            if session.id in seen:
                raise CorpusError(f"duplicate session id {session.id}")
            seen.add(session.id)
            validate_session(session, corpus.schema)


def generate_corpus(
    schema: Schema, db: Database, counts: dict[str, int], seed: int
) -> Corpus:
    for split, n in counts.items():
        if n < 1:
            raise CorpusError(f"count for {split} must be >= 1, got {n}")
    if not any(spec.informable for spec in schema.domains):
        raise CorpusError("schema has no informable slots")
    gen = rng.stream(seed, "corpus")
    corpus = Corpus(schema=schema, seed=seed)
    for split in ("train", "dev", "test"):
        sessions = [
            generate_session(gen, schema, db, f"{split}-{i:04d}")
            for i in range(counts[split])
        ]
        corpus.splits[split] = sessions
    validate_corpus(corpus)
    return corpus
