"""Dialog evaluation: Inform, Success, BLEU, state accuracy, Success F1.

All metrics are pure functions of a run artifact plus the gold sessions;
matched entities are re-derived by querying the database from the stored
predicted states, so loaded artifacts score identically to fresh ones.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

from .contexts import active_domain
from .db import Database
from .delex import split_placeholder
from .inference import RunArtifact, SessionRun
from .schema import Schema
from .tokens import placeholder


class EvalError(ValueError):
    pass


@dataclass
class EvalReport:
    inform: float
    success: float
    bleu: float
    combined: float
    joint_goal_accuracy: float
    success_f1: float
    per_domain: dict[str, dict[str, float]] = field(default_factory=dict)
    counts: dict[str, int] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "inform": self.inform,
            "success": self.success,
            "bleu": self.bleu,
            "combined": self.combined,
            "joint_goal_accuracy": self.joint_goal_accuracy,
            "success_f1": self.success_f1,
            "per_domain": {d: dict(v) for d, v in self.per_domain.items()},
            "counts": dict(self.counts),
        }

    def table(self) -> str:
        rows = [
            ("inform", self.inform),
            ("success", self.success),
            ("bleu", self.bleu),
            ("combined", self.combined),
            ("joint_goal_accuracy", self.joint_goal_accuracy),
            ("success_f1", self.success_f1),
        ]
        for domain in sorted(self.per_domain):
            rows.append((f"inform[{domain}]", self.per_domain[domain]["inform"]))
            rows.append((f"success[{domain}]", self.per_domain[domain]["success"]))
        width = max(len(name) for name, _ in rows)
        lines = [f"{name:<{width}}  {display_round(value):>7.1f}" for name, value in rows]
        lines.append(
            f"{'sessions':<{width}}  {self.counts.get('sessions', 0):>7d}"
        )
        lines.append(f"{'turns':<{width}}  {self.counts.get('turns', 0):>7d}")
        return "\n".join(lines)


def display_round(x: float) -> float:
    """One decimal, halves away from zero, as in the reported tables."""
    if x < 0:
        return -display_round(-x)
    return math.floor(x * 10.0 + 0.5) / 10.0


def combined_score(inform: float, success: float, bleu: float) -> float:
    return 0.5 * (inform + success) + bleu


def _aligned(run: RunArtifact, sessions: list) -> list[tuple[SessionRun, object]]:
    by_id = {s.id: s for s in sessions}
    if len(run.sessions) != len(sessions):
        raise EvalError(
            f"artifact has {len(run.sessions)} sessions, corpus split has {len(sessions)}"
        )
    pairs = []
    for sr in run.sessions:
        if sr.session_id not in by_id:
            raise EvalError(f"artifact session {sr.session_id} not in corpus split")
        gold = by_id[sr.session_id]
        if len(sr.turns) != len(gold.turns):
            raise EvalError(f"turn count mismatch in session {sr.session_id}")
        pairs.append((sr, gold))
    return pairs


def _turn_domains(run: SessionRun, schema: Schema) -> list[str]:
    domains = []
    prev = None
    for turn in run.turns:
        prev = active_domain(turn.pred_delta, prev, schema)
        domains.append(prev)
    return domains


def _mentioned_placeholders(run: SessionRun, schema: Schema) -> set[tuple[str, str]]:
    found = set()
    for turn in run.turns:
        for tok in turn.resp_delex:
            parts = split_placeholder(tok)
            if parts and schema.has_domain(parts[0]):
                found.add(parts)
    return found


def _informed_domains(
    run: SessionRun, gold, schema: Schema, db: Database
) -> set[str]:
    """Goal domains for which the run offered a constraint-satisfying entity."""
    domains = _turn_domains(run, schema)
    mentioned = _mentioned_placeholders(run, schema)
    informed = set()
    for domain, constraints in gold.goal.constraints.items():
        spec = schema.domain(domain)
        if not spec.has_db:
            if any(d == domain for d, _ in mentioned):
                informed.add(domain)
            continue
        want = placeholder(domain, "name")
        for turn, turn_domain in zip(run.turns, domains):
            if want not in turn.resp_delex or turn_domain != domain:
                continue
            result = db.query(turn.pred_state, domain)
            if not result.matched_entities:
                continue
            entity = db.entity(domain, result.matched_entities[0])
            if all(entity.attributes.get(s) == v for s, v in constraints.items()):
                informed.add(domain)
                break
    return informed


def inform_success(
    run: RunArtifact, sessions: list, schema: Schema, db: Database
) -> tuple[float, float, dict[str, dict[str, float]]]:
    pairs = _aligned(run, sessions)
    informed_sessions = 0
    successful_sessions = 0
    domain_goal = Counter()
    domain_informed = Counter()
    domain_success = Counter()
    for sr, gold in pairs:
        informed = _informed_domains(sr, gold, schema, db)
        mentioned = _mentioned_placeholders(sr, schema)
        requested = {
            (d, s) for d, slots in gold.goal.requests.items() for s in slots
        }
        goal_domains = set(gold.goal.constraints)
        all_informed = goal_domains <= informed
        all_requested = requested <= mentioned
        if all_informed:
            informed_sessions += 1
            if all_requested:
                successful_sessions += 1
        for d in goal_domains:
            domain_goal[d] += 1
            if d in informed:
                domain_informed[d] += 1
                asked = {(dd, s) for (dd, s) in requested if dd == d}
                if asked <= mentioned:
                    domain_success[d] += 1
    n = len(pairs)
    per_domain = {
        d: {
            "inform": 100.0 * domain_informed[d] / domain_goal[d],
            "success": 100.0 * domain_success[d] / domain_goal[d],
        }
        for d in sorted(domain_goal)
    }
    return (
        100.0 * informed_sessions / n,
        100.0 * successful_sessions / n,
        per_domain,
    )


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu_corpus(pairs: list[tuple[list[str], list[str]]]) -> float:
    """Pooled BLEU-4, uniform weights, no smoothing, zero on any empty order."""
    clipped = [0] * 4
    totals = [0] * 4
    hyp_len = 0
    ref_len = 0
    for hyp, ref in pairs:
        hyp_len += len(hyp)
        ref_len += len(ref)
        for n in range(1, 5):
            hyp_counts = _ngrams(hyp, n)
            ref_counts = _ngrams(ref, n)
            totals[n - 1] += sum(hyp_counts.values())
            clipped[n - 1] += sum(
                min(c, ref_counts[g]) for g, c in hyp_counts.items()
            )
    if hyp_len == 0:
        return 0.0
    precisions = [
        (clipped[i] / totals[i]) if totals[i] else 0.0 for i in range(4)
    ]
    if any(p == 0.0 for p in precisions):
        return 0.0
    log_avg = sum(0.25 * math.log(p) for p in precisions)
    bp = 1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / hyp_len)
    return 100.0 * bp * math.exp(log_avg)


def bleu(run: RunArtifact, sessions: list) -> float:
    pairs = []
    for sr, gold in _aligned(run, sessions):
        for turn, gold_turn in zip(sr.turns, gold.turns):
            pairs.append((list(turn.resp_delex), list(gold_turn.resp_delex)))
    return bleu_corpus(pairs)


def joint_goal_accuracy(run: RunArtifact, sessions: list) -> float:
    exact = 0
    total = 0
    for sr, gold in _aligned(run, sessions):
        for turn, gold_turn in zip(sr.turns, gold.turns):
            total += 1
            if turn.pred_state == gold_turn.gold_state:
                exact += 1
    return 100.0 * exact / total if total else 0.0


def success_f1(run: RunArtifact, sessions: list, schema: Schema) -> float:
    overlap = provided_total = requested_total = 0
    for sr, gold in _aligned(run, sessions):
        requested = {(d, s) for d, slots in gold.goal.requests.items() for s in slots}
        provided = {
            (d, s) for d, s in _mentioned_placeholders(sr, schema)
            if s in schema.domain(d).requestable
        }
        if not requested and not provided:
            continue
        overlap += len(provided & requested)
        provided_total += len(provided)
        requested_total += len(requested)
    precision = overlap / provided_total if provided_total else 0.0
    recall = overlap / requested_total if requested_total else 0.0
    if precision + recall == 0.0:
        return 0.0
    return 200.0 * precision * recall / (precision + recall)


def evaluate(
    run: RunArtifact, sessions: list, schema: Schema, db: Database
) -> EvalReport:
    inform, success, per_domain = inform_success(run, sessions, schema, db)
    b = bleu(run, sessions)
    return EvalReport(
        inform=inform,
        success=success,
        bleu=b,
        combined=combined_score(inform, success, b),
        joint_goal_accuracy=joint_goal_accuracy(run, sessions),
        success_f1=success_f1(run, sessions, schema),
        per_domain=per_domain,
        counts={
            "sessions": len(run.sessions),
            "turns": sum(len(sr.turns) for sr in run.sessions),
        },
    )


@dataclass(frozen=True)
class NoiseSweep:
    model: str
    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        ps = [p for p, _ in self.points]
        if any(b <= a for a, b in zip(ps, ps[1:])):
            raise ValueError(f"noise proportions must strictly increase, got {ps}")


DEFAULT_PROPORTIONS = (0.0, 0.05, 0.1, 0.15, 0.2)


def noise_sweep(
    models: list[tuple[str, object, object]],
    schema: Schema,
    db: Database,
    sessions: list,
    proportions: tuple[float, ...] = DEFAULT_PROPORTIONS,
    seed: int = 0,
) -> list[NoiseSweep]:
    """Policy-opt combined score per (model, p); models = (label, model, vocab)."""
    from .inference import run_corpus

    sweeps = []
    for label, model, vocab in models:
        points = []
        for p in proportions:
            artifact = run_corpus(
                model, vocab, schema, db, sessions, "policy_opt", p=p, seed=seed
            )
            report = evaluate(artifact, sessions, schema, db)
            points.append((p, report.combined))
        sweeps.append(NoiseSweep(model=label, points=tuple(points)))
    return sweeps


def sweep_csv(sweeps: list[NoiseSweep]) -> str:
    lines = ["model,p,combined"]
    for sweep in sweeps:
        for p, combined in sweep.points:
            lines.append(f"{sweep.model},{p:g},{combined!r}")
    return "\n".join(lines) + "\n"
