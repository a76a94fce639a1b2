"""Central finite-difference verification of every loss term's gradients.

Runs a deliberately tiny model in double precision over one hand-built
two-turn session, so the full parameter vector can be perturbed
coordinate by coordinate in reasonable time.
"""

from __future__ import annotations

import numpy as np

from .. import rng
from ..corpus.gen import Goal, Session, Turn
from ..db import Database, Entity
from ..delex import Span
from ..model.network import ModelConfig, Seq2SeqModel, init_params
from ..model.vocab import Vocab, build_vocab
from ..schema import DomainSpec, Schema
from ..state import DialogState, Edit, LevenshteinState
from .config import TrainConfig
from .data import TurnExample, build_examples
from .losses import batch_losses
from .optim import AdamW

REL_ERR_FLOOR = 1e-8


def micro_world() -> tuple[Schema, Database, list[Session]]:
    schema = Schema((
        DomainSpec(
            name="cafe",
            informable={"area": ("north", "south"), "price": ("cheap", "dear")},
            requestable=("phone",),
            has_db=True,
        ),
    ))
    entities = (
        Entity(0, "cafe", {
            "name": "north bean", "area": "north", "price": "cheap", "phone": "0111222333",
        }),
        Entity(1, "cafe", {
            "name": "south roast", "area": "south", "price": "dear", "phone": "0444555666",
        }),
    )
    db = Database(schema, entities)
    state = DialogState({"cafe": {"area": "north", "price": "cheap"}})
    turns = [
        Turn(
            user_lex=["cheap", "cafe", "north"],
            user_spans=[Span(0, 1, "cafe", "price"), Span(2, 3, "cafe", "area")],
            user_delex=["[cafe_price]", "cafe", "[cafe_area]"],
            resp_delex=["try", "[cafe_name]"],
            resp_lex=["try", "north", "bean"],
            gold_state=state,
            gold_delta=LevenshteinState(
                (Edit("cafe", "area", "north"), Edit("cafe", "price", "cheap"))
            ),
            offered_entity=0,
            provided_requestables=frozenset(),
        ),
        Turn(
            user_lex=["phone", "please"],
            user_spans=[],
            user_delex=["phone", "please"],
            resp_delex=["phone", "is", "[cafe_phone]"],
            resp_lex=["phone", "is", "0111222333"],
            gold_state=state,
            gold_delta=LevenshteinState(),
            offered_entity=0,
            provided_requestables=frozenset({("cafe", "phone")}),
        ),
    ]
    goal = Goal(
        constraints={"cafe": {"area": "north", "price": "cheap"}},
        requests={"cafe": ("phone",)},
    )
    sessions = [Session(id="micro-0000", goal=goal, turns=turns, domains=frozenset({"cafe"}))]
    return schema, db, sessions


def micro_model(
    seed: int = 0, init_scale: float = 0.8
) -> tuple[Schema, Database, Vocab, list[TurnExample], Seq2SeqModel]:
    schema, db, sessions = micro_world()
    vocab = build_vocab(schema, sessions)
    examples = build_examples(sessions, schema, db)
    config = ModelConfig(
        vocab_size=len(vocab), hidden_size=4, embed_size=4, init_scale=init_scale, seed=seed
    )
    params = init_params(config, dtype=np.float64)
    return schema, db, vocab, examples, Seq2SeqModel(config, params)


def tensor_rel_err(g_analytic: np.ndarray, g_numeric: np.ndarray) -> float:
    """Norm-based relative error between two gradients of one tensor.

    Comparing whole tensors keeps the check meaningful: coordinates whose
    true gradient sits near the finite-difference noise floor (~1e-11
    absolute here) would otherwise dominate the ratio no matter how
    correct the backward pass is.
    """
    na = float(np.linalg.norm(g_analytic))
    nn = float(np.linalg.norm(g_numeric))
    return float(np.linalg.norm(g_analytic - g_numeric)) / max(REL_ERR_FLOOR, na + nn)


def grad_check(
    seed: int = 0,
    eps: float = 1e-5,
    cfg: TrainConfig | None = None,
    warmup_steps: int = 40,
) -> dict[str, float]:
    """Max relative error per loss term (and l_total) over all parameter tensors.

    A short warmup moves the parameters off the random init, where the
    attention weights barely influence the loss and their true gradient
    norms sink below what central differences can resolve.
    """
    cfg = cfg or TrainConfig()
    schema, db, vocab, examples, model = micro_model(seed)
    params = model.params

    def build(active_cfg: TrainConfig):
        gen_state = rng.stream(seed, "gradcheck-noise-state")
        gen_resp = rng.stream(seed, "gradcheck-noise-resp")
        return batch_losses(model, vocab, schema, examples, cfg=active_cfg,
                            noise_state_gen=gen_state, noise_resp_gen=gen_resp)

    if warmup_steps:
        opt = AdamW(params, lr=0.01)
        warm_state = rng.stream(seed, "gradcheck-warm-state")
        warm_resp = rng.stream(seed, "gradcheck-warm-resp")
        for _ in range(warmup_steps):
            opt.zero_grad()
            res = batch_losses(model, vocab, schema, examples, cfg=cfg,
                               noise_state_gen=warm_state, noise_resp_gen=warm_resp)
            res.total.backward()
            opt.step()

    # Coordinate sweeps are the expensive part, so each sweep evaluates
    # every term its configuration can produce at once.
    groups: list[tuple[TrainConfig, tuple[str, ...]]] = []
    no_dr = cfg.replace(use_dr=False)
    groups.append((no_dr, tuple(build(no_dr).terms)))
    if cfg.use_dr:
        no_br = cfg.replace(use_br=False)
        dr_names = tuple(n for n in build(no_br).terms if n.startswith("l_dr"))
        groups.append((no_br, dr_names))
    groups.append((cfg, ("l_total",)))

    report: dict[str, float] = {}
    for active_cfg, names in groups:
        analytic: dict[str, dict[str, np.ndarray]] = {}
        for name in names:
            for p in params.values():
                p.grad = None
            res = build(active_cfg)
            ten = res.total if name == "l_total" else res.terms[name]
            ten.backward()
            analytic[name] = {
                k: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data))
                for k, p in params.items()
            }

        def values(res) -> dict[str, float]:
            out = {}
            for name in names:
                ten = res.total if name == "l_total" else res.terms[name]
                out[name] = float(ten.data)
            return out

        numeric = {
            name: {k: np.zeros_like(p.data) for k, p in params.items()} for name in names
        }
        for k, p in params.items():
            flat = p.data.reshape(-1)
            for i in range(flat.size):
                saved = flat[i]
                flat[i] = saved + eps
                f_plus = values(build(active_cfg))
                flat[i] = saved - eps
                f_minus = values(build(active_cfg))
                flat[i] = saved
                for name in names:
                    numeric[name][k].reshape(-1)[i] = (
                        (f_plus[name] - f_minus[name]) / (2.0 * eps)
                    )

        for name in names:
            report[name] = max(
                tensor_rel_err(analytic[name][k], numeric[name][k]) for k in params
            )
    return report
