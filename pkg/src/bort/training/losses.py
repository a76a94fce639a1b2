"""The composite objective: two task losses plus weighted reconstruction terms.

Each term is a per-token mean cross-entropy.  Disabled terms are never
built, so an all-off configuration constructs exactly the baseline graph.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..contexts import dst_context_noisy, resp_context_from_tokens
from ..corpus.noise import corrupt_tokens, denoise_state_target
from ..model import autodiff as ad
from ..model.network import Seq2SeqModel, pad_batch
from ..model.vocab import Vocab
from ..schema import Schema
from ..state import serialize_delta
from ..tokens import EOS
from .config import TrainConfig
from .data import TurnExample

TERM_NAMES = ("l_b", "l_r", "l_br_enc", "l_br_dec", "l_dr_state", "l_dr_resp")


@dataclass(frozen=True)
class LossBreakdown:
    l_b: float
    l_r: float
    l_br_enc: float
    l_br_dec: float
    l_dr_state: float
    l_dr_resp: float
    l_total: float
    tokens: dict[str, int]

    def to_json(self) -> dict:
        doc = {name: getattr(self, name) for name in TERM_NAMES}
        doc["l_total"] = self.l_total
        doc["tokens"] = dict(self.tokens)
        return doc


@dataclass
class BatchLosses:
    total: ad.Tensor
    terms: dict[str, ad.Tensor]
    breakdown: LossBreakdown


def recompose_total(breakdown: LossBreakdown, cfg: TrainConfig, dtype=np.float32) -> float:
    """Re-add the terms in the documented order; must equal l_total bit for bit."""
    f = dtype
    t = f(breakdown.l_b) + f(breakdown.l_r)
    t = t + f(cfg.lambda1) * (f(breakdown.l_br_enc) + f(breakdown.l_br_dec))
    t = t + f(cfg.lambda2) * (f(breakdown.l_dr_state) + f(breakdown.l_dr_resp))
    return float(t)


def _ids(vocab: Vocab, tokens) -> list[int]:
    return [vocab.id(t) for t in tokens]


def _mean_ce(run, targets: np.ndarray, mask: np.ndarray) -> tuple[ad.Tensor, int]:
    n = int(mask.sum())
    return ad.scale(ad.cross_entropy_sum(run.logits, targets, mask), 1.0 / n), n


def _dst_term(model, vocab, examples, dtype):
    """Returns the state loss plus the encoder/decoder graph for reuse by BR."""
    ctx_arr, ctx_mask = pad_batch([_ids(vocab, ex.dst_ctx) for ex in examples], dtype)
    tgt_arr, tgt_mask = pad_batch([_ids(vocab, ex.state_tgt) for ex in examples], dtype)
    enc = model.encode(ctx_arr, ctx_mask)
    run = model.decode_teacher("dec_state", enc.states, enc.mask, enc.summary, tgt_arr, tgt_mask)
    term, n = _mean_ce(run, tgt_arr, tgt_mask)
    return term, n, enc, run


def _resp_term(model, vocab, examples, cfg, dtype):
    ctxs = [ex.resp_ctx_delex if cfg.use_user_delex else ex.resp_ctx_lex for ex in examples]
    ctx_arr, ctx_mask = pad_batch([_ids(vocab, c) for c in ctxs], dtype)
    tgt_arr, tgt_mask = pad_batch([_ids(vocab, ex.resp_tgt) for ex in examples], dtype)
    db_ids = np.array([ex.db_id for ex in examples], dtype=np.int64)
    enc = model.encode(ctx_arr, ctx_mask)
    run = model.decode_teacher(
        "dec_resp", enc.states, enc.mask, enc.summary, tgt_arr, tgt_mask, db_ids=db_ids
    )
    return _mean_ce(run, tgt_arr, tgt_mask)


def _br_terms(model, vocab, examples, cfg, dtype, enc, state_run):
    rec_arr, rec_mask = pad_batch([_ids(vocab, ex.recon_tgt) for ex in examples], dtype)
    terms: dict[str, ad.Tensor] = {}
    counts: dict[str, int] = {}
    if not cfg.br_dec_only:
        run = model.decode_teacher("rec_enc", enc.states, enc.mask, enc.summary, rec_arr, rec_mask)
        terms["l_br_enc"], counts["l_br_enc"] = _mean_ce(run, rec_arr, rec_mask)
    if not cfg.br_enc_only:
        run = model.decode_teacher(
            "rec_dec", state_run.hiddens, state_run.mask, state_run.final, rec_arr, rec_mask
        )
        terms["l_br_dec"], counts["l_br_dec"] = _mean_ce(run, rec_arr, rec_mask)
    return terms, counts


def _dr_state_term(model, vocab, schema, rows, cfg, gen, dtype):
    ctxs, tgts = [], []
    for ex in rows:
        noisy, mask = corrupt_tokens(list(ex.prev_state_tokens), cfg.alpha, gen)
        delta = denoise_state_target(ex.prev_state, mask, schema)
        ctxs.append(dst_context_noisy(noisy, list(ex.prev_resp), list(ex.user_lex)))
        tgts.append(serialize_delta(delta, schema) + [EOS])
    ctx_arr, ctx_mask = pad_batch([_ids(vocab, c) for c in ctxs], dtype)
    tgt_arr, tgt_mask = pad_batch([_ids(vocab, t) for t in tgts], dtype)
    enc = model.encode(ctx_arr, ctx_mask)
    run = model.decode_teacher("dec_state", enc.states, enc.mask, enc.summary, tgt_arr, tgt_mask)
    return _mean_ce(run, tgt_arr, tgt_mask)


def _dr_resp_term(model, vocab, rows, cfg, gen, dtype):
    ctxs, tgts = [], []
    for ex in rows:
        noisy, _ = corrupt_tokens(list(ex.prev_resp), cfg.alpha, gen)
        user = ex.user_delex if cfg.use_user_delex else ex.user_lex
        ctxs.append(resp_context_from_tokens(noisy, list(user), list(ex.curr_state_tokens)))
        tgts.append(list(ex.prev_resp) + [EOS])
    ctx_arr, ctx_mask = pad_batch([_ids(vocab, c) for c in ctxs], dtype)
    tgt_arr, tgt_mask = pad_batch([_ids(vocab, t) for t in tgts], dtype)
    db_ids = np.array([ex.prev_db_id for ex in rows], dtype=np.int64)
    enc = model.encode(ctx_arr, ctx_mask)
    run = model.decode_teacher(
        "dec_resp", enc.states, enc.mask, enc.summary, tgt_arr, tgt_mask, db_ids=db_ids
    )
    return _mean_ce(run, tgt_arr, tgt_mask)


def batch_losses(
    model: Seq2SeqModel,
    vocab: Vocab,
    schema: Schema,
    examples: list[TurnExample],
    cfg: TrainConfig,
    noise_state_gen: np.random.Generator | None = None,
    noise_resp_gen: np.random.Generator | None = None,
) -> BatchLosses:
    if not examples:
        raise ValueError("empty batch")
    dtype = model.p("embed").dtype
    terms: dict[str, ad.Tensor] = {}
    counts = {name: 0 for name in TERM_NAMES}

    terms["l_b"], counts["l_b"], enc_b, state_run = _dst_term(model, vocab, examples, dtype)
    terms["l_r"], counts["l_r"] = _resp_term(model, vocab, examples, cfg, dtype)
    total = ad.add(terms["l_b"], terms["l_r"])

    if cfg.use_br:
        br_terms, br_counts = _br_terms(model, vocab, examples, cfg, dtype, enc_b, state_run)
        terms.update(br_terms)
        counts.update(br_counts)
        parts = list(br_terms.values())
        br_sum = ad.add(parts[0], parts[1]) if len(parts) == 2 else parts[0]
        total = ad.add(total, ad.scale(br_sum, cfg.lambda1))

    rows = [ex for ex in examples if ex.turn_index >= 2]
    if cfg.use_dr and rows:
        dr_parts: list[ad.Tensor] = []
        if not cfg.dr_resp_only:
            if noise_state_gen is None:
                raise ValueError("state denoising needs its noise stream")
            term, n = _dr_state_term(model, vocab, schema, rows, cfg, noise_state_gen, dtype)
            terms["l_dr_state"], counts["l_dr_state"] = term, n
            dr_parts.append(term)
        if not cfg.dr_state_only:
            if noise_resp_gen is None:
                raise ValueError("response denoising needs its noise stream")
            term, n = _dr_resp_term(model, vocab, rows, cfg, noise_resp_gen, dtype)
            terms["l_dr_resp"], counts["l_dr_resp"] = term, n
            dr_parts.append(term)
        dr_sum = ad.add(dr_parts[0], dr_parts[1]) if len(dr_parts) == 2 else dr_parts[0]
        total = ad.add(total, ad.scale(dr_sum, cfg.lambda2))

    values = {name: float(terms[name].data) if name in terms else 0.0 for name in TERM_NAMES}
    breakdown = LossBreakdown(
        **values, l_total=float(total.data), tokens=counts
    )
    return BatchLosses(total=total, terms=terms, breakdown=breakdown)
