"""Shared bi-GRU encoder with four attention decoders over one tape.

The state and response decoders carry the task; two reconstruction
decoders (one attending over encoder states, one over the state decoder's
hidden sequence) exist only to shape training gradients and are never run
at inference.  The response decoder starts from a learned DB-state
embedding row instead of the <bos> embedding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import rng
from ..db import N_DB_STATES
from . import autodiff as ad
from .autodiff import Tensor

PAD_ID = 0
BOS_ID = 1
EOS_ID = 2

DECODERS = ("dec_state", "dec_resp", "rec_enc", "rec_dec")


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    hidden_size: int = 100
    embed_size: int = 100
    db_embedding_rows: int = N_DB_STATES
    max_state_len: int = 40
    max_resp_len: int = 60
    max_ctx_len: int = 120
    init_scale: float = 0.08
    seed: int = 17

    def __post_init__(self):
        for field in (
            "vocab_size", "hidden_size", "embed_size", "db_embedding_rows",
            "max_state_len", "max_resp_len", "max_ctx_len",
        ):
            if getattr(self, field) <= 0:
                raise ValueError(f"{field} must be positive")
        if self.init_scale <= 0:
            raise ValueError("init_scale must be positive")
        if self.db_embedding_rows != N_DB_STATES:
            raise ValueError(f"db_embedding_rows must be {N_DB_STATES}")

    def to_json(self) -> dict:
        return {
            "vocab_size": self.vocab_size,
            "hidden_size": self.hidden_size,
            "embed_size": self.embed_size,
            "db_embedding_rows": self.db_embedding_rows,
            "max_state_len": self.max_state_len,
            "max_resp_len": self.max_resp_len,
            "max_ctx_len": self.max_ctx_len,
            "init_scale": self.init_scale,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ModelConfig":
        return cls(**doc)


def _memory_width(prefix: str, hidden: int) -> int:
    # rec_dec attends over the state decoder's hiddens (width H);
    # everything else attends over bidirectional encoder states (2H)
    return hidden if prefix == "rec_dec" else 2 * hidden


def param_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    V, E, H = config.vocab_size, config.embed_size, config.hidden_size
    shapes: dict[str, tuple[int, ...]] = {
        "embed": (V, E),
        "db_embed": (config.db_embedding_rows, E),
    }
    for direction in ("enc_fwd", "enc_bwd"):
        shapes[f"{direction}_W"] = (E, 3 * H)
        shapes[f"{direction}_U"] = (H, 3 * H)
        shapes[f"{direction}_b"] = (3 * H,)
        shapes[f"{direction}_hb"] = (3 * H,)
    for prefix in DECODERS:
        M = _memory_width(prefix, H)
        shapes[f"{prefix}_W"] = (E + M, 3 * H)
        shapes[f"{prefix}_U"] = (H, 3 * H)
        shapes[f"{prefix}_b"] = (3 * H,)
        shapes[f"{prefix}_hb"] = (3 * H,)
        shapes[f"{prefix}_attn_W1"] = (H, H)
        shapes[f"{prefix}_attn_W2"] = (M, H)
        shapes[f"{prefix}_attn_v"] = (H,)
        shapes[f"{prefix}_bridge_W"] = (M, H)
        shapes[f"{prefix}_bridge_b"] = (H,)
        shapes[f"{prefix}_out_W"] = (H, V)
        shapes[f"{prefix}_out_b"] = (V,)
    return shapes


def init_params(config: ModelConfig, dtype=np.float32) -> dict[str, Tensor]:
    gen = rng.stream(config.seed, "model-init")
    s = config.init_scale
    params: dict[str, Tensor] = {}
    for name, shape in param_shapes(config).items():
        data = gen.uniform(-s, s, size=shape).astype(dtype)
        params[name] = Tensor(data, needs_grad=True)
    return params


def param_count(config: ModelConfig) -> int:
    return sum(int(np.prod(shape)) for shape in param_shapes(config).values())


def pad_batch(seqs: list[list[int]], dtype=np.float32) -> tuple[np.ndarray, np.ndarray]:
    """Right-pad id sequences; mask marks real positions (pad id 0)."""
    if not seqs:
        raise ValueError("empty batch")
    if any(not s for s in seqs):
        raise ValueError("empty sequence in batch; pad upstream")
    T = max(len(s) for s in seqs)
    ids = np.full((len(seqs), T), PAD_ID, dtype=np.int64)
    mask = np.zeros((len(seqs), T), dtype=dtype)
    for i, s in enumerate(seqs):
        ids[i, :len(s)] = s
        mask[i, :len(s)] = 1.0
    return ids, mask


@dataclass
class EncoderOutput:
    states: Tensor        # (B, T, 2H)
    summary: Tensor       # (B, 2H)
    mask: np.ndarray      # (B, T)


@dataclass
class DecoderRun:
    logits: Tensor        # (B, L, V)
    hiddens: Tensor       # (B, L, H)
    final: Tensor         # (B, H)
    mask: np.ndarray      # (B, L)


class Seq2SeqModel:
    def __init__(self, config: ModelConfig, params: dict[str, Tensor]):
        self.config = config
        self.params = params

    def p(self, name: str) -> Tensor:
        return self.params[name]

    def _embed(self, ids: np.ndarray) -> Tensor:
        return ad.rows(self.p("embed"), ids)

    def _gru_pass(self, direction: str, ids: np.ndarray, mask: np.ndarray) -> tuple[list[Tensor], Tensor]:
        W, U = self.p(f"{direction}_W"), self.p(f"{direction}_U")
        b, hb = self.p(f"{direction}_b"), self.p(f"{direction}_hb")
        B, T = ids.shape
        H = self.config.hidden_size
        h = ad.constant(np.zeros((B, H), dtype=W.dtype))
        steps: dict[int, Tensor] = {}
        order = range(T) if direction == "enc_fwd" else range(T - 1, -1, -1)
        for t in order:
            x = self._embed(ids[:, t])
            h = ad.gru_step(x, h, W, U, b, hb, mask[:, t:t + 1])
            steps[t] = h
        return [steps[t] for t in range(T)], h

    def encode(self, ids: np.ndarray, mask: np.ndarray) -> EncoderOutput:
        fwd, fwd_final = self._gru_pass("enc_fwd", ids, mask)
        bwd, bwd_final = self._gru_pass("enc_bwd", ids, mask)
        states = ad.stack_steps([ad.concat([f, r]) for f, r in zip(fwd, bwd)])
        summary = ad.concat([fwd_final, bwd_final])
        return EncoderOutput(states=states, summary=summary, mask=mask)

    def _bridge(self, prefix: str, summary: Tensor) -> Tensor:
        return ad.tanh(
            ad.add(ad.matmul(summary, self.p(f"{prefix}_bridge_W")), self.p(f"{prefix}_bridge_b"))
        )

    def _start_embedding(self, prefix: str, B: int, db_ids: np.ndarray | None) -> Tensor:
        if prefix == "dec_resp":
            if db_ids is None:
                raise ValueError("response decoder needs db state ids")
            if np.any((db_ids < 0) | (db_ids >= self.config.db_embedding_rows)):
                raise ValueError(f"db state id out of range: {db_ids}")
            return ad.rows(self.p("db_embed"), db_ids)
        return self._embed(np.full(B, BOS_ID, dtype=np.int64))

    def decode_teacher(
        self,
        prefix: str,
        memory: Tensor,
        memory_mask: np.ndarray,
        summary: Tensor,
        targets: np.ndarray,
        target_mask: np.ndarray,
        db_ids: np.ndarray | None = None,
    ) -> DecoderRun:
        """Teacher-forced decode; logits length equals target length."""
        W, U = self.p(f"{prefix}_W"), self.p(f"{prefix}_U")
        b, hb = self.p(f"{prefix}_b"), self.p(f"{prefix}_hb")
        W1, v = self.p(f"{prefix}_attn_W1"), self.p(f"{prefix}_attn_v")
        out_W, out_b = self.p(f"{prefix}_out_W"), self.p(f"{prefix}_out_b")
        B, L = targets.shape
        keys = ad.seq_matmul(memory, self.p(f"{prefix}_attn_W2"))
        h = self._bridge(prefix, summary)
        hiddens: list[Tensor] = []
        logits: list[Tensor] = []
        x_emb = self._start_embedding(prefix, B, db_ids)
        for t in range(L):
            ctx = ad.additive_attention(h, keys, memory, W1, v, memory_mask)
            x = ad.concat([x_emb, ctx])
            h = ad.gru_step(x, h, W, U, b, hb, target_mask[:, t:t + 1])
            hiddens.append(h)
            logits.append(ad.add(ad.matmul(h, out_W), out_b))
            if t + 1 < L:
                x_emb = self._embed(targets[:, t])
        return DecoderRun(
            logits=ad.stack_steps(logits),
            hiddens=ad.stack_steps(hiddens),
            final=h,
            mask=target_mask,
        )

    def decode_greedy(
        self,
        prefix: str,
        memory: Tensor,
        memory_mask: np.ndarray,
        summary: Tensor,
        max_len: int,
        db_ids: np.ndarray | None = None,
    ) -> list[list[int]]:
        """Batched greedy decode until <eos> or max_len; no tape is built."""
        with ad.no_grad():
            W, U = self.p(f"{prefix}_W"), self.p(f"{prefix}_U")
            b, hb = self.p(f"{prefix}_b"), self.p(f"{prefix}_hb")
            W1, v = self.p(f"{prefix}_attn_W1"), self.p(f"{prefix}_attn_v")
            out_W, out_b = self.p(f"{prefix}_out_W"), self.p(f"{prefix}_out_b")
            B = memory.shape[0]
            keys = ad.seq_matmul(memory, self.p(f"{prefix}_attn_W2"))
            h = self._bridge(prefix, summary)
            x_emb = self._start_embedding(prefix, B, db_ids)
            done = np.zeros(B, dtype=bool)
            emitted: list[np.ndarray] = []
            for _ in range(max_len):
                active = (~done).astype(memory.dtype)[:, None]
                ctx = ad.additive_attention(h, keys, memory, W1, v, memory_mask)
                x = ad.concat([x_emb, ctx])
                h = ad.gru_step(x, h, W, U, b, hb, active)
                step_logits = ad.add(ad.matmul(h, out_W), out_b).data
                nxt = step_logits.argmax(axis=-1)
                nxt = np.where(done, PAD_ID, nxt)
                emitted.append(nxt)
                done |= nxt == EOS_ID
                if done.all():
                    break
                x_emb = self._embed(nxt)
        out: list[list[int]] = []
        steps = np.stack(emitted, axis=1) if emitted else np.zeros((B, 0), dtype=np.int64)
        for row in steps:
            toks: list[int] = []
            for tok in row:
                if tok in (EOS_ID, PAD_ID):
                    break
                toks.append(int(tok))
            out.append(toks)
        return out
