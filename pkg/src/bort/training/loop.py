"""Optimizer loop: shuffled turn batches, per-epoch dev rollouts, early stop."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import rng
from ..corpus.gen import Corpus
from ..db import Database
from ..inference import run_corpus
from ..metrics import EvalReport, evaluate
from ..model.network import Seq2SeqModel
from ..model.vocab import Vocab
from ..schema import Schema
from .config import TrainConfig
from .data import TurnExample, build_examples
from .losses import TERM_NAMES, LossBreakdown, batch_losses
from .optim import AdamW, clip_grads

MAX_GRAD_NORM = 5.0
LR_DECAY = 0.8
LR_PLATEAU_EPOCHS = 3
LR_FLOOR = 1e-4


class TrainError(RuntimeError):
    pass


def epochs_since_best(history: list[float]) -> int:
    """Distance from the latest epoch back to the first-best one."""
    if not history:
        return 0
    best = max(range(len(history)), key=lambda i: (history[i], -i))
    return len(history) - 1 - best


def should_stop(history: list[float], patience: int) -> bool:
    return epochs_since_best(history) >= patience


@dataclass
class TrainingLog:
    epochs: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def save(self, out_dir: str | Path) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        lines = [json.dumps(e) for e in self.epochs]
        (out / "train.log.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")
        (out / "train.summary.json").write_text(
            json.dumps(self.summary, indent=2) + "\n", encoding="utf-8"
        )


def _aggregate(breakdowns: list[LossBreakdown], batch_sizes: list[int]) -> dict:
    """Epoch means: per-term token-weighted, total example-weighted."""
    out: dict[str, float] = {}
    for name in TERM_NAMES:
        tokens = sum(bd.tokens[name] for bd in breakdowns)
        if tokens:
            out[name] = sum(
                getattr(bd, name) * bd.tokens[name] for bd in breakdowns
            ) / tokens
        else:
            out[name] = 0.0
    n = sum(batch_sizes)
    out["l_total"] = sum(
        bd.l_total * size for bd, size in zip(breakdowns, batch_sizes)
    ) / n
    return out


class Trainer:
    def __init__(
        self,
        model: Seq2SeqModel,
        vocab: Vocab,
        schema: Schema,
        db: Database,
        corpus: Corpus,
        cfg: TrainConfig,
        train_split: str = "train",
        dev_split: str = "dev",
    ):
        self.model = model
        self.vocab = vocab
        self.schema = schema
        self.db = db
        self.cfg = cfg
        mc = model.config
        self.examples = build_examples(
            corpus.splits[train_split], schema, db,
            mc.max_ctx_len, mc.max_state_len, mc.max_resp_len,
        )
        self.dev_sessions = corpus.splits[dev_split]
        self.opt = AdamW(
            model.params,
            lr=cfg.learning_rate,
            weight_decay=cfg.weight_decay,
        )
        self.shuffle_gen = rng.stream(cfg.seed, "shuffle")
        self.noise_state_gen = rng.stream(cfg.seed, "noise-state")
        self.noise_resp_gen = rng.stream(cfg.seed, "noise-resp")
        self.dev_scores: list[float] = []
        self.best_epoch = 0
        self._best_score = -np.inf
        self._best_params: dict[str, np.ndarray] | None = None
        self._epoch = 0
        self._flat_epochs = 0

    def step_batch(self, batch: list[TurnExample]) -> LossBreakdown:
        self.opt.zero_grad()
        result = batch_losses(
            self.model, self.vocab, self.schema, batch, self.cfg,
            noise_state_gen=self.noise_state_gen,
            noise_resp_gen=self.noise_resp_gen,
        )
        if not np.isfinite(result.breakdown.l_total):
            ids = sorted({ex.session_id for ex in batch})
            raise TrainError(
                f"non-finite loss {result.breakdown.l_total} in epoch "
                f"{self._epoch}, sessions {ids}"
            )
        result.total.backward()
        clip_grads(self.model.params, MAX_GRAD_NORM)
        self.opt.step()
        return result.breakdown

    def _epoch_batches(self) -> list[list[TurnExample]]:
        order = self.shuffle_gen.permutation(len(self.examples))
        size = self.cfg.batch_size
        return [
            [self.examples[i] for i in order[start:start + size]]
            for start in range(0, len(order), size)
        ]

    def run_epoch(self) -> dict:
        breakdowns = []
        sizes = []
        for batch in self._epoch_batches():
            breakdowns.append(self.step_batch(batch))
            sizes.append(len(batch))
        return _aggregate(breakdowns, sizes)

    def evaluate_dev(self) -> EvalReport:
        artifact = run_corpus(
            self.model, self.vocab, self.schema, self.db, self.dev_sessions,
            "end_to_end", seed=self.cfg.seed,
        )
        return evaluate(artifact, self.dev_sessions, self.schema, self.db)

    def train(self) -> TrainingLog:
        log = TrainingLog()
        for epoch in range(1, self.cfg.max_epochs + 1):
            self._epoch = epoch
            t0 = time.monotonic()
            losses = self.run_epoch()
            dev = self.evaluate_dev()
            wall = time.monotonic() - t0
            score = dev.combined
            self.dev_scores.append(score)
            improved = score > self._best_score
            if improved:
                self._best_score = score
                self.best_epoch = epoch
                self._best_params = {
                    k: p.data.copy() for k, p in self.model.params.items()
                }
                self._flat_epochs = 0
            else:
                # decay only on a sustained plateau; a dev metric sitting at
                # zero for the first epochs must not freeze the optimizer
                self._flat_epochs += 1
                if self._flat_epochs >= LR_PLATEAU_EPOCHS and self.opt.lr > LR_FLOOR:
                    self.opt.lr = max(LR_FLOOR, self.opt.lr * LR_DECAY)
                    self._flat_epochs = 0
            log.epochs.append({
                "epoch": epoch,
                "losses": losses,
                "dev": dev.to_json(),
                "lr": self.opt.lr,
                "best": improved,
                "wall_time_s": wall,
            })
            if should_stop(self.dev_scores, self.cfg.patience):
                break
        if self._best_params is not None:
            for k, p in self.model.params.items():
                p.data[...] = self._best_params[k]
        log.summary = {
            "best_epoch": self.best_epoch,
            "best_dev_combined": self._best_score,
            "epochs_run": len(self.dev_scores),
            "config": self.cfg.to_json(),
            "model_config": self.model.config.to_json(),
            "dev_combined": self.dev_scores,
        }
        return log
