"""Trainer control flow: batching, early stop, restore, abort, determinism."""

import json

import numpy as np
import pytest

from bort.corpus.gen import generate_corpus
from bort.db import generate_db
from bort.metrics import EvalReport
from bort.model.checkpoint import save_params
from bort.model.network import ModelConfig, Seq2SeqModel, init_params
from bort.model.vocab import build_vocab
from bort.schema import default_schema
from bort.training.config import TrainConfig, baseline_config
from bort.training.loop import (
    TrainError,
    Trainer,
    TrainingLog,
    _aggregate,
    epochs_since_best,
    should_stop,
)
from bort.training.losses import TERM_NAMES, LossBreakdown

TRACE = [10.0, 11.0, 10.5, 10.9, 10.8, 10.7, 10.6, 10.2]


def test_epochs_since_best():
    assert epochs_since_best([]) == 0
    assert epochs_since_best([3.0]) == 0
    assert epochs_since_best([3.0, 2.0]) == 1
    assert epochs_since_best([5.0, 5.0]) == 1  # ties keep the earlier epoch
    assert epochs_since_best([1.0, 4.0, 2.0, 3.0]) == 2


def test_stopping_rule_on_reference_trace():
    # patience 5 halts after the seventh value, never seeing the eighth
    fired_at = None
    for i in range(1, len(TRACE) + 1):
        if should_stop(TRACE[:i], patience=5):
            fired_at = i
            break
    assert fired_at == 7
    assert not should_stop(TRACE[:6], patience=5)


def _world(n_train=8, hidden=12, seed=3):
    schema = default_schema()
    db = generate_db(schema, seed=5)
    corpus = generate_corpus(
        schema, db, {"train": n_train, "dev": 2, "test": 2}, seed=37
    )
    vocab = build_vocab(schema, corpus.splits["train"])
    mc = ModelConfig(vocab_size=len(vocab), hidden_size=hidden, embed_size=hidden, seed=seed)
    model = Seq2SeqModel(mc, init_params(mc))
    return schema, db, corpus, vocab, model


def _trainer(cfg, seed=3):
    schema, db, corpus, vocab, model = _world(seed=seed)
    return Trainer(model, vocab, schema, db, corpus, cfg)


def test_epoch_batches_partition_examples():
    tr = _trainer(TrainConfig(batch_size=16, max_epochs=1))
    batches = tr._epoch_batches()
    assert sum(len(b) for b in batches) == len(tr.examples)
    assert all(len(b) == 16 for b in batches[:-1])
    seen = [(ex.session_id, ex.turn_index) for b in batches for ex in b]
    assert sorted(seen) == sorted((ex.session_id, ex.turn_index) for ex in tr.examples)


def _cook(trainer, scores):
    """Replace the expensive pieces with canned epochs that tag a parameter."""
    marker = trainer.model.p("embed")
    calls = {"n": 0}

    def fake_epoch():
        calls["n"] += 1
        marker.data[0, 0] = float(calls["n"])
        return {"l_total": 0.0, **{t: 0.0 for t in TERM_NAMES}}

    def fake_dev():
        return EvalReport(
            inform=0.0, success=0.0, bleu=0.0,
            combined=scores[calls["n"] - 1],
            joint_goal_accuracy=0.0, success_f1=0.0,
        )

    trainer.run_epoch = fake_epoch
    trainer.evaluate_dev = fake_dev
    return marker


def test_trainer_stops_per_reference_trace():
    tr = _trainer(TrainConfig(max_epochs=40, patience=5))
    marker = _cook(tr, TRACE + [99.0, 99.0])
    log = tr.train()
    assert len(log.epochs) == 7
    assert tr.best_epoch == 2
    assert log.summary["best_epoch"] == 2
    assert log.summary["best_dev_combined"] == 11.0
    assert log.summary["epochs_run"] == 7
    assert marker.data[0, 0] == 2.0  # best-epoch weights restored


def test_lr_decays_after_sustained_plateau():
    # three consecutive non-improving epochs trigger one 0.8x decay
    tr = _trainer(TrainConfig(max_epochs=8, patience=10, learning_rate=0.005))
    _cook(tr, [10.0, 11.0, 10.5, 10.4, 10.3, 10.2, 10.1, 10.0])
    log = tr.train()
    lrs = [e["lr"] for e in log.epochs]
    assert lrs[:4] == pytest.approx([0.005] * 4)
    assert lrs[4] == pytest.approx(0.004)   # flat epochs 3,4,5
    assert lrs[5] == pytest.approx(0.004)
    assert lrs[6] == pytest.approx(0.004)
    assert lrs[7] == pytest.approx(0.0032)  # flat epochs 6,7,8
    assert [e["best"] for e in log.epochs] == [True, True] + [False] * 6


def test_lr_never_drops_below_floor():
    tr = _trainer(TrainConfig(max_epochs=40, patience=50, learning_rate=0.0002))
    _cook(tr, [10.0] + [5.0] * 39)
    log = tr.train()
    assert min(e["lr"] for e in log.epochs) >= 1e-4


def test_training_log_files(tmp_path):
    tr = _trainer(TrainConfig(max_epochs=3, patience=10))
    _cook(tr, [1.0, 2.0, 3.0])
    log = tr.train()
    log.save(tmp_path)
    lines = (tmp_path / "train.log.jsonl").read_text().strip().splitlines()
    assert len(lines) == 3
    rec = json.loads(lines[0])
    assert set(rec) >= {"epoch", "losses", "dev", "lr", "best", "wall_time_s"}
    summary = json.loads((tmp_path / "train.summary.json").read_text())
    assert summary["best_epoch"] == 3
    assert summary["config"]["seed"] == 17
    assert summary["dev_combined"] == [1.0, 2.0, 3.0]


def test_aggregate_weights_terms_by_tokens():
    def bd(value, n_tokens, n_resp):
        return LossBreakdown(
            l_b=value, l_r=2.0 * value, l_br_enc=0.0, l_br_dec=0.0,
            l_dr_state=0.0, l_dr_resp=0.0, l_total=3.0 * value,
            tokens={"l_b": n_tokens, "l_r": n_resp, "l_br_enc": 0,
                    "l_br_dec": 0, "l_dr_state": 0, "l_dr_resp": 0},
        )

    agg = _aggregate([bd(1.0, 10, 4), bd(4.0, 30, 12)], [2, 6])
    assert agg["l_b"] == pytest.approx((1.0 * 10 + 4.0 * 30) / 40)
    assert agg["l_r"] == pytest.approx((2.0 * 4 + 8.0 * 12) / 16)
    assert agg["l_br_enc"] == 0.0
    assert agg["l_total"] == pytest.approx((3.0 * 2 + 12.0 * 6) / 8)


def test_real_epoch_reduces_training_loss():
    tr = _trainer(TrainConfig(batch_size=16, max_epochs=2, learning_rate=0.005))
    log = tr.train()
    losses = [e["losses"]["l_total"] for e in log.epochs]
    assert losses[1] < losses[0]


def test_training_is_bit_deterministic(tmp_path):
    cfg = TrainConfig(batch_size=16, max_epochs=2)
    outs = []
    for tag in ("a", "b"):
        tr = _trainer(cfg)
        log = tr.train()
        path = tmp_path / f"{tag}.npz"
        save_params(path, tr.model.config, tr.model.params)
        outs.append((log, path.read_bytes()))
    (log_a, bytes_a), (log_b, bytes_b) = outs
    assert bytes_a == bytes_b
    for ea, eb in zip(log_a.epochs, log_b.epochs):
        ka = {k: v for k, v in ea.items() if k != "wall_time_s"}
        kb = {k: v for k, v in eb.items() if k != "wall_time_s"}
        assert ka == kb


def test_nan_abort_names_the_batch():
    tr = _trainer(TrainConfig(batch_size=8, max_epochs=1))
    tr.model.p("embed").data[:] = np.nan
    with pytest.raises(TrainError) as err:
        tr.train()
    msg = str(err.value)
    assert "epoch 1" in msg
    assert any(ex.session_id in msg for ex in tr.examples)


def test_baseline_config_trains_without_noise_terms():
    tr = _trainer(baseline_config(batch_size=16, max_epochs=1))
    log = tr.train()
    rec = log.epochs[0]["losses"]
    assert rec["l_br_enc"] == 0.0
    assert rec["l_dr_resp"] == 0.0
    assert rec["l_total"] > 0.0
