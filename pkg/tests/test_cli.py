"""End-to-end command line runs on a miniature data directory."""

import json

import pytest

from bort.cli import ABLATION_VARIANTS, chat_loop, main
from bort.db import Database
from bort.model.checkpoint import load_params
from bort.model.network import Seq2SeqModel
from bort.model.vocab import Vocab
from bort.schema import Schema


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "data"
    code = main([
        "gen-data", "--out", str(path), "--seed", "3",
        "--train", "10", "--dev", "2", "--test", "2",
    ])
    assert code == 0
    return path


@pytest.fixture(scope="module")
def run_dir(data_dir, tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "run"
    code = main([
        "train", "--data", str(data_dir), "--out", str(path),
        "--hidden-size", "8", "--embed-size", "8",
        "--batch-size", "16", "--max-epochs", "1", "--seed", "3",
    ])
    assert code == 0
    return path


def test_gen_data_layout(data_dir):
    for name in ("schema.json", "db.json", "meta.json",
                 "train.jsonl", "dev.jsonl", "test.jsonl"):
        assert (data_dir / name).exists()
    meta = json.loads((data_dir / "meta.json").read_text())
    assert meta["counts"] == {"train": 10, "dev": 2, "test": 2}


def test_train_outputs(run_dir):
    for name in ("checkpoint.npz", "vocab.json", "resolved.cfg",
                 "train.log.jsonl", "train.summary.json"):
        assert (run_dir / name).exists()
    resolved = (run_dir / "resolved.cfg").read_text()
    assert "seed = 3" in resolved
    assert "max_epochs = 1" in resolved
    summary = json.loads((run_dir / "train.summary.json").read_text())
    assert summary["epochs_run"] == 1


def test_train_resume_is_deterministic(data_dir, run_dir, tmp_path):
    # same checkpoint + same seed: both continuations land on the same bytes,
    # and the architecture comes from the checkpoint, not the size flags
    blobs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main([
            "train", "--data", str(data_dir), "--out", str(out),
            "--resume", str(run_dir / "checkpoint.npz"),
            "--batch-size", "16", "--max-epochs", "1", "--seed", "5",
        ]) == 0
        blobs.append((out / "checkpoint.npz").read_bytes())
    assert blobs[0] == blobs[1]
    cfg, _ = load_params(tmp_path / "a" / "checkpoint.npz")
    assert cfg.hidden_size == 8
    assert blobs[0] != (run_dir / "checkpoint.npz").read_bytes()


def test_flag_beats_env_beats_file(data_dir, tmp_path, monkeypatch):
    cfg_file = tmp_path / "opts.cfg"
    cfg_file.write_text("seed = 1\nmax_epochs = 1\nbatch_size = 16\n")
    monkeypatch.setenv("BORT_SEED", "2")
    out_env = tmp_path / "env"
    assert main([
        "train", "--data", str(data_dir), "--out", str(out_env),
        "--config", str(cfg_file), "--hidden-size", "8", "--embed-size", "8",
    ]) == 0
    assert "seed = 2" in (out_env / "resolved.cfg").read_text()
    out_flag = tmp_path / "flag"
    assert main([
        "train", "--data", str(data_dir), "--out", str(out_flag),
        "--config", str(cfg_file), "--hidden-size", "8", "--embed-size", "8",
        "--seed", "7",
    ]) == 0
    assert "seed = 7" in (out_flag / "resolved.cfg").read_text()


def test_eval_writes_artifact_and_report(data_dir, run_dir, tmp_path, capsys):
    artifact = tmp_path / "preds.jsonl"
    report = tmp_path / "report.json"
    code = main([
        "eval", "--data", str(data_dir),
        "--checkpoint", str(run_dir / "checkpoint.npz"),
        "--split", "dev", "--artifact", str(artifact), "--report", str(report),
    ])
    assert code == 0
    out = capsys.readouterr().out
    assert "combined" in out and "sessions" in out
    doc = json.loads(report.read_text())
    assert doc["split"] == "dev"
    assert doc["checkpoint_hash"]
    lines = artifact.read_text().strip().splitlines()
    assert len(lines) == 3  # meta plus two dev sessions
    meta = json.loads(lines[0])
    assert meta["checkpoint_hash"] == doc["checkpoint_hash"]
    assert meta["corpus_hash"]


def test_eval_policy_opt_mode(data_dir, run_dir, capsys):
    code = main([
        "eval", "--data", str(data_dir),
        "--checkpoint", str(run_dir / "checkpoint.npz"),
        "--split", "dev", "--mode", "policy_opt", "-p", "0.1", "--seed", "5",
    ])
    assert code == 0
    assert "joint_goal_accuracy" in capsys.readouterr().out


def test_noise_sweep_csv(data_dir, run_dir, tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code = main([
        "noise-sweep", "--data", str(data_dir),
        "--model", f"tiny={run_dir / 'checkpoint.npz'}",
        "--split", "dev", "--proportions", "0", "0.5", "--out", str(out),
    ])
    assert code == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "model,p,combined"
    assert len(lines) == 3
    assert lines[1].startswith("tiny,0,")


def test_ablate_single_variant(data_dir, tmp_path):
    out = tmp_path / "ablation"
    code = main([
        "ablate", "--data", str(data_dir), "--out", str(out),
        "--variant", "no_br_dr_ud", "--hidden-size", "8", "--embed-size", "8",
        "--batch-size", "16", "--max-epochs", "1",
    ])
    assert code == 0
    rows = json.loads((out / "ablation.json").read_text())
    assert [r["variant"] for r in rows] == ["no_br_dr_ud"]
    assert (out / "no_br_dr_ud" / "checkpoint.npz").exists()
    csv = (out / "ablation.csv").read_text().splitlines()
    assert csv[0].startswith("variant,dev_combined,test_combined")


def test_ablate_covers_five_objective_variants():
    names = [name for name, _ in ABLATION_VARIANTS]
    assert names == ["full", "no_dr", "no_br", "no_br_dr", "no_br_dr_ud"]
    # the two stripped rows differ only in user-side delexicalization
    full_strip = dict(ABLATION_VARIANTS[4][1])
    assert full_strip.pop("use_user_delex") is False
    assert full_strip == dict(ABLATION_VARIANTS[3][1])


def test_usage_error_exits_2():
    with pytest.raises(SystemExit) as err:
        main(["no-such-command"])
    assert err.value.code == 2


def test_runtime_failure_exits_1(tmp_path, capsys):
    code = main([
        "eval", "--data", str(tmp_path / "missing"),
        "--checkpoint", str(tmp_path / "missing.npz"),
    ])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_chat_loop_scripted(data_dir, run_dir):
    schema = Schema.load(data_dir / "schema.json")
    db = Database.load(schema, data_dir / "db.json")
    config, params = load_params(run_dir / "checkpoint.npz")
    model = Seq2SeqModel(config, params)
    vocab = Vocab.load(run_dir / "vocab.json")
    lines = iter(["i want a cheap hotel in the north", ""])
    outputs = []
    chat_loop(model, vocab, schema, db,
              read=lambda prompt: next(lines), write=outputs.append)
    assert any("chat ready" in line for line in outputs)
    assert any(line.startswith("state:") for line in outputs)
    # the reply line sits between the banner and the state line
    assert len(outputs) >= 3
