"""Command line front end.

Subcommands cover the whole workflow: corpus generation, training,
evaluation, gradient verification, the state-noise robustness sweep, the
ablation matrix, and the chat surfaces (HTTP service and terminal REPL).

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from pathlib import Path

from .configio import ConfigError, load_config_file, resolve_config, write_config_file
from .contexts import active_domain
from .corpus.gen import CorpusError, generate_corpus, validate_corpus
from .corpus.io import SPLITS, corpus_fingerprint, load_corpus, save_corpus
from .db import Database, generate_db
from .delex import build_lexicon, delexicalize, find_value_spans, relexicalize
from .inference import run_corpus, save_artifact, predict_turn_state, predict_turn_response
from .metrics import (
    DEFAULT_PROPORTIONS,
    EvalError,
    evaluate,
    noise_sweep,
    sweep_csv,
)
from .model.checkpoint import CheckpointError, checkpoint_hash, load_params, save_params
from .model.network import ModelConfig, Seq2SeqModel, init_params
from .model.vocab import Vocab, build_vocab
from .schema import Schema, default_schema
from .state import DialogState, serialize_state
from .training.config import BASELINE_SWITCHES, TrainConfig
from .training.data import DataError
from .training.loop import TrainError, Trainer

ABLATION_VARIANTS = (
    ("full", {}),
    ("no_dr", {"use_dr": False, "lambda2": 0.0}),
    ("no_br", {"use_br": False, "lambda1": 0.0}),
    ("no_br_dr", dict(BASELINE_SWITCHES)),
    ("no_br_dr_ud", dict(BASELINE_SWITCHES) | {"use_user_delex": False}),
)

GRAD_TOLERANCE = 1e-4


def _add_train_config_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("training options (override config file)")
    for field in dataclasses.fields(TrainConfig):
        flag = "--" + field.name.replace("_", "-")
        if field.type == "bool":
            group.add_argument(
                flag, dest=field.name, default=None,
                action=argparse.BooleanOptionalAction,
            )
        else:
            kind = int if field.type == "int" else float
            group.add_argument(flag, dest=field.name, type=kind, default=None)


def _config_from_args(args) -> TrainConfig:
    file_values = load_config_file(args.config) if args.config else None
    overrides = {
        f.name: getattr(args, f.name) for f in dataclasses.fields(TrainConfig)
    }
    return resolve_config(file_values, os.environ.get("BORT_SEED"), overrides)


def _load_world(data_dir: str):
    data = Path(data_dir)
    schema = Schema.load(data / "schema.json")
    db = Database.load(schema, data / "db.json")
    corpus = load_corpus(data, schema)
    return schema, db, corpus


def _load_model(checkpoint: str) -> tuple[Seq2SeqModel, str]:
    config, params = load_params(checkpoint)
    return Seq2SeqModel(config, params), checkpoint_hash(checkpoint)


def _sibling_vocab(checkpoint: str, vocab_arg: str | None) -> Vocab:
    path = Path(vocab_arg) if vocab_arg else Path(checkpoint).with_name("vocab.json")
    return Vocab.load(path)


def cmd_gen_data(args) -> int:
    schema = default_schema()
    db = generate_db(schema, args.seed, args.entities)
    counts = {"train": args.train, "dev": args.dev, "test": args.test}
    corpus = generate_corpus(schema, db, counts, args.seed)
    validate_corpus(corpus)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    schema.save(out / "schema.json")
    db.save(out / "db.json")
    save_corpus(corpus, out)
    print(f"wrote {out}: " + " ".join(f"{k}={v}" for k, v in counts.items()))
    print(f"fingerprint {corpus_fingerprint(corpus)}")
    return 0


def cmd_train(args) -> int:
    cfg = _config_from_args(args)
    schema, db, corpus = _load_world(args.data)
    vocab = build_vocab(schema, corpus.splits["train"])
    if args.resume:
        # architecture and weights come from the checkpoint; a fresh
        # optimizer continues from there under the resolved config
        model_cfg, params = load_params(args.resume)
        if model_cfg.vocab_size != len(vocab):
            raise ConfigError(
                f"checkpoint vocab size {model_cfg.vocab_size} does not match "
                f"the data directory ({len(vocab)} tokens)"
            )
        model = Seq2SeqModel(model_cfg, params)
    else:
        model_cfg = ModelConfig(
            vocab_size=len(vocab),
            hidden_size=args.hidden_size,
            embed_size=args.embed_size,
            seed=cfg.seed,
        )
        model = Seq2SeqModel(model_cfg, init_params(model_cfg))
    trainer = Trainer(model, vocab, schema, db, corpus, cfg)
    log = trainer.train()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_params(out / "checkpoint.npz", model_cfg, model.params)
    vocab.save(out / "vocab.json")
    write_config_file(cfg, out / "resolved.cfg")
    log.save(out)
    print(
        f"best epoch {log.summary['best_epoch']} "
        f"dev combined {log.summary['best_dev_combined']:.4f} "
        f"after {log.summary['epochs_run']} epochs -> {out}"
    )
    return 0


def cmd_eval(args) -> int:
    schema, db, corpus = _load_world(args.data)
    sessions = corpus.splits[args.split]
    model, ck_hash = _load_model(args.checkpoint)
    vocab = _sibling_vocab(args.checkpoint, args.vocab)
    artifact = run_corpus(
        model, vocab, schema, db, sessions, args.mode,
        p=args.p, seed=args.seed,
        checkpoint_hash=ck_hash, corpus_hash=corpus_fingerprint(corpus),
    )
    if args.artifact:
        save_artifact(artifact, args.artifact)
    report = evaluate(artifact, sessions, schema, db)
    print(report.table())
    if args.report:
        doc = report.to_json()
        doc["mode"] = args.mode
        doc["p"] = args.p
        doc["split"] = args.split
        doc["checkpoint_hash"] = ck_hash
        Path(args.report).write_text(
            json.dumps(doc, indent=2) + "\n", encoding="utf-8"
        )
    return 0


def cmd_grad_check(args) -> int:
    from .training.config import baseline_config
    from .training.gradcheck import grad_check

    cfg = baseline_config(seed=args.seed) if args.baseline else TrainConfig(seed=args.seed)
    start = time.monotonic()
    report = grad_check(seed=args.seed, eps=args.eps, cfg=cfg)
    elapsed = time.monotonic() - start
    worst = 0.0
    for term in sorted(report):
        err = report[term]
        worst = max(worst, err)
        print(f"{term:<12} {err:.3e}")
    print(f"elapsed {elapsed:.1f}s, worst {worst:.3e}, tolerance {GRAD_TOLERANCE:g}")
    if worst >= GRAD_TOLERANCE:
        print("gradient check FAILED", file=sys.stderr)
        return 1
    print("gradient check passed")
    return 0


def cmd_noise_sweep(args) -> int:
    schema, db, corpus = _load_world(args.data)
    sessions = corpus.splits[args.split]
    models = []
    for spec in args.model:
        if "=" not in spec:
            raise ConfigError(f"--model expects label=checkpoint, got {spec!r}")
        label, path = spec.split("=", 1)
        model, _ = _load_model(path)
        models.append((label, model, _sibling_vocab(path, None)))
    sweeps = noise_sweep(
        models, schema, db, sessions,
        proportions=tuple(args.proportions), seed=args.seed,
    )
    text = sweep_csv(sweeps)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


def cmd_ablate(args) -> int:
    base = _config_from_args(args)
    schema, db, corpus = _load_world(args.data)
    vocab = build_vocab(schema, corpus.splits["train"])
    chosen = args.variant or [name for name, _ in ABLATION_VARIANTS]
    known = dict(ABLATION_VARIANTS)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for name in chosen:
        if name not in known:
            raise ConfigError(f"unknown variant {name!r}, pick from {sorted(known)}")
        cfg = base.replace(**known[name])
        model_cfg = ModelConfig(
            vocab_size=len(vocab),
            hidden_size=args.hidden_size,
            embed_size=args.embed_size,
            seed=cfg.seed,
        )
        model = Seq2SeqModel(model_cfg, init_params(model_cfg))
        log = Trainer(model, vocab, schema, db, corpus, cfg).train()
        variant_dir = out / name
        variant_dir.mkdir(exist_ok=True)
        save_params(variant_dir / "checkpoint.npz", model_cfg, model.params)
        vocab.save(variant_dir / "vocab.json")
        log.save(variant_dir)
        artifact = run_corpus(
            model, vocab, schema, db, corpus.splits["test"], "end_to_end",
            seed=cfg.seed,
        )
        report = evaluate(artifact, corpus.splits["test"], schema, db)
        rows.append({
            "variant": name,
            "dev_combined": log.summary["best_dev_combined"],
            "test_combined": report.combined,
            "test_inform": report.inform,
            "test_success": report.success,
            "test_bleu": report.bleu,
        })
        print(f"{name}: dev {rows[-1]['dev_combined']:.2f} test {report.combined:.2f}")
    header = list(rows[0])
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(row[k]) if isinstance(row[k], float) else str(row[k])
                             for k in header))
    (out / "ablation.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    (out / "ablation.json").write_text(json.dumps(rows, indent=2) + "\n", encoding="utf-8")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import build_app

    schema, db, _ = _load_world(args.data)
    model, _hash = _load_model(args.checkpoint)
    vocab = _sibling_vocab(args.checkpoint, args.vocab)
    app = build_app(model, vocab, schema, db, static_dir=args.static)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def chat_loop(model, vocab, schema, db, read=input, write=print) -> None:
    """Terminal REPL over the same two-pass pipeline as the service.

    Live chat has no oracle transcript, so the tracker context carries the
    model's own previous reply; scripted evaluation feeds the gold one.
    """
    lexicon = build_lexicon(
        schema, [e for d in schema.domain_names() for e in db.entities(d)]
    )
    state = DialogState({})
    prev_resp: list[str] = []
    domain = None
    write("chat ready; empty line quits (tracker runs on generated context)")
    while True:
        try:
            line = read("> ")
        except EOFError:
            break
        tokens = line.strip().lower().split()
        if not tokens:
            break
        delta, state, warnings = predict_turn_state(
            model, vocab, schema, state, prev_resp, tokens
        )
        domain = active_domain(delta, domain, schema)
        result = db.query(state, domain)
        user_delex = delexicalize(tokens, find_value_spans(tokens, lexicon))
        resp = predict_turn_response(
            model, vocab, schema, prev_resp, user_delex, state, result
        )
        lookup = (
            {e.id: e for e in db.entities(domain)}
            if schema.domain(domain).has_db else {}
        )
        write(" ".join(relexicalize(resp, result, state, lookup)) or "(no reply)")
        status = " ".join(serialize_state(state, schema)) or "(empty)"
        note = f"  [warnings {warnings}]" if warnings else ""
        write(f"state: {status} | {domain}: {result.match_count} matches{note}")
        prev_resp = resp


def cmd_chat(args) -> int:
    schema, db, _ = _load_world(args.data)
    model, _hash = _load_model(args.checkpoint)
    vocab = _sibling_vocab(args.checkpoint, args.vocab)
    chat_loop(model, vocab, schema, db)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bort", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate schema, database and corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=17)
    p.add_argument("--train", type=int, default=400)
    p.add_argument("--dev", type=int, default=100)
    p.add_argument("--test", type=int, default=100)
    p.add_argument("--entities", type=int, default=40)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="fit a model and save the best checkpoint")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="flat key = value options file")
    p.add_argument("--hidden-size", type=int, default=100)
    p.add_argument("--embed-size", type=int, default=100)
    p.add_argument(
        "--resume", metavar="CHECKPOINT",
        help="start from the weights in an existing checkpoint "
        "(its architecture wins over --hidden-size/--embed-size)",
    )
    _add_train_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="run a checkpoint over a split and score it")
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--vocab")
    p.add_argument("--split", choices=SPLITS, default="test")
    p.add_argument("--mode", choices=("end_to_end", "policy_opt"), default="end_to_end")
    p.add_argument("-p", type=float, default=0.0, help="state mask proportion (policy_opt)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--artifact", help="write per-turn predictions here (jsonl)")
    p.add_argument("--report", help="write the score report here (json)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("grad-check", help="finite-difference check of every loss term")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--baseline", action="store_true",
                   help="check the reconstruction-free configuration")
    p.set_defaults(func=cmd_grad_check)

    p = sub.add_parser("noise-sweep", help="combined score vs state corruption level")
    p.add_argument("--data", required=True)
    p.add_argument("--model", action="append", required=True,
                   help="label=checkpoint, repeatable")
    p.add_argument("--split", choices=SPLITS, default="test")
    p.add_argument("--proportions", type=float, nargs="+",
                   default=list(DEFAULT_PROPORTIONS))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write csv here as well as stdout")
    p.set_defaults(func=cmd_noise_sweep)

    p = sub.add_parser("ablate", help="train and score the objective variants")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--hidden-size", type=int, default=100)
    p.add_argument("--embed-size", type=int, default=100)
    p.add_argument("--variant", action="append",
                   help="subset of " + "/".join(n for n, _ in ABLATION_VARIANTS)
                   + ", repeatable")
    _add_train_config_flags(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("serve", help="HTTP chat service")
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--vocab")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--static", help="directory with the browser console bundle")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("chat", help="terminal chat REPL")
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--vocab")
    p.set_defaults(func=cmd_chat)

    return parser


_FAILURES = (
    ConfigError, CorpusError, CheckpointError, DataError, TrainError,
    EvalError, FileNotFoundError, ValueError, KeyError,
)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _FAILURES as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
