"""Dataset manipulations for low-resource and zero-shot experiments."""

from __future__ import annotations

import math

from .. import rng
from ..schema import SchemaViolation
from .gen import Corpus


def subset_low_resource(corpus: Corpus, fraction: float, seed: int) -> Corpus:
    """Keep ceil(fraction * |train|) train sessions, original order preserved."""
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    train = corpus.splits["train"]
    n_keep = math.ceil(fraction * len(train))
    gen = rng.stream(seed, "subset")
    keep = sorted(gen.choice(len(train), size=n_keep, replace=False))
    return Corpus(
        schema=corpus.schema,
        seed=corpus.seed,
        splits={
            "train": [train[i] for i in keep],
            "dev": list(corpus.splits["dev"]),
            "test": list(corpus.splits["test"]),
        },
    )


def exclude_domain(corpus: Corpus, domain: str) -> Corpus:
    """Zero-shot split: domain removed from train, required in dev/test."""
    if not corpus.schema.has_domain(domain):
        raise SchemaViolation(f"unknown domain {domain!r}")
    splits = {
        "train": [s for s in corpus.splits["train"] if domain not in s.goal.domains()],
        "dev": [s for s in corpus.splits["dev"] if domain in s.goal.domains()],
        "test": [s for s in corpus.splits["test"] if domain in s.goal.domains()],
    }
    return Corpus(schema=corpus.schema, seed=corpus.seed, splits=splits)
