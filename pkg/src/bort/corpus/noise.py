"""Token corruption for denoising training and error-propagation simulation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..schema import Schema
from ..state import DialogState, Edit, LevenshteinState, serialize_state_with_spans
from ..tokens import MASK

KEEP, DELETE, MASKED = "keep", "delete", "mask"


class AlignmentError(ValueError):
    pass


@dataclass(frozen=True)
class CorruptionMask:
    actions: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.actions)

    def corrupted_positions(self) -> list[int]:
        return [i for i, a in enumerate(self.actions) if a != KEEP]


def corrupt_tokens(
    tokens: list[str], alpha: float, gen: np.random.Generator
) -> tuple[list[str], CorruptionMask]:
    """Independently corrupt each token with probability alpha.

    A corrupted token is deleted or masked with equal probability.  Both
    coin arrays are drawn unconditionally so downstream randomness does not
    depend on which tokens happened to be hit.
    """
    if not 0 <= alpha <= 1:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    n = len(tokens)
    hit = gen.random(n) < alpha
    delete = gen.random(n) < 0.5
    actions = []
    noisy = []
    for i, tok in enumerate(tokens):
        if not hit[i]:
            actions.append(KEEP)
            noisy.append(tok)
        elif delete[i]:
            actions.append(DELETE)
        else:
            actions.append(MASKED)
            noisy.append(MASK)
    return noisy, CorruptionMask(tuple(actions))


def mask_tokens(tokens: list[str], p: float, gen: np.random.Generator) -> list[str]:
    """Mask-only corruption used by the error-propagation evaluation mode."""
    if not 0 <= p <= 1:
        raise ValueError(f"p must be in [0, 1], got {p}")
    hit = gen.random(len(tokens)) < p
    return [MASK if hit[i] else tok for i, tok in enumerate(tokens)]


def denoise_state_target(
    prev_state: DialogState, mask: CorruptionMask, schema: Schema
) -> LevenshteinState:
    """Edits restoring every slot whose serialized tokens were corrupted.

    A corrupted domain tag implicates all of that domain's slots, since the
    tag is what scopes the slot entries that follow it.
    """
    tokens, tag_pos, slot_spans = serialize_state_with_spans(prev_state, schema)
    if len(mask) != len(tokens):
        raise AlignmentError(f"mask length {len(mask)} vs {len(tokens)} state tokens")
    corrupted = set(mask.corrupted_positions())
    if not corrupted:
        return LevenshteinState()
    hit_domains = {d for d, pos in tag_pos.items() if pos in corrupted}
    edits = []
    for (domain, slot), (lo, hi) in slot_spans.items():
        if domain in hit_domains or any(pos in corrupted for pos in range(lo, hi)):
            edits.append(Edit(domain, slot, prev_state.get(domain, slot)))
    return LevenshteinState(edits)
