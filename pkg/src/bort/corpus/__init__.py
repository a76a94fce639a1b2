from .gen import Corpus, Goal, Session, Turn, generate_corpus, validate_corpus
from .io import load_corpus, save_corpus
from .noise import CorruptionMask, corrupt_tokens, denoise_state_target, mask_tokens
from .ops import exclude_domain, subset_low_resource

__all__ = [
    "Corpus",
    "CorruptionMask",
    "Goal",
    "Session",
    "Turn",
    "corrupt_tokens",
    "denoise_state_target",
    "exclude_domain",
    "generate_corpus",
    "load_corpus",
    "mask_tokens",
    "save_corpus",
    "subset_low_resource",
    "validate_corpus",
]
