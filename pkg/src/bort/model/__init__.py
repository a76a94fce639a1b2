from .network import ModelConfig, Seq2SeqModel, init_params
from .vocab import Vocab, build_vocab

__all__ = ["ModelConfig", "Seq2SeqModel", "Vocab", "build_vocab", "init_params"]
