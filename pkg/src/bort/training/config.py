"""Training hyper-parameters and ablation switches."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass


@dataclass(frozen=True)
class TrainConfig:
    lambda1: float = 0.05
    lambda2: float = 0.03
    alpha: float = 0.15
    learning_rate: float = 0.005
    weight_decay: float = 0.01
    batch_size: int = 128
    max_epochs: int = 40
    patience: int = 5
    seed: int = 17
    use_br: bool = True
    use_dr: bool = True
    use_user_delex: bool = True
    br_enc_only: bool = False
    br_dec_only: bool = False
    dr_state_only: bool = False
    dr_resp_only: bool = False

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("lambda weights must be non-negative")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.patience < 1:
            raise ValueError("patience must be at least 1")
        if self.learning_rate <= 0 or self.batch_size < 1 or self.max_epochs < 1:
            raise ValueError("learning_rate, batch_size and max_epochs must be positive")
        if self.br_enc_only and self.br_dec_only:
            raise ValueError("br_enc_only and br_dec_only are mutually exclusive")
        if self.dr_state_only and self.dr_resp_only:
            raise ValueError("dr_state_only and dr_resp_only are mutually exclusive")

    def to_json(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_json(cls, doc: dict) -> "TrainConfig":
        return cls(**doc)

    def replace(self, **kwargs) -> "TrainConfig":
        return dataclasses.replace(self, **kwargs)


BASELINE_SWITCHES = {"use_br": False, "use_dr": False, "lambda1": 0.0, "lambda2": 0.0}


def baseline_config(**overrides) -> TrainConfig:
    """The plain dual-decoder setup: no reconstruction, no denoising."""
    merged = dict(BASELINE_SWITCHES)
    merged.update(overrides)
    return TrainConfig(**merged)
