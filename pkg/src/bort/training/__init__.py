from .config import TrainConfig, baseline_config
from .losses import BatchLosses, LossBreakdown, batch_losses, recompose_total

__all__ = [
    "BatchLosses",
    "LossBreakdown",
    "TrainConfig",
    "baseline_config",
    "batch_losses",
    "recompose_total",
]
