# stare_kg/training/loss.py
import torch
import torch.nn.functional as F

from stare_kg.errors import NonFiniteLossError


def bce_loss(scores: torch.Tensor, labels: torch.Tensor, num_real_entities: int) -> torch.Tensor:
    """Mean binary cross entropy on pre-sigmoid logits, reserved columns dropped.

    Uses the log-sum-exp form of `binary_cross_entropy_with_logits`.
    """
    if scores.shape != labels.shape:
        raise ValueError(f"scores {tuple(scores.shape)} and labels {tuple(labels.shape)} differ")
    logits = scores[..., :num_real_entities]
    if not torch.isfinite(logits).all():
        raise NonFiniteLossError("non-finite logits passed to bce_loss")
    return F.binary_cross_entropy_with_logits(logits, labels[..., :num_real_entities].to(logits.dtype))
