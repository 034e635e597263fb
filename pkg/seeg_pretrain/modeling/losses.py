from dataclasses import dataclass

import torch

from seeg_pretrain.exception import ShapeError


@dataclass(frozen=True)
class LossBreakdown:
    """Scalar loss tensors; ``total = l1 + alpha * content``."""
    l1: torch.Tensor
    content: torch.Tensor
    total: torch.Tensor

    def as_floats(self) -> dict:
        return {"l1": float(self.l1), "content": float(self.content), "total": float(self.total)}


def _prepare(y, y_hat, mask):
    y_hat = torch.as_tensor(y_hat)
    y = torch.as_tensor(y, dtype=y_hat.dtype)
    mask = torch.as_tensor(mask, dtype=torch.bool)
    if y.shape != y_hat.shape or mask.shape != y.shape:
        raise ShapeError(f"loss inputs disagree: {tuple(y.shape)}, {tuple(y_hat.shape)}, {tuple(mask.shape)}")
    return y, y_hat, mask


def _masked_mean(errors: torch.Tensor, selected: torch.Tensor, like: torch.Tensor) -> torch.Tensor:
    if not bool(selected.any()):
        # zero that still belongs to the graph
        return (like * 0).sum()
    return errors[selected].mean()


def masked_l1_loss(y, y_hat, mask) -> torch.Tensor:
    """Mean |Y - Y_hat| over the masked positions; 0 when nothing is masked."""
    y, y_hat, mask = _prepare(y, y_hat, mask)
    return _masked_mean((y - y_hat).abs(), mask, y_hat)


def content_aware_loss(y, y_hat, mask, gamma: float = 1.0) -> torch.Tensor:
    """Mean |Y - Y_hat| over masked positions whose true value exceeds ``gamma``."""
    y, y_hat, mask = _prepare(y, y_hat, mask)
    return _masked_mean((y - y_hat).abs(), mask & (y > gamma), y_hat)


def total_loss(y, y_hat, mask, gamma: float = 1.0, alpha: float = 1.0) -> LossBreakdown:
    l1 = masked_l1_loss(y, y_hat, mask)
    content = content_aware_loss(y, y_hat, mask, gamma)
    return LossBreakdown(l1=l1, content=content, total=l1 + alpha * content)


@torch.no_grad()
def loss_sums(y, y_hat, mask, gamma: float = 1.0):
    """
    (l1 sum, l1 count, content sum, content count) for pooling a loss
    over several batches without averaging averages.
    """
    y, y_hat, mask = _prepare(y, y_hat, mask)
    errors = (y - y_hat).abs()
    content = mask & (y > gamma)
    return float(errors[mask].sum()), int(mask.sum()), float(errors[content].sum()), int(content.sum())
