"""
Tensor building blocks on top of torch autograd: seeded dropout, exact GeLU,
multi-head self-attention that exposes its weights, the post-norm encoder
layer, Xavier-uniform initialisation, and the LAMB / AdamW optimizers.
"""
import math
from typing import Iterable, Optional, Tuple

import torch
import torch.nn.functional as F
from torch import nn
from torch.optim.optimizer import Optimizer

from seeg_pretrain.exception import ParameterError, ShapeError, StateError

LAYER_NORM_EPS = 1e-12


def gelu(x: torch.Tensor) -> torch.Tensor:
    """Exact (erf) GeLU."""
    return F.gelu(x, approximate="none")


def dropout(x: torch.Tensor, p: float, training: bool, generator: Optional[torch.Generator] = None) -> torch.Tensor:
    """Inverted dropout drawing its keep mask from ``generator``; identity in eval mode."""
    if not training or p == 0.0:
        return x
    keep = torch.rand(x.shape, generator=generator, dtype=x.dtype, device=x.device) >= p
    return x * keep / (1.0 - p)


class MultiHeadSelfAttention(nn.Module):
    def __init__(self, d_hidden: int, n_heads: int):
        super().__init__()
        if d_hidden % n_heads != 0:
            raise ParameterError(f"n_heads={n_heads} must divide d_hidden={d_hidden}")
        self.n_heads = n_heads
        self.d_head = d_hidden // n_heads
        self.query = nn.Linear(d_hidden, d_hidden)
        self.key = nn.Linear(d_hidden, d_hidden)
        self.value = nn.Linear(d_hidden, d_hidden)
        self.output = nn.Linear(d_hidden, d_hidden)

    def _split(self, x: torch.Tensor) -> torch.Tensor:
        # (..., m, d) -> (..., H, m, d_head)
        return x.unflatten(-1, (self.n_heads, self.d_head)).transpose(-3, -2)

    def forward(self, x: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        """
        Returns:
            (out, weights): out has the input's shape, weights are
            (..., H, m, m) with rows summing to one.
        """
        q, k, v = self._split(self.query(x)), self._split(self.key(x)), self._split(self.value(x))
        scores = q @ k.transpose(-2, -1) / math.sqrt(self.d_head)
        weights = torch.softmax(scores, dim=-1)
        context = (weights @ v).transpose(-3, -2).flatten(-2)
        return self.output(context), weights


class FeedForward(nn.Module):
    def __init__(self, d_hidden: int, d_ff: int):
        super().__init__()
        self.inner = nn.Linear(d_hidden, d_ff)
        self.outer = nn.Linear(d_ff, d_hidden)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.outer(gelu(self.inner(x)))


class EncoderLayer(nn.Module):
    """
    Post-norm transformer layer:

        h   = LN(x + dropout(attention(x)))
        out = LN(h + dropout(feed_forward(h)))
    """

    def __init__(self, d_hidden: int, n_heads: int, d_ff: int, dropout_p: float = 0.1):
        super().__init__()
        self.d_hidden = d_hidden
        self.dropout_p = dropout_p
        self.attention = MultiHeadSelfAttention(d_hidden, n_heads)
        self.feed_forward = FeedForward(d_hidden, d_ff)
        self.attention_norm = nn.LayerNorm(d_hidden, eps=LAYER_NORM_EPS)
        self.output_norm = nn.LayerNorm(d_hidden, eps=LAYER_NORM_EPS)

    def forward(self, x: torch.Tensor, generator: Optional[torch.Generator] = None) -> torch.Tensor:
        if x.shape[-1] != self.d_hidden:
            raise ShapeError(f"layer expects width {self.d_hidden}, got {x.shape[-1]}")
        attended, _ = self.attention(x)
        h = self.attention_norm(x + dropout(attended, self.dropout_p, self.training, generator))
        return self.output_norm(h + dropout(self.feed_forward(h), self.dropout_p, self.training, generator))


def backward(loss: torch.Tensor) -> None:
    """Populate ``.grad`` on every parameter reachable from a scalar loss."""
    if not isinstance(loss, torch.Tensor) or loss.grad_fn is None:
        raise StateError("backward needs a loss produced by a recorded forward pass")
    if loss.numel() != 1:
        raise ShapeError("backward needs a scalar loss")
    loss.backward()


# ----------------- Initialisation -----------------
def xavier_bound(fan_in: int, fan_out: int) -> float:
    return math.sqrt(6.0 / (fan_in + fan_out))


def xavier_uniform_init(shape: Tuple[int, int], rng_seed: int, dtype: torch.dtype = torch.float32) -> torch.Tensor:
    """
    Entries uniform in +- sqrt(6 / (fan_in + fan_out)) for a (fan_out, fan_in)
    weight shape.
    """
    if len(shape) != 2:
        raise ShapeError(f"Xavier initialisation needs a 2-D shape, got {tuple(shape)}")
    fan_out, fan_in = shape
    bound = xavier_bound(fan_in, fan_out)
    generator = torch.Generator().manual_seed(int(rng_seed))
    return torch.empty(tuple(shape), dtype=dtype).uniform_(-bound, bound, generator=generator)


@torch.no_grad()
def xavier_init_(module: nn.Module, generator: torch.Generator) -> None:
    """Xavier-uniform every Linear weight of ``module`` in registration order; zero the biases."""
    for layer in module.modules():
        if isinstance(layer, nn.Linear):
            fan_out, fan_in = layer.weight.shape
            bound = xavier_bound(fan_in, fan_out)
            layer.weight.uniform_(-bound, bound, generator=generator)
            if layer.bias is not None:
                layer.bias.zero_()


# ----------------- Optimizers -----------------
@torch.no_grad()
def lamb_step(
    param: torch.Tensor,
    grad: torch.Tensor,
    state: dict,
    lr: float,
    betas: Tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-6,
    weight_decay: float = 0.0,
    max_trust: float = 10.0,
) -> None:
    """
    One in-place LAMB update of a single parameter tensor.

    ``state`` holds ``step``, ``exp_avg`` and ``exp_avg_sq`` and is created
    on first use. The Adam direction (plus decay) is rescaled by the trust
    ratio ||p|| / ||update||, clamped to [0, max_trust]; the ratio is 1 when
    either norm is zero.
    """
    beta1, beta2 = betas
    if not state:
        state["step"] = 0
        state["exp_avg"] = torch.zeros_like(param)
        state["exp_avg_sq"] = torch.zeros_like(param)
    state["step"] += 1
    step = state["step"]
    exp_avg, exp_avg_sq = state["exp_avg"], state["exp_avg_sq"]
    exp_avg.mul_(beta1).add_(grad, alpha=1.0 - beta1)
    exp_avg_sq.mul_(beta2).addcmul_(grad, grad, value=1.0 - beta2)

    m_hat = exp_avg / (1.0 - beta1 ** step)
    v_hat = exp_avg_sq / (1.0 - beta2 ** step)
    update = m_hat / (v_hat.sqrt() + eps)
    if weight_decay != 0.0:
        update = update + weight_decay * param

    w_norm = torch.linalg.vector_norm(param)
    u_norm = torch.linalg.vector_norm(update)
    if w_norm == 0 or u_norm == 0:
        trust = 1.0
    else:
        trust = float(torch.clamp(w_norm / u_norm, 0.0, max_trust))
    param.add_(update, alpha=-lr * trust)


class Lamb(Optimizer):
    """
    Layer-wise adaptive moments optimizer; each parameter tensor is one "layer"
    for the trust ratio.

    Args:
        params: parameters or parameter groups.
        lr (float): learning rate.
        betas (Tuple[float, float]): moment decay rates.
        eps (float): denominator guard.
        weight_decay (float): decoupled decay folded into the update before the trust ratio.
        max_trust (float): upper clamp of the trust ratio.
    """

    def __init__(
        self,
        params: Iterable,
        lr: float = 1e-4,
        betas: Tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-6,
        weight_decay: float = 0.0,
        max_trust: float = 10.0,
    ):
        if not lr >= 0.0:
            raise ParameterError(f"Invalid learning rate: {lr}")
        if not (0.0 <= betas[0] < 1.0 and 0.0 <= betas[1] < 1.0):
            raise ParameterError(f"Invalid betas: {betas}")
        if not weight_decay >= 0.0:
            raise ParameterError(f"Invalid weight_decay value: {weight_decay}")
        defaults = dict(lr=lr, betas=betas, eps=eps, weight_decay=weight_decay, max_trust=max_trust)
        super().__init__(params, defaults)

    @torch.no_grad()
    def step(self, closure=None):
        loss = None
        if closure is not None:
            with torch.enable_grad():
                loss = closure()
        for group in self.param_groups:
            for p in group["params"]:
                if p.grad is None:
                    continue
                lamb_step(
                    p, p.grad, self.state[p], group["lr"], group["betas"], group["eps"],
                    group["weight_decay"], group["max_trust"],
                )
        return loss


def build_adamw(
    param_groups: Iterable,
    lr: float = 1e-3,
    betas: Tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
    weight_decay: float = 0.01,
) -> torch.optim.AdamW:
    """AdamW with decoupled decay p <- p - lr * wd * p, independent of the moment update."""
    return torch.optim.AdamW(param_groups, lr=lr, betas=betas, eps=eps, weight_decay=weight_decay)
