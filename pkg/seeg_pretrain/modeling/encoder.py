"""
Spectrogram encoder: linear input projection plus a fixed sinusoidal
position table, a stack of post-norm encoder layers, and the per-frame
reconstruction head.
"""
import math
from typing import Dict, Optional

import torch
from torch import nn

from seeg_pretrain.entity.config_entity import EncoderConfig
from seeg_pretrain.exception import LayerIndexError, LengthError, ShapeError
from seeg_pretrain.modeling.nn import LAYER_NORM_EPS, EncoderLayer, gelu, xavier_init_


def sinusoidal_positions(max_frames: int, d_hidden: int) -> torch.Tensor:
    """P[t, 2i] = sin(t / 10000^(2i/d)), P[t, 2i+1] = cos(t / 10000^(2i/d))."""
    position = torch.arange(max_frames, dtype=torch.float64)[:, None]
    rates = torch.exp(-math.log(10000.0) * torch.arange(0, d_hidden, 2, dtype=torch.float64) / d_hidden)
    table = torch.zeros(max_frames, d_hidden, dtype=torch.float64)
    table[:, 0::2] = torch.sin(position * rates)
    table[:, 1::2] = torch.cos(position * rates)[:, : d_hidden // 2]
    return table.float()


class PredictionHead(nn.Module):
    """Dense d -> d, GeLU, layer norm, then dense d -> n."""

    def __init__(self, d_hidden: int, n_bins: int):
        super().__init__()
        self.dense = nn.Linear(d_hidden, d_hidden)
        self.norm = nn.LayerNorm(d_hidden, eps=LAYER_NORM_EPS)
        self.output = nn.Linear(d_hidden, n_bins)

    def forward(self, e: torch.Tensor) -> torch.Tensor:
        return self.output(self.norm(gelu(self.dense(e))))


class SpectrogramEncoder(nn.Module):
    """
    Encoder over n x m spectrograms (rows are frequency bins, columns frames).

    Inputs may be a single n x m matrix or a batch B x n x m; embeddings come
    back as (B x) m x d_hidden.
    """

    def __init__(self, cfg: EncoderConfig = EncoderConfig(), seed: int = 0):
        super().__init__()
        self.cfg = cfg
        self.input_projection = nn.Linear(cfg.n_bins, cfg.d_hidden, bias=False)
        self.register_buffer("positions", sinusoidal_positions(cfg.max_frames, cfg.d_hidden), persistent=False)
        self.layers = nn.ModuleList(
            EncoderLayer(cfg.d_hidden, cfg.n_heads, cfg.d_feedforward, cfg.dropout) for _ in range(cfg.n_layers)
        )
        self.head = PredictionHead(cfg.d_hidden, cfg.n_bins)
        xavier_init_(self, torch.Generator().manual_seed(int(seed)))

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    def _as_input(self, y) -> torch.Tensor:
        y = torch.as_tensor(y, dtype=self.input_projection.weight.dtype)
        if y.dim() not in (2, 3) or y.shape[-2] != self.cfg.n_bins:
            raise ShapeError(f"expected (B x) {self.cfg.n_bins} x m input, got {tuple(y.shape)}")
        return y

    def embed_input(self, y) -> torch.Tensor:
        """Row t of the result is W_in @ Y[:, t] + P[t]."""
        y = self._as_input(y)
        m = y.shape[-1]
        if m > self.cfg.max_frames:
            raise LengthError(f"{m} frames exceed the {self.cfg.max_frames}-frame position table")
        return self.input_projection(y.transpose(-2, -1)) + self.positions[:m]

    def encode(self, y, upto_layer: Optional[int] = None, generator: Optional[torch.Generator] = None) -> torch.Tensor:
        upto = self.n_layers if upto_layer is None else int(upto_layer)
        if not 1 <= upto <= self.n_layers:
            raise LayerIndexError(f"layer {upto} outside [1, {self.n_layers}]")
        e = self.embed_input(y)
        for layer in self.layers[:upto]:
            e = layer(e, generator)
        return e

    def predict_spectrogram(self, e: torch.Tensor) -> torch.Tensor:
        if e.shape[-1] != self.cfg.d_hidden:
            raise ShapeError(f"embeddings of width {e.shape[-1]} given to a {self.cfg.d_hidden}-wide head")
        return self.head(e).transpose(-2, -1)

    def forward(self, y, generator: Optional[torch.Generator] = None) -> torch.Tensor:
        return self.predict_spectrogram(self.encode(y, generator=generator))

    def encoder_parameters(self):
        """Everything but the reconstruction head."""
        return [p for name, p in self.named_parameters() if not name.startswith("head.")]

    def tensors(self) -> Dict[str, torch.Tensor]:
        return {name: t.detach().clone() for name, t in self.state_dict().items()}

    @classmethod
    def from_tensors(cls, cfg: EncoderConfig, tensors: Dict[str, torch.Tensor]) -> "SpectrogramEncoder":
        model = cls(cfg)
        model.load_state_dict({k: torch.as_tensor(v) for k, v in tensors.items()})
        return model
