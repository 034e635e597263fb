"""
Masked-spectrogram pretraining: corpus windowing, batched mask sampling,
the LAMB training loop with periodic validation and best-weight retention.
"""
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
import torch
from sklearn.model_selection import train_test_split

from seeg_pretrain.entity.config_entity import EncoderConfig, MaskParams, PretrainConfig
from seeg_pretrain.entity.data_entity import Spectrogram
from seeg_pretrain.exception import DivergenceError, EmptyInputError, ShapeError
from seeg_pretrain.logger import logging
from seeg_pretrain.modeling.encoder import SpectrogramEncoder
from seeg_pretrain.modeling.losses import LossBreakdown, loss_sums, total_loss
from seeg_pretrain.modeling.nn import Lamb, backward
from seeg_pretrain.processing.masking import apply_mask_values, sample_mask_plan
from seeg_pretrain.processing.signal_processing import fit_zscore_stats, zscore_matrix

CURVE_COLUMNS = ["step", "train_l1", "train_content", "train_total", "val_total"]
SEED_BOUND = 2 ** 63 - 1


@dataclass(frozen=True, eq=False)
class SpectrogramCorpus:
    """
    Z-scored n x m windows stacked as S x n x m, with their source electrode.
    """
    segments: np.ndarray
    freqs_hz: np.ndarray
    electrode_ids: tuple

    def __len__(self) -> int:
        return int(self.segments.shape[0])

    @property
    def segment_shape(self):
        return tuple(self.segments.shape[1:])


def window_spectrogram(
    spec: Spectrogram, segment_frames: int, epsilon: float = 1e-8, scope: str = "instance"
) -> np.ndarray:
    """
    Cut a full-length spectrogram into non-overlapping ``segment_frames``
    windows and z-score them, per window or with the electrode's pooled
    per-bin statistics.
    """
    count = spec.n_frames // segment_frames
    if count == 0:
        return np.empty((0, spec.n_freqs, segment_frames))
    windows = np.stack(
        [spec.values[:, i * segment_frames:(i + 1) * segment_frames] for i in range(count)]
    )
    if scope == "session":
        stats = fit_zscore_stats(list(windows), epsilon)
        return (windows - stats.mean[None, :, None]) / np.maximum(stats.std, epsilon)[None, :, None]
    return zscore_matrix(windows, epsilon)


def build_corpus(
    spectrograms: Sequence[Spectrogram],
    segment_frames: int,
    epsilon: float = 1e-8,
    scope: str = "instance",
    exclude: Sequence[str] = (),
) -> SpectrogramCorpus:
    excluded = set(exclude)
    blocks, owners, freqs = [], [], None
    for spec in spectrograms:
        if spec.electrode_id in excluded:
            continue
        if freqs is not None and not np.array_equal(freqs, spec.freqs_hz):
            raise ShapeError("all corpus spectrograms must share one frequency axis")
        freqs = spec.freqs_hz
        windows = window_spectrogram(spec, segment_frames, epsilon, scope)
        blocks.append(windows)
        owners.extend([spec.electrode_id] * len(windows))
    if not owners:
        raise EmptyInputError("pretraining corpus is empty")
    segments = np.concatenate(blocks).astype(np.float32)
    logging.info(f"Corpus: {segments.shape[0]} windows of {segments.shape[1]}x{segments.shape[2]} from {len(blocks)} electrodes")
    return SpectrogramCorpus(segments, np.asarray(freqs), tuple(owners))


def masked_batch(
    segments: np.ndarray,
    seeds: Sequence[int],
    params: MaskParams,
    scheme: str,
    foi_hz: Optional[Sequence[float]],
):
    """Augmented views and masked sets for a stack of windows, one plan per seed."""
    augmented, masks = [], []
    for values, seed in zip(segments, seeds):
        plan = sample_mask_plan(values.shape, params, int(seed), scheme, foi_hz)
        masked = apply_mask_values(values, plan, int(seed))
        augmented.append(masked.values)
        masks.append(masked.mask)
    return torch.from_numpy(np.stack(augmented)), torch.from_numpy(np.stack(masks))


@dataclass(frozen=True, eq=False)
class PretrainResult:
    model: SpectrogramEncoder
    best_state: Dict[str, torch.Tensor]
    best_step: int
    best_val_total: float
    curve: pd.DataFrame


class _Validator:
    """Fixed validation masks so every validation point scores the same task."""

    def __init__(self, segments: np.ndarray, params: MaskParams, cfg: PretrainConfig, foi_hz, seed: int,
                 gamma: float, alpha: float):
        seeds = np.random.default_rng(seed).integers(0, SEED_BOUND, size=len(segments))
        self.targets = torch.from_numpy(segments)
        self.inputs, self.masks = masked_batch(segments, seeds, params, cfg.mask_scheme, foi_hz)
        self.batch_size = cfg.batch_size
        self.gamma = gamma
        self.alpha = alpha

    @torch.no_grad()
    def __call__(self, model: SpectrogramEncoder) -> float:
        was_training = model.training
        model.eval()
        l1_sum = l1_n = c_sum = c_n = 0
        for start in range(0, len(self.targets), self.batch_size):
            sl = slice(start, start + self.batch_size)
            predicted = model(self.inputs[sl])
            a, b, c, d = loss_sums(self.targets[sl], predicted, self.masks[sl], self.gamma)
            l1_sum, l1_n, c_sum, c_n = l1_sum + a, l1_n + b, c_sum + c, c_n + d
        model.train(was_training)
        l1 = l1_sum / l1_n if l1_n else 0.0
        content = c_sum / c_n if c_n else 0.0
        return l1 + self.alpha * content


def pretrain(
    corpus: SpectrogramCorpus,
    encoder_cfg: EncoderConfig,
    cfg: PretrainConfig,
    mask_params: MaskParams = MaskParams(),
    on_divergence: Optional[Callable[[SpectrogramEncoder, int], None]] = None,
) -> PretrainResult:
    """
    Train the encoder to reconstruct masked spectrogram cells.

    Each step samples a batch, masks every item with its own derived seed,
    predicts the original from the augmented view and takes one LAMB step on
    ``l1 + alpha * content``. Validation runs before training and every
    ``val_every`` steps (plus the last); the weights with the lowest
    validation total are kept and loaded back into the returned model.

    Raises:
        DivergenceError: on a non-finite training loss, after ``on_divergence``
            has had the chance to persist the offending weights.
    """
    if len(corpus) < 2:
        raise EmptyInputError("pretraining needs at least two windows for a train/validation split")
    if corpus.segment_shape[0] != encoder_cfg.n_bins:
        raise ShapeError(f"corpus has {corpus.segment_shape[0]} bins, encoder expects {encoder_cfg.n_bins}")
    seeds = np.random.SeedSequence(cfg.seed).spawn(4)
    init_seed, dropout_seed = (int(s.generate_state(1)[0]) for s in seeds[:2])
    rng = np.random.default_rng(seeds[2])
    index = np.arange(len(corpus))
    train_idx, val_idx = train_test_split(index, test_size=cfg.val_fraction, random_state=cfg.seed)
    train_idx = np.sort(train_idx)
    foi = corpus.freqs_hz if cfg.mask_scheme == "adaptive" else None

    model = SpectrogramEncoder(encoder_cfg, seed=init_seed)
    model.train()
    optimizer = Lamb(model.parameters(), lr=cfg.lr, betas=cfg.betas, eps=cfg.eps,
                     weight_decay=cfg.weight_decay, max_trust=cfg.max_trust)
    generator = torch.Generator().manual_seed(dropout_seed)
    validate = _Validator(corpus.segments[np.sort(val_idx)], mask_params, cfg, foi,
                          int(seeds[3].generate_state(1)[0]), encoder_cfg.gamma, encoder_cfg.alpha)

    rows: List[dict] = []
    best_val = validate(model)
    best_step, best_state = 0, model.tensors()
    rows.append({"step": 0, "train_l1": np.nan, "train_content": np.nan, "train_total": np.nan, "val_total": best_val})
    logging.info(f"Pretraining {cfg.n_steps} steps on {len(train_idx)} windows; initial val_total={best_val:.6f}")

    for step in range(1, cfg.n_steps + 1):
        batch = rng.choice(train_idx, size=min(cfg.batch_size, len(train_idx)), replace=False)
        item_seeds = rng.integers(0, SEED_BOUND, size=len(batch))
        targets = torch.from_numpy(corpus.segments[batch])
        inputs, masks = masked_batch(corpus.segments[batch], item_seeds, mask_params, cfg.mask_scheme, foi)
        optimizer.zero_grad(set_to_none=True)
        losses: LossBreakdown = total_loss(targets, model(inputs, generator), masks,
                                           encoder_cfg.gamma, encoder_cfg.alpha)
        if not torch.isfinite(losses.total):
            logging.error(f"Non-finite pretraining loss at step {step}")
            if on_divergence is not None:
                on_divergence(model, step)
            raise DivergenceError(f"training loss became non-finite at step {step}")
        backward(losses.total)
        optimizer.step()

        row = {"step": step, "train_l1": float(losses.l1), "train_content": float(losses.content),
               "train_total": float(losses.total), "val_total": np.nan}
        if step % cfg.val_every == 0 or step == cfg.n_steps:
            val_total = validate(model)
            row["val_total"] = val_total
            logging.info(f"step {step}: train_total={row['train_total']:.6f} val_total={val_total:.6f}")
            if val_total < best_val:
                best_val, best_step, best_state = val_total, step, model.tensors()
        rows.append(row)

    model.load_state_dict(best_state)
    model.eval()
    logging.info(f"Best validation total {best_val:.6f} at step {best_step}")
    return PretrainResult(model, best_state, best_step, best_val, pd.DataFrame(rows, columns=CURVE_COLUMNS))
