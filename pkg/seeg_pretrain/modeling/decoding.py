"""
Supervised evaluation of the encoder and of the signal baselines.

Every decoder outputs a probability through a sigmoid and is trained with
binary cross-entropy under AdamW; the weights with the best validation
ROC-AUC are kept and scored on the test split.
"""
import copy
from dataclasses import dataclass, replace
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import torch
import torch.nn.functional as F
from torch import nn

from seeg_pretrain.constants import BASELINE_KINDS, DEEP_BASELINE_HIDDEN
from seeg_pretrain.entity.config_entity import DecodeConfig, EncoderConfig, StftConfig, SuperletConfig
from seeg_pretrain.entity.data_entity import EvalRecord, Recording, TaskDataset
from seeg_pretrain.exception import DegenerateTaskError, ElectrodeSelectionError, LengthError, ParameterError
from seeg_pretrain.logger import logging
from seeg_pretrain.modeling.encoder import SpectrogramEncoder
from seeg_pretrain.modeling.metrics import roc_auc
from seeg_pretrain.modeling.nn import build_adamw, xavier_init_
from seeg_pretrain.processing.signal_processing import zscore_matrix
from seeg_pretrain.processing.time_frequency import compute_spectrogram_stack
from seeg_pretrain.utils.main_utils import derive_seed

ENCODER_MODELS = ("pretrained", "random")
SUB_WINDOW_S = 0.25


# ----------------- Features -----------------
def extract_features(
    model: SpectrogramEncoder,
    y,
    k: int = 5,
    layer: Optional[int] = None,
    generator: Optional[torch.Generator] = None,
) -> torch.Tensor:
    """
    Mean of the center 2k frame embeddings at ``layer`` (default: last).

    For m frames the slice is [m // 2 - k, m // 2 + k).
    """
    e = model.encode(y, upto_layer=layer, generator=generator)
    m = e.shape[-2]
    if 2 * k > m:
        raise LengthError(f"a {2 * k}-frame window does not fit in {m} frames")
    center = m // 2
    return e[..., center - k:center + k, :].mean(dim=-2)


def standardize_rows(x: np.ndarray, epsilon: float = 1e-8) -> np.ndarray:
    """Per-example zero mean, unit variance."""
    return zscore_matrix(np.asarray(x, dtype=np.float64), epsilon)


def center_mean(spectrograms: np.ndarray, k: int) -> np.ndarray:
    """B x n x m -> B x n, averaging the center 2k frames."""
    m = spectrograms.shape[-1]
    if 2 * k > m:
        raise LengthError(f"a {2 * k}-frame window does not fit in {m} frames")
    center = m // 2
    return spectrograms[..., center - k:center + k].mean(axis=-1)


class ExampleBank:
    """
    Per-electrode decoder inputs for every example of a task, computed on
    first use and shared by all models and seeds.
    """

    def __init__(
        self,
        ds: TaskDataset,
        recording: Recording,
        electrode_id: str,
        stft_cfg: StftConfig = StftConfig(),
        superlet_cfg: SuperletConfig = SuperletConfig(),
        epsilon: float = 1e-8,
        _cache: Optional[Dict[str, np.ndarray]] = None,
    ):
        self.ds = ds
        self.recording = recording
        self.electrode_id = electrode_id
        self.stft_cfg = stft_cfg
        self.superlet_cfg = superlet_cfg
        self.epsilon = epsilon
        self._cache = dict(_cache or {})

    @property
    def labels(self) -> np.ndarray:
        return self.ds.labels

    def _contexts(self) -> np.ndarray:
        if "raw" not in self._cache:
            self._cache["raw"] = np.stack([ex.context for ex in self.ds.examples(self.recording, self.electrode_id)])
        return self._cache["raw"]

    def raw(self) -> np.ndarray:
        return standardize_rows(self._contexts(), self.epsilon)

    def raw_sub_window(self) -> np.ndarray:
        contexts = self._contexts()
        n = int(np.floor(SUB_WINDOW_S * self.recording.sample_rate_hz + 1e-9))
        start = contexts.shape[1] // 2 - n // 2
        return standardize_rows(contexts[:, start:start + n], self.epsilon)

    def spectrograms(self, method: str) -> np.ndarray:
        """Z-scored B x n x m spectrograms of the contexts."""
        key = f"spec:{method}"
        if key not in self._cache:
            values = compute_spectrogram_stack(
                self._contexts(), self.recording.sample_rate_hz, method, self.stft_cfg, self.superlet_cfg
            )
            self._cache[key] = zscore_matrix(values, self.epsilon).astype(np.float32)
        return self._cache[key]

    def subset(self, keep: np.ndarray) -> "ExampleBank":
        cache = {key: value[keep] for key, value in self._cache.items()}
        return ExampleBank(self.ds.subset(keep), self.recording, self.electrode_id, self.stft_cfg,
                           self.superlet_cfg, self.epsilon, cache)

    def baseline_inputs(self, kind: str, k: int) -> np.ndarray:
        if kind in ("lin_time_5s", "deep_5ff"):
            return self.raw()
        if kind == "lin_time_250ms":
            return self.raw_sub_window()
        if kind == "lin_stft":
            return center_mean(self.spectrograms("stft"), k)
        if kind == "lin_superlet":
            return center_mean(self.spectrograms("superlet"), k)
        raise ParameterError(f"unknown baseline kind {kind!r}")


# ----------------- Models -----------------
def baseline_input_dim(kind: str, sample_rate_hz: float = 2048.0, context_s: float = 5.0, n_bins: int = 40) -> int:
    if kind in ("lin_time_5s", "deep_5ff"):
        return int(np.floor(context_s * sample_rate_hz + 1e-9))
    if kind == "lin_time_250ms":
        return int(np.floor(SUB_WINDOW_S * sample_rate_hz + 1e-9))
    if kind in ("lin_stft", "lin_superlet"):
        return n_bins
    raise ParameterError(f"unknown baseline kind {kind!r}")


def build_baseline(kind: str, input_dim: Optional[int] = None, seed: int = 0) -> nn.Sequential:
    """
    Linear models are one dense layer to a sigmoid; ``deep_5ff`` stacks
    ReLU layers of widths 1024, 512, 256, 128 before the sigmoid output.
    """
    if kind not in BASELINE_KINDS:
        raise ParameterError(f"unknown baseline kind {kind!r}; expected one of {BASELINE_KINDS}")
    d = baseline_input_dim(kind) if input_dim is None else int(input_dim)
    if kind == "deep_5ff":
        layers: List[nn.Module] = []
        widths = (d,) + DEEP_BASELINE_HIDDEN
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            layers += [nn.Linear(fan_in, fan_out), nn.ReLU()]
        layers += [nn.Linear(widths[-1], 1), nn.Sigmoid()]
    else:
        layers = [nn.Linear(d, 1), nn.Sigmoid()]
    model = nn.Sequential(*layers)
    xavier_init_(model, torch.Generator().manual_seed(int(seed)))
    return model


class EncoderClassifier(nn.Module):
    """Encoder features at ``layer``, averaged over the center 2k frames, into a d -> 1 sigmoid head."""

    def __init__(self, encoder: SpectrogramEncoder, k: int = 5, layer: Optional[int] = None, seed: int = 0):
        super().__init__()
        self.encoder = encoder
        self.k = k
        self.layer = layer
        self.head = nn.Linear(encoder.cfg.d_hidden, 1)
        xavier_init_(self.head, torch.Generator().manual_seed(int(seed)))

    def classify(self, features: torch.Tensor) -> torch.Tensor:
        return torch.sigmoid(self.head(features)).squeeze(-1)

    def forward(self, y, generator: Optional[torch.Generator] = None) -> torch.Tensor:
        return self.classify(extract_features(self.encoder, y, self.k, self.layer, generator))


# ----------------- Training -----------------
@dataclass(frozen=True, eq=False)
class DecoderRun:
    model: nn.Module
    record: EvalRecord
    val_auc: float


def _split_indices(ds: TaskDataset) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    train, val, test = ds.indices("train"), ds.indices("val"), ds.indices("test")
    if min(train.size, val.size, test.size) == 0:
        raise DegenerateTaskError(f"every split must be nonempty, got sizes {ds.split_sizes()}")
    if np.unique(ds.labels[train]).size < 2:
        raise DegenerateTaskError("the training split holds a single class")
    return train, val, test


@torch.no_grad()
def _scores(predict: Callable[[np.ndarray], torch.Tensor], module: nn.Module, index: np.ndarray, batch: int) -> np.ndarray:
    module.eval()
    out = [predict(index[i:i + batch]).double().numpy() for i in range(0, index.size, batch)]
    return np.concatenate(out)


def fit_classifier(
    module: nn.Module,
    predict: Callable[[np.ndarray, Optional[torch.Generator]], torch.Tensor],
    param_groups: List[dict],
    labels: np.ndarray,
    splits: Tuple[np.ndarray, np.ndarray, np.ndarray],
    cfg: DecodeConfig,
    seed: int,
) -> Tuple[float, float]:
    """
    AdamW / BCE loop over random training mini-batches.

    Validation AUC is checked before the first update and every
    ``val_every`` updates; ties keep the earlier weights. The best weights
    are loaded back before the test split is scored.

    Returns:
        (best validation AUC, test AUC)
    """
    train, val, test = splits
    generator = torch.Generator().manual_seed(int(seed))
    optimizer = build_adamw(param_groups, weight_decay=cfg.weight_decay)
    targets = torch.as_tensor(labels, dtype=torch.float32)

    def evaluate(index: np.ndarray) -> float:
        return roc_auc(_scores(lambda idx: predict(idx, None), module, index, cfg.batch_size), labels[index])

    best_auc = evaluate(val)
    best_state = copy.deepcopy(module.state_dict())
    for update in range(1, cfg.n_updates + 1):
        module.train()
        pick = torch.randint(0, train.size, (min(cfg.batch_size, train.size),), generator=generator).numpy()
        batch = train[pick]
        probabilities = predict(batch, generator)
        loss = F.binary_cross_entropy(probabilities, targets[batch].to(probabilities.dtype))
        optimizer.zero_grad(set_to_none=True)
        loss.backward()
        optimizer.step()
        if update % cfg.val_every == 0:
            auc = evaluate(val)
            if auc > best_auc:
                best_auc, best_state = auc, copy.deepcopy(module.state_dict())
    module.load_state_dict(best_state)
    return best_auc, evaluate(test)


def train_decoder(
    bank: ExampleBank,
    model_name: str,
    mode: str,
    cfg: DecodeConfig,
    seed: int,
    encoder: Optional[SpectrogramEncoder] = None,
    encoder_cfg: Optional[EncoderConfig] = None,
    method: str = "stft",
) -> DecoderRun:
    """
    Train one decoder on one electrode's examples.

    ``model_name`` is a baseline kind (``mode="baseline"``), ``pretrained``
    (requires ``encoder``) or ``random`` (a freshly initialised encoder of
    ``encoder_cfg``), the latter two in ``frozen`` or ``finetune`` mode.
    Frozen mode trains the head on features computed once; the encoder is
    never updated. Fine-tuning works on a copy of ``encoder``.
    """
    ds = bank.ds
    splits = _split_indices(ds)
    labels = ds.labels
    init_seed = derive_seed(seed, model_name, mode)

    if model_name in BASELINE_KINDS:
        if mode != "baseline":
            raise ParameterError(f"baseline {model_name} only runs in 'baseline' mode")
        inputs = torch.as_tensor(bank.baseline_inputs(model_name, cfg.k), dtype=torch.float32)
        module = build_baseline(model_name, inputs.shape[1], init_seed)
        predict = lambda idx, g: module(inputs[idx]).squeeze(-1)  # noqa: E731
        groups = [{"params": list(module.parameters()), "lr": cfg.head_lr}]
    elif model_name in ENCODER_MODELS:
        if model_name == "pretrained":
            if encoder is None:
                raise ParameterError("pretrained decoding needs an encoder")
            base = copy.deepcopy(encoder)
        else:
            base = SpectrogramEncoder(encoder_cfg or (encoder.cfg if encoder is not None else EncoderConfig()), seed=init_seed)
        layer = cfg.layer or None
        module = EncoderClassifier(base, cfg.k, layer, seed=init_seed + 1)
        spectra = torch.as_tensor(bank.spectrograms(method))
        if mode == "frozen":
            module.encoder.eval()
            with torch.no_grad():
                features = torch.cat([
                    extract_features(module.encoder, spectra[i:i + cfg.batch_size], cfg.k, layer)
                    for i in range(0, len(spectra), cfg.batch_size)
                ])
            predict = lambda idx, g: module.classify(features[idx])  # noqa: E731
            groups = [{"params": list(module.head.parameters()), "lr": cfg.head_lr}]
        elif mode == "finetune":
            predict = lambda idx, g: module(spectra[idx], g)  # noqa: E731
            groups = [
                {"params": list(module.head.parameters()), "lr": cfg.head_lr},
                {"params": module.encoder.encoder_parameters(), "lr": cfg.encoder_lr},
            ]
        else:
            raise ParameterError(f"encoder decoding mode must be 'frozen' or 'finetune', got {mode!r}")
    else:
        raise ParameterError(f"unknown decoder model {model_name!r}")

    val_auc, test_auc = fit_classifier(module, predict, groups, labels, splits, cfg, init_seed)
    n_train, n_val, n_test = (int(s.size) for s in splits)
    record = EvalRecord(ds.task_name, bank.electrode_id, model_name, mode, int(seed), n_train, n_val, n_test, test_auc)
    logging.info(
        f"{ds.task_name}/{bank.electrode_id}: {model_name} [{mode}] seed={seed} n_train={n_train} "
        f"val_auc={val_auc:.4f} test_auc={test_auc:.4f}"
    )
    return DecoderRun(module, record, val_auc)


def decoder_jobs(cfg: DecodeConfig, has_encoder: bool) -> List[Tuple[str, str]]:
    """(model, mode) pairs evaluated for each electrode and seed."""
    jobs = [(kind, "baseline") for kind in cfg.kinds]
    encoders = (["pretrained"] if has_encoder else []) + (["random"] if cfg.include_random else [])
    jobs += [(name, mode) for name in encoders for mode in cfg.modes]
    return jobs


# ----------------- Selection and sweeps -----------------
def records_frame(records: Iterable[EvalRecord]) -> pd.DataFrame:
    columns = ["task", "electrode", "model", "mode", "seed", "n_train", "auc"]
    rows = [{c: getattr(r, c) for c in columns} for r in records]
    frame = pd.DataFrame(rows, columns=columns)
    return frame.sort_values(["task", "electrode", "model", "mode", "seed", "n_train"], kind="stable").reset_index(drop=True)


def select_top_electrodes(reports, task: str, k: int = 10, model: str = "lin_time_5s") -> List[str]:
    """
    The ``k`` electrodes with the highest ``model`` AUC on ``task`` (mean over
    seeds); ties go to the lexicographically smaller electrode id.
    """
    frame = reports if isinstance(reports, pd.DataFrame) else records_frame(reports)
    chosen = frame[(frame["task"] == task) & (frame["model"] == model)]
    per_electrode = chosen.groupby("electrode")["auc"].mean()
    if len(per_electrode) < k:
        raise ElectrodeSelectionError(f"{len(per_electrode)} electrodes evaluated with {model}, {k} requested")
    ranked = sorted(per_electrode.items(), key=lambda item: (-item[1], item[0]))
    return [electrode for electrode, _ in ranked[:k]]


def efficiency_sweep(
    bank: ExampleBank,
    models: Sequence[Tuple[str, str]],
    sizes: Sequence[int],
    seeds: Sequence[int],
    cfg: DecodeConfig,
    encoder: Optional[SpectrogramEncoder] = None,
    encoder_cfg: Optional[EncoderConfig] = None,
    method: str = "stft",
) -> pd.DataFrame:
    """
    Test AUC against training-set size: for every size and seed the training
    split is subsampled (val/test fixed) and each (model, mode) retrained.

    Returns:
        pd.DataFrame: size, model, mode, auc_mean, auc_sd (ddof=1), n_seeds.
    """
    rows = []
    for size in sizes:
        for model_name, mode in models:
            aucs = []
            for seed in seeds:
                sub = bank.subset(bank.ds.train_subset_mask(size, seed))
                run = train_decoder(sub, model_name, mode, cfg, seed, encoder, encoder_cfg, method)
                aucs.append(run.record.auc)
            aucs = np.asarray(aucs)
            rows.append({
                "size": int(size), "model": model_name, "mode": mode, "auc_mean": float(aucs.mean()),
                "auc_sd": float(aucs.std(ddof=1)) if aucs.size > 1 else float("nan"), "n_seeds": int(aucs.size),
            })
    return pd.DataFrame(rows, columns=["size", "model", "mode", "auc_mean", "auc_sd", "n_seeds"])


def layerwise_probe(
    bank: ExampleBank,
    encoder: SpectrogramEncoder,
    cfg: DecodeConfig,
    seed: int = 0,
    method: str = "stft",
) -> pd.DataFrame:
    """Frozen-feature decoding from every encoder layer 1..N."""
    rows = []
    for layer in range(1, encoder.n_layers + 1):
        layer_cfg = replace(cfg, layer=layer)
        run = train_decoder(bank, "pretrained", "frozen", layer_cfg, seed, encoder, method=method)
        rows.append({"electrode": bank.electrode_id, "layer": layer, "seed": int(seed),
                     "val_auc": run.val_auc, "auc": run.record.auc})
    return pd.DataFrame(rows, columns=["electrode", "layer", "seed", "val_auc", "auc"])
