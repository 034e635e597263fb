"""
Task-agnostic embedding analysis: one time-averaged embedding per 5 s
segment, PCA explained-variance curves and the intrinsic dimension they
imply.
"""
from typing import Dict, Iterable, List, Optional

import numpy as np
import pandas as pd
import torch
from sklearn.decomposition import PCA

from seeg_pretrain.entity.config_entity import SignalConfig, StftConfig, SuperletConfig
from seeg_pretrain.entity.data_entity import EmbeddingCloud, IdReportEntry, Recording
from seeg_pretrain.exception import DegenerateCloudError, ParameterError
from seeg_pretrain.logger import logging
from seeg_pretrain.modeling.encoder import SpectrogramEncoder
from seeg_pretrain.processing.signal_processing import (
    fit_zscore_stats,
    preprocess_recording,
    segment_recording,
    zscore_matrix,
)
from seeg_pretrain.processing.time_frequency import compute_spectrogram_stack

ID_TOLERANCE = 1e-12


@torch.no_grad()
def embed_segments(model: SpectrogramEncoder, spectrograms: np.ndarray, layer: Optional[int] = None,
                   batch_size: int = 64) -> np.ndarray:
    """B x n x m z-scored spectrograms -> B x d time-averaged embeddings."""
    model.eval()
    y = torch.as_tensor(spectrograms, dtype=model.input_projection.weight.dtype)
    out = [model.encode(y[i:i + batch_size], upto_layer=layer).mean(dim=-2) for i in range(0, len(y), batch_size)]
    return torch.cat(out).double().numpy()


def embed_corpus(
    rec: Recording,
    model: SpectrogramEncoder,
    signal_cfg: SignalConfig = SignalConfig(),
    method: str = "stft",
    stft_cfg: StftConfig = StftConfig(),
    superlet_cfg: SuperletConfig = SuperletConfig(),
    preprocess: bool = True,
    layer: Optional[int] = None,
) -> Dict[str, EmbeddingCloud]:
    """
    Per electrode: preprocess, cut 5 s segments, transform, z-score each
    bin, encode and average over time.
    """
    if preprocess:
        rec = preprocess_recording(rec, signal_cfg)
    clouds = {}
    for eid in rec.electrode_ids:
        segments = segment_recording(rec.traces[eid], signal_cfg.window_s, signal_cfg.hop_s)
        if len(segments) < 2:
            raise ParameterError(f"electrode {eid} yields {len(segments)} segments; at least 2 are needed")
        samples = np.stack([s.samples for s in segments])
        values = compute_spectrogram_stack(samples, rec.sample_rate_hz, method, stft_cfg, superlet_cfg)
        if signal_cfg.zscore_scope == "session":
            stats = fit_zscore_stats(list(values), signal_cfg.zscore_eps)
            values = (values - stats.mean[None, :, None]) / np.maximum(stats.std, stats.epsilon)[None, :, None]
        else:
            values = zscore_matrix(values, signal_cfg.zscore_eps)
        clouds[eid] = EmbeddingCloud(embed_segments(model, values, layer), eid, rec.session_id)
    logging.info(f"Embedded {len(clouds)} electrodes of session {rec.session_id}")
    return clouds


def pool_clouds(sessions: Iterable[Dict[str, EmbeddingCloud]]) -> Dict[str, EmbeddingCloud]:
    """Stack every session's vectors for each electrode into one cloud."""
    stacked: Dict[str, List[np.ndarray]] = {}
    for clouds in sessions:
        for eid, cloud in clouds.items():
            stacked.setdefault(eid, []).append(cloud.vectors)
    return {eid: EmbeddingCloud(np.concatenate(v), eid, "pooled") for eid, v in sorted(stacked.items())}


def pca_explained_variance(cloud: EmbeddingCloud, n_components: int = 200) -> np.ndarray:
    """
    Explained-variance ratios of the centered cloud for
    min(n_components, d, s - 1) components, normalized by total variance.
    """
    x = cloud.vectors
    centered = x - x.mean(axis=0)
    if not np.sum(centered ** 2) > 0:
        raise DegenerateCloudError(f"embedding cloud of {cloud.electrode_id} has zero variance")
    count = min(n_components, x.shape[1], x.shape[0] - 1)
    pca = PCA(n_components=count, svd_solver="full")
    pca.fit(x)
    return np.asarray(pca.explained_variance_ratio_, dtype=np.float64)


def intrinsic_dimension(ratios, beta: float = 0.95) -> int:
    """
    Smallest d whose cumulative ratio strictly exceeds ``beta``. Sums that
    land on ``beta`` within 1e-12 do not count. When the curve never exceeds
    ``beta`` the component count is returned and a warning logged.
    """
    ratios = np.asarray(ratios, dtype=np.float64)
    if ratios.size == 0 or np.any(ratios < 0):
        raise ParameterError("explained-variance ratios must be non-negative and nonempty")
    exceeded = np.flatnonzero(np.cumsum(ratios) - beta > ID_TOLERANCE)
    if exceeded.size == 0:
        logging.warning(f"cumulative explained variance never exceeds {beta}; ID truncated at {ratios.size}")
        return int(ratios.size)
    return int(exceeded[0] + 1)


def id_report(clouds: Dict[str, EmbeddingCloud], n_components: int = 200, beta: float = 0.95) -> List[IdReportEntry]:
    entries = []
    for eid in sorted(clouds):
        curve = pca_explained_variance(clouds[eid], n_components)
        entries.append(IdReportEntry(eid, intrinsic_dimension(curve, beta), clouds[eid].n_segments, curve))
    return entries


def id_report_frame(entries: Iterable[IdReportEntry]) -> pd.DataFrame:
    rows = [{"electrode": e.electrode_id, "intrinsic_dim": e.intrinsic_dim, "n_segments": e.n_segments} for e in entries]
    return pd.DataFrame(rows, columns=["electrode", "intrinsic_dim", "n_segments"])


def curves_frame(entries: Iterable[IdReportEntry]) -> pd.DataFrame:
    """One row per (electrode, component) with the ratio and its running sum."""
    rows = []
    for e in entries:
        for i, (ratio, total) in enumerate(zip(e.curve, np.cumsum(e.curve)), start=1):
            rows.append({"electrode": e.electrode_id, "component": i, "ratio": float(ratio), "cumulative": float(total)})
    return pd.DataFrame(rows, columns=["electrode", "component", "ratio", "cumulative"])


def compare_intrinsic_dimension(
    pretrained: Iterable[IdReportEntry], random_init: Iterable[IdReportEntry]
) -> pd.DataFrame:
    """Side-by-side ID of randomly initialised and pretrained embeddings per electrode."""
    left = id_report_frame(random_init).rename(columns={"intrinsic_dim": "id_random"})
    right = id_report_frame(pretrained).rename(columns={"intrinsic_dim": "id_pretrained"})
    merged = left[["electrode", "id_random"]].merge(right[["electrode", "id_pretrained"]], on="electrode")
    return merged.sort_values("electrode").reset_index(drop=True)
