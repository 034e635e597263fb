import os
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from seeg_pretrain.constants import *  # Import all constants
from seeg_pretrain.exception import ParameterError


@dataclass(frozen=True)
class TrainingPipelineConfig:
    """
    Holds global pipeline configuration such as pipeline name and
    artifact directory where all outputs will be stored.
    """
    pipeline_name: str = PIPELINE_NAME
    artifact_dir: str = ARTIFACT_DIR


training_pipeline_config: TrainingPipelineConfig = TrainingPipelineConfig()


# ----------------- Signal -----------------
@dataclass(frozen=True)
class SignalConfig:
    """Preprocessing chain: high-pass, line-noise notches, re-referencing, segmentation, z-scoring."""
    sample_rate_hz: float = SIGNAL_SAMPLE_RATE_HZ
    highpass_hz: float = SIGNAL_HIGHPASS_HZ
    highpass_order: int = SIGNAL_HIGHPASS_ORDER
    line_hz: float = SIGNAL_LINE_HZ
    notch_bandwidth_hz: float = SIGNAL_NOTCH_BANDWIDTH_HZ
    rereference: bool = True
    window_s: float = SIGNAL_WINDOW_S
    hop_s: float = SIGNAL_HOP_S
    zscore_eps: float = SIGNAL_ZSCORE_EPS
    zscore_scope: str = "instance"

    def __post_init__(self):
        if self.zscore_scope not in ("instance", "session"):
            raise ParameterError(f"zscore_scope must be 'instance' or 'session', got {self.zscore_scope!r}")


# ----------------- Time-frequency -----------------
@dataclass(frozen=True)
class StftConfig:
    window_samples: int = STFT_WINDOW_SAMPLES
    overlap_samples: int = STFT_OVERLAP_SAMPLES
    n_bins: int = STFT_N_BINS
    max_freq_hz: float = STFT_MAX_FREQ_HZ
    trim_frames: int = TRIM_FRAMES

    def __post_init__(self):
        if not 0 <= self.overlap_samples < self.window_samples:
            raise ParameterError("STFT overlap must satisfy 0 <= overlap < window")
        if self.n_bins < 1:
            raise ParameterError("STFT needs at least one frequency bin")
        if self.trim_frames < 0:
            raise ParameterError("trim_frames must be non-negative")

    @property
    def hop_samples(self) -> int:
        return self.window_samples - self.overlap_samples


@dataclass(frozen=True)
class SuperletConfig:
    """
    Multiplicative adaptive superlet parameters. ``foi_hz`` defaults to
    ``n_freqs`` values evenly spaced between ``f_min_hz`` and ``f_max_hz``.
    """
    c1: float = SUPERLET_C1
    o_min: int = SUPERLET_O_MIN
    o_max: int = SUPERLET_O_MAX
    foi_hz: Tuple[float, ...] = tuple(
        float(f) for f in np.linspace(SUPERLET_F_MIN_HZ, SUPERLET_F_MAX_HZ, SUPERLET_N_FREQS)
    )
    decimation: int = SUPERLET_DECIMATION
    trim_frames: int = TRIM_FRAMES
    support_sigmas: float = SUPERLET_SUPPORT_SIGMAS

    def __post_init__(self):
        if not 1 <= self.o_min <= self.o_max:
            raise ParameterError("superlet orders must satisfy 1 <= o_min <= o_max")
        foi = np.asarray(self.foi_hz, dtype=float)
        if foi.ndim != 1 or foi.size == 0 or np.any(foi <= 0) or np.any(np.diff(foi) <= 0):
            raise ParameterError("foi_hz must be strictly increasing and positive")
        if self.c1 <= 0:
            raise ParameterError("c1 must be positive")
        if self.decimation < 1 or self.trim_frames < 0:
            raise ParameterError("decimation must be >= 1 and trim_frames >= 0")
        object.__setattr__(self, "foi_hz", tuple(float(f) for f in foi))

    @classmethod
    def evenly_spaced(cls, f_min_hz: float, f_max_hz: float, n_freqs: int, **kwargs) -> "SuperletConfig":
        foi = tuple(float(f) for f in np.linspace(f_min_hz, f_max_hz, n_freqs))
        return cls(foi_hz=foi, **kwargs)

    @property
    def f_min_hz(self) -> float:
        return self.foi_hz[0]

    @property
    def f_max_hz(self) -> float:
        return self.foi_hz[-1]


# ----------------- Masking -----------------
@dataclass(frozen=True)
class MaskParams:
    p_mask: float = MASK_P_MASK
    p_id: float = MASK_P_ID
    p_replace: float = MASK_P_REPLACE
    time_step_range: Tuple[int, int] = MASK_TIME_STEP_RANGE
    freq_step_range: Tuple[int, int] = MASK_FREQ_STEP_RANGE
    replace_retries: int = MASK_REPLACE_RETRIES

    def __post_init__(self):
        for name in ("p_mask", "p_id", "p_replace"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ParameterError(f"{name} must lie in [0, 1], got {value}")
        if self.p_id + self.p_replace > 1.0:
            raise ParameterError("p_id + p_replace must not exceed 1")
        for name in ("time_step_range", "freq_step_range"):
            lo, hi = getattr(self, name)
            if not 1 <= lo <= hi:
                raise ParameterError(f"{name} must be a nonempty range of positive widths")


# ----------------- Encoder -----------------
@dataclass(frozen=True)
class EncoderConfig:
    """Transformer encoder hyperparameters; ``d_ff = 0`` means 4 * d_hidden."""
    n_layers: int = 6
    n_heads: int = 12
    d_hidden: int = 768
    d_ff: int = 0
    dropout: float = 0.1
    n_bins: int = 40
    max_frames: int = 512
    gamma: float = 1.0
    alpha: float = 1.0

    def __post_init__(self):
        if self.n_layers < 1 or self.n_heads < 1 or self.d_hidden < 1:
            raise ParameterError("n_layers, n_heads and d_hidden must be positive")
        if self.d_hidden % self.n_heads != 0:
            raise ParameterError(f"n_heads={self.n_heads} must divide d_hidden={self.d_hidden}")
        if self.gamma < 0 or self.alpha < 0:
            raise ParameterError("gamma and alpha must be non-negative")
        if not 0.0 <= self.dropout < 1.0:
            raise ParameterError("dropout must lie in [0, 1)")

    @property
    def d_feedforward(self) -> int:
        return self.d_ff if self.d_ff > 0 else 4 * self.d_hidden


# ----------------- Pretraining -----------------
@dataclass(frozen=True)
class PretrainConfig:
    batch_size: int = 256
    n_steps: int = 500_000
    lr: float = 1e-4
    betas: Tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-6
    weight_decay: float = 0.0
    max_trust: float = 10.0
    val_every: int = 1000
    val_fraction: float = 0.1
    segment_frames: int = 187
    mask_scheme: str = "static"
    seed: int = 0
    exclude_electrodes: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.mask_scheme not in ("static", "adaptive"):
            raise ParameterError(f"unknown mask scheme {self.mask_scheme!r}")
        if self.batch_size < 1 or self.n_steps < 0 or self.val_every < 1:
            raise ParameterError("batch_size and val_every must be positive, n_steps non-negative")
        if not 0.0 < self.val_fraction < 1.0:
            raise ParameterError("val_fraction must lie in (0, 1)")


# ----------------- Decoding -----------------
@dataclass(frozen=True)
class DecodeConfig:
    task: str = "onset"
    k: int = 5
    layer: int = 0
    n_updates: int = 1000
    val_every: int = 100
    batch_size: int = 64
    head_lr: float = 1e-3
    encoder_lr: float = 1e-4
    weight_decay: float = 0.01
    top_k: int = 10
    context_s: float = 5.0
    guard_s: float = 1.0
    kinds: Tuple[str, ...] = BASELINE_KINDS
    modes: Tuple[str, ...] = ("frozen", "finetune")
    include_random: bool = True
    seeds: Tuple[int, ...] = (0, 1, 2)
    sizes: Tuple[int, ...] = (150, 1000)

    def __post_init__(self):
        unknown = set(self.kinds) - set(BASELINE_KINDS)
        if unknown:
            raise ParameterError(f"unknown baseline kinds {sorted(unknown)}")
        if set(self.modes) - {"frozen", "finetune"}:
            raise ParameterError("decode modes must be 'frozen' and/or 'finetune'")
        if self.task not in ("onset", "intensity"):
            raise ParameterError(f"unknown task {self.task!r}")
        if self.n_updates < 0 or self.val_every < 1 or self.batch_size < 1:
            raise ParameterError("n_updates must be >= 0, val_every and batch_size >= 1")


# ----------------- Synthetic data -----------------
@dataclass(frozen=True)
class SynthConfig:
    n_shafts: int = 3
    electrodes_per_shaft: int = 6
    duration_s: float = 400.0
    sample_rate_hz: float = SIGNAL_SAMPLE_RATE_HZ
    seed: int = 0
    spectral_slope: float = -1.0
    noise_std: float = 10.0
    burst_rate_hz: float = 0.5
    burst_amp: float = 1.0
    line_noise_amp: float = 2.0
    responsive_fraction: float = 0.4
    response_snr: float = 2.0
    response_freq_hz: float = 90.0
    response_duration_s: float = 0.3
    min_event_separation_s: float = 2.5
    mean_extra_separation_s: float = 1.5
    intensity_sd: float = 0.3

    def __post_init__(self):
        if self.n_shafts < 1 or self.electrodes_per_shaft < 1:
            raise ParameterError("n_shafts and electrodes_per_shaft must be positive")
        if self.duration_s <= 0 or self.sample_rate_hz <= 0:
            raise ParameterError("duration_s and sample_rate_hz must be positive")
        if not 0.0 <= self.responsive_fraction <= 1.0:
            raise ParameterError("responsive_fraction must lie in [0, 1]")
        if self.min_event_separation_s <= 0 or self.response_snr < 0:
            raise ParameterError("min_event_separation_s must be positive, response_snr non-negative")


# ----------------- Analysis -----------------
@dataclass(frozen=True)
class AnalysisConfig:
    """PCA settings for the intrinsic-dimension report; ``layer = 0`` reads the last encoder layer."""
    n_components: int = 200
    beta: float = 0.95
    layer: int = 0
    pooled: bool = False
    compare_random: bool = True


# ----------------- Stage configs -----------------
@dataclass(frozen=True)
class DataIngestionConfig:
    """Where the ingestion stage writes the recording, layout, events and manifest."""
    data_ingestion_dir: str = os.path.join(training_pipeline_config.artifact_dir, "data_ingestion")

    @property
    def recording_file_path(self) -> str:
        return os.path.join(self.data_ingestion_dir, RECORDING_FILE_NAME)

    @property
    def layout_file_path(self) -> str:
        return os.path.join(self.data_ingestion_dir, LAYOUT_FILE_NAME)

    @property
    def events_file_path(self) -> str:
        return os.path.join(self.data_ingestion_dir, EVENTS_FILE_NAME)

    @property
    def manifest_file_path(self) -> str:
        return os.path.join(self.data_ingestion_dir, MANIFEST_FILE_NAME)


@dataclass(frozen=True)
class DataTransformationConfig:
    spectrogram_dir: str = os.path.join(training_pipeline_config.artifact_dir, "data_transformation")
    method: str = "stft"
    preprocess: bool = True

    def __post_init__(self):
        if self.method not in ("stft", "superlet"):
            raise ParameterError(f"unknown transform method {self.method!r}")


@dataclass(frozen=True)
class ModelTrainerConfig:
    model_trainer_dir: str = os.path.join(training_pipeline_config.artifact_dir, "model_trainer")

    @property
    def checkpoint_file_path(self) -> str:
        return os.path.join(self.model_trainer_dir, CHECKPOINT_FILE_NAME)

    @property
    def diagnostic_checkpoint_file_path(self) -> str:
        return os.path.join(self.model_trainer_dir, DIAGNOSTIC_CHECKPOINT_FILE_NAME)

    @property
    def training_curve_file_path(self) -> str:
        return os.path.join(self.model_trainer_dir, TRAINING_CURVE_FILE_NAME)


@dataclass(frozen=True)
class ModelEvaluationConfig:
    model_evaluation_dir: str = os.path.join(training_pipeline_config.artifact_dir, "model_evaluation")
    electrodes: Optional[Tuple[str, ...]] = None

    @property
    def report_file_path(self) -> str:
        return os.path.join(self.model_evaluation_dir, EVAL_REPORT_FILE_NAME)

    @property
    def efficiency_file_path(self) -> str:
        return os.path.join(self.model_evaluation_dir, EFFICIENCY_FILE_NAME)

    @property
    def layerwise_file_path(self) -> str:
        return os.path.join(self.model_evaluation_dir, LAYERWISE_FILE_NAME)


@dataclass(frozen=True)
class EmbeddingAnalysisConfig:
    analysis_dir: str = os.path.join(training_pipeline_config.artifact_dir, "embedding_analysis")

    @property
    def id_report_file_path(self) -> str:
        return os.path.join(self.analysis_dir, ID_REPORT_FILE_NAME)

    @property
    def curves_file_path(self) -> str:
        return os.path.join(self.analysis_dir, EXPLAINED_VARIANCE_FILE_NAME)

    @property
    def comparison_file_path(self) -> str:
        return os.path.join(self.analysis_dir, ID_COMPARISON_FILE_NAME)
