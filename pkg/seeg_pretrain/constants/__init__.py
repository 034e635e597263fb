import os

PIPELINE_NAME: str = "seeg_pretrain"
ARTIFACT_DIR: str = "artifacts"

PROJECT_ROOT: str = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
SCHEMA_FILE_PATH: str = os.path.join(PROJECT_ROOT, "config", "schema.yaml")
MODEL_PROFILE_FILE_PATH: str = os.path.join(PROJECT_ROOT, "config", "model.yaml")

THREADS_ENV_KEY: str = "FF_THREADS"
LOG_DIR_ENV_KEY: str = "SEEG_LOG_DIR"

"""
Binary formats
"""
FORMAT_VERSION: int = 1
RECORDING_MAGIC: bytes = b"FFRW"
SPECTROGRAM_MAGIC: bytes = b"FFSG"
CHECKPOINT_MAGIC: bytes = b"FFCK"
DTYPE_CODE_F32: int = 0
DTYPE_CODE_F64: int = 1

"""
Artifact file names
"""
RECORDING_FILE_NAME: str = "recording.ffrw"
LAYOUT_FILE_NAME: str = "layout.txt"
EVENTS_FILE_NAME: str = "events.jsonl"
MANIFEST_FILE_NAME: str = "manifest.csv"
SPECTROGRAM_FILE_SUFFIX: str = ".ffsg"
CHECKPOINT_FILE_NAME: str = "checkpoint.ffck"
DIAGNOSTIC_CHECKPOINT_FILE_NAME: str = "diverged.ffck"
TRAINING_CURVE_FILE_NAME: str = "training_curve.csv"
EVAL_REPORT_FILE_NAME: str = "eval_report.csv"
EFFICIENCY_FILE_NAME: str = "efficiency.csv"
LAYERWISE_FILE_NAME: str = "layerwise.csv"
ID_REPORT_FILE_NAME: str = "id_report.csv"
EXPLAINED_VARIANCE_FILE_NAME: str = "explained_variance.csv"
ID_COMPARISON_FILE_NAME: str = "id_comparison.csv"
SUMMARY_LONG_FILE_NAME: str = "summary_long.csv"
SUMMARY_TABLE_FILE_NAME: str = "summary_table.csv"
EFFICIENCY_CURVE_FILE_NAME: str = "efficiency_curve.csv"
RESOLVED_CONFIG_FILE_NAME: str = "config.resolved"

"""
Signal related constants start with SIGNAL VAR NAME
"""
SIGNAL_SAMPLE_RATE_HZ: float = 2048.0
SIGNAL_HIGHPASS_HZ: float = 0.1
SIGNAL_HIGHPASS_ORDER: int = 4
SIGNAL_LINE_HZ: float = 60.0
SIGNAL_NOTCH_BANDWIDTH_HZ: float = 1.0
SIGNAL_WINDOW_S: float = 5.0
SIGNAL_HOP_S: float = 5.0
SIGNAL_ZSCORE_EPS: float = 1e-8

"""
Time-frequency related constants
"""
STFT_WINDOW_SAMPLES: int = 400
STFT_OVERLAP_SAMPLES: int = 350
STFT_N_BINS: int = 40
STFT_MAX_FREQ_HZ: float = 200.0
TRIM_FRAMES: int = 5
SUPERLET_C1: float = 1.0
SUPERLET_O_MIN: int = 3
SUPERLET_O_MAX: int = 30
SUPERLET_F_MIN_HZ: float = 0.1
SUPERLET_F_MAX_HZ: float = 200.0
SUPERLET_N_FREQS: int = 40
SUPERLET_DECIMATION: int = 50
SUPERLET_SUPPORT_SIGMAS: float = 5.0

"""
Masking related constants start with MASK VAR NAME
"""
MASK_P_MASK: float = 0.05
MASK_P_ID: float = 0.1
MASK_P_REPLACE: float = 0.1
MASK_TIME_STEP_RANGE: tuple = (1, 5)
MASK_FREQ_STEP_RANGE: tuple = (1, 2)
MASK_REPLACE_RETRIES: int = 100

"""
Decoding related constants
"""
BASELINE_KINDS: tuple = ("lin_time_5s", "lin_time_250ms", "deep_5ff", "lin_stft", "lin_superlet")
DEEP_BASELINE_HIDDEN: tuple = (1024, 512, 256, 128)
SPLIT_NAMES: tuple = ("train", "val", "test")
