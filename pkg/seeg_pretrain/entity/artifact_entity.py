from dataclasses import dataclass
from typing import Optional, Tuple


@dataclass(frozen=True)
class DataIngestionArtifact:
    """
    Files written by the synth stage.

    Attributes:
        recording_file_path (str): FFRW recording.
        layout_file_path (str): probe layout, one shaft per line.
        events_file_path (str): stimulus events as JSON lines.
        manifest_file_path (str): labeled examples with their split.
        responsive_electrodes (tuple): electrodes that carry the evoked response.
    """
    recording_file_path: str
    layout_file_path: str
    events_file_path: str
    manifest_file_path: str
    responsive_electrodes: Tuple[str, ...]
    n_examples: int


@dataclass(frozen=True)
class DataTransformationArtifact:
    spectrogram_dir: str
    spectrogram_file_paths: Tuple[str, ...]
    method: str


@dataclass(frozen=True)
class ModelTrainerArtifact:
    checkpoint_file_path: str
    training_curve_file_path: str
    best_step: int
    best_val_total: float


@dataclass(frozen=True)
class ModelEvaluationArtifact:
    """Whichever evaluation tables the command produced; the others stay None."""
    electrodes: Tuple[str, ...]
    report_file_path: Optional[str] = None
    efficiency_file_path: Optional[str] = None
    layerwise_file_path: Optional[str] = None


@dataclass(frozen=True)
class EmbeddingAnalysisArtifact:
    id_report_file_path: str
    curves_file_path: str
    comparison_file_path: Optional[str] = None


@dataclass(frozen=True)
class ReportArtifact:
    summary_long_file_path: str
    summary_table_file_path: str
    efficiency_curve_file_path: Optional[str]
    partial: bool
