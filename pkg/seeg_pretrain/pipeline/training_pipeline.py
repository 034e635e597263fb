import os
import sys
from typing import List, Optional, Tuple

from seeg_pretrain.components.data_ingestion import DataIngestion
from seeg_pretrain.components.data_transformation import DataTransformation
from seeg_pretrain.components.embedding_analysis import EmbeddingAnalysis
from seeg_pretrain.components.model_evaluation import ModelEvaluation, load_task
from seeg_pretrain.components.model_trainer import ModelTrainer, load_encoder_checkpoint
from seeg_pretrain.components.run_report import RunReport
from seeg_pretrain.configuration.run_config import RunConfig
from seeg_pretrain.constants import (
    EVENTS_FILE_NAME,
    LAYOUT_FILE_NAME,
    MANIFEST_FILE_NAME,
    RECORDING_FILE_NAME,
    RESOLVED_CONFIG_FILE_NAME,
)
from seeg_pretrain.data_access.recording_store import load_session
from seeg_pretrain.entity.artifact_entity import (
    DataIngestionArtifact,
    DataTransformationArtifact,
    EmbeddingAnalysisArtifact,
    ModelEvaluationArtifact,
    ModelTrainerArtifact,
    ReportArtifact,
)
from seeg_pretrain.entity.config_entity import (
    DataIngestionConfig,
    DataTransformationConfig,
    EmbeddingAnalysisConfig,
    ModelEvaluationConfig,
    ModelTrainerConfig,
)
from seeg_pretrain.exception import ConfigError, SeegPretrainException
from seeg_pretrain.logger import logging
from seeg_pretrain.modeling.encoder import SpectrogramEncoder
from seeg_pretrain.utils.main_utils import ensure_output_dir, write_text_file

# Keys a decoding or analysis run takes from the checkpoint it loads, so the
# encoder sees spectrograms computed the way it was trained on.
CHECKPOINT_SECTIONS = ("signal", "stft", "superlet", "model")
CHECKPOINT_KEYS = ("run.method", "run.preprocess")


def resolve_session_paths(path: str, layout: str = "", events: str = "", manifest: str = "") -> Tuple[str, str, str, str]:
    """A synth output directory stands for its recording, layout, events and manifest files."""
    if os.path.isdir(path):
        layout = layout or os.path.join(path, LAYOUT_FILE_NAME)
        events = events or os.path.join(path, EVENTS_FILE_NAME)
        manifest = manifest or os.path.join(path, MANIFEST_FILE_NAME)
        path = os.path.join(path, RECORDING_FILE_NAME)
    if not os.path.isfile(path):
        raise ConfigError(f"recording {path} does not exist")
    return path, layout, events, manifest


class TrainPipeline:
    """
    One ``start_*`` per subcommand. Every command writes into ``paths.out``
    and echoes the resolved configuration there first.
    """

    def __init__(self, run_config: RunConfig, force: bool = False) -> None:
        try:
            if not run_config["paths.out"]:
                raise ConfigError("an output directory (--out) is required")
            self.run_config = run_config
            self.out_dir = run_config["paths.out"]
            self.force = force
        except Exception as e:
            raise SeegPretrainException(e, sys)

    def _prepare_output(self) -> None:
        ensure_output_dir(self.out_dir, self.force)
        write_text_file(os.path.join(self.out_dir, RESOLVED_CONFIG_FILE_NAME), self.run_config.to_text())

    def _recording_paths(self) -> List[str]:
        paths = self.run_config["paths.recording"]
        if not paths:
            raise ConfigError("an input recording (--in) is required")
        return list(paths)

    def _session_paths(self) -> Tuple[str, str, str, str]:
        paths = self._recording_paths()
        if len(paths) != 1:
            raise ConfigError(f"this command takes one recording, got {len(paths)}")
        return resolve_session_paths(
            paths[0], self.run_config["paths.layout"], self.run_config["paths.events"], self.run_config["paths.manifest"]
        )

    def _load_encoder(self, required: bool) -> Optional[SpectrogramEncoder]:
        path = self.run_config["paths.checkpoint"]
        if not path:
            if required:
                raise ConfigError("a checkpoint (--checkpoint) is required for this command")
            return None
        self.run_config.require_paths("paths.checkpoint")
        trained_config, encoder, meta = load_encoder_checkpoint(path)
        inherited = {
            key: trained_config[key]
            for key in trained_config.keys()
            if key.split(".")[0] in CHECKPOINT_SECTIONS or key in CHECKPOINT_KEYS
        }
        self.run_config = self.run_config.updated(inherited)
        logging.info(f"Loaded encoder from {path} (best step {meta.get('best_step')})")
        return encoder

    # ------------------- Subcommands -------------------
    def start_synth(self) -> DataIngestionArtifact:
        try:
            self._prepare_output()
            return DataIngestion(self.run_config, DataIngestionConfig(self.out_dir)).initiate_data_ingestion()
        except Exception as e:
            raise SeegPretrainException(e, sys)

    def start_transform(self) -> DataTransformationArtifact:
        try:
            recording, layout, _, _ = self._session_paths()
            self._prepare_output()
            config = DataTransformationConfig(self.out_dir, self.run_config["run.method"], self.run_config["run.preprocess"])
            return DataTransformation(self.run_config, config).initiate_data_transformation(recording, layout)
        except Exception as e:
            raise SeegPretrainException(e, sys)

    def start_pretrain(self) -> ModelTrainerArtifact:
        try:
            self.run_config.require_paths("paths.data")
            self._prepare_output()
            trainer = ModelTrainer(self.run_config, ModelTrainerConfig(self.out_dir))
            return trainer.initiate_model_trainer(self.run_config["paths.data"])
        except Exception as e:
            raise SeegPretrainException(e, sys)

    def _evaluation(self, required_encoder: bool):
        encoder = self._load_encoder(required_encoder)
        recording, layout, events, manifest = self._session_paths()
        self._prepare_output()
        rec, ds = load_task(self.run_config, recording, layout, events, manifest)
        evaluation = ModelEvaluation(self.run_config, ModelEvaluationConfig(self.out_dir))
        return evaluation, rec, ds, encoder

    def start_finetune(self) -> ModelEvaluationArtifact:
        try:
            evaluation, rec, ds, encoder = self._evaluation(required_encoder=True)
            return evaluation.initiate_finetune(rec, ds, encoder)
        except Exception as e:
            raise SeegPretrainException(e, sys)

    def start_evaluate(self) -> ModelEvaluationArtifact:
        try:
            evaluation, rec, ds, encoder = self._evaluation(required_encoder=False)
            return evaluation.initiate_evaluation(rec, ds, encoder)
        except Exception as e:
            raise SeegPretrainException(e, sys)

    def start_sweep(self) -> ModelEvaluationArtifact:
        try:
            evaluation, rec, ds, encoder = self._evaluation(required_encoder=False)
            return evaluation.initiate_sweep(rec, ds, encoder)
        except Exception as e:
            raise SeegPretrainException(e, sys)

    def start_id(self) -> EmbeddingAnalysisArtifact:
        try:
            encoder = self._load_encoder(required=True)
            sessions = []
            for index, path in enumerate(self._recording_paths()):
                recording, layout, _, _ = resolve_session_paths(path, self.run_config["paths.layout"])
                sessions.append(load_session(recording, layout, session_id=f"session-{index}"))
            self._prepare_output()
            analysis = EmbeddingAnalysis(self.run_config, EmbeddingAnalysisConfig(self.out_dir))
            return analysis.initiate_embedding_analysis(sessions, encoder)
        except Exception as e:
            raise SeegPretrainException(e, sys)

    def start_report(self) -> ReportArtifact:
        try:
            run_dir = self._recording_paths()[0]
            self._prepare_output()
            return RunReport(self.out_dir).initiate_report(run_dir)
        except Exception as e:
            raise SeegPretrainException(e, sys)
