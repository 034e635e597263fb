import sys
from typing import Dict, Optional, Tuple

import torch

from seeg_pretrain.configuration.run_config import RunConfig
from seeg_pretrain.data_access.checkpoint_store import load_checkpoint, save_checkpoint
from seeg_pretrain.data_access.spectrogram_store import read_spectrogram_dir
from seeg_pretrain.data_access.table_store import CSVTableSaver, ITableSaver
from seeg_pretrain.entity.artifact_entity import ModelTrainerArtifact
from seeg_pretrain.entity.config_entity import ModelTrainerConfig
from seeg_pretrain.exception import FormatError, SeegPretrainException
from seeg_pretrain.logger import logging
from seeg_pretrain.modeling.encoder import SpectrogramEncoder
from seeg_pretrain.modeling.pretraining import build_corpus, pretrain

META_PREFIX = "training."


def save_encoder_checkpoint(file_path: str, run_config: RunConfig, model: SpectrogramEncoder,
                            meta: Optional[Dict[str, float]] = None) -> None:
    """Encoder weights plus scalar training metadata stored as ``training.*`` f64 tensors."""
    tensors = model.tensors()
    for key, value in (meta or {}).items():
        tensors[META_PREFIX + key] = torch.tensor([float(value)], dtype=torch.float64)
    save_checkpoint(file_path, run_config.to_text(), tensors)


def load_encoder_checkpoint(file_path: str) -> Tuple[RunConfig, SpectrogramEncoder, Dict[str, float]]:
    """Rebuild the encoder from the configuration echoed inside the checkpoint."""
    config_text, tensors = load_checkpoint(file_path)
    run_config = RunConfig.resolve(config_text, source=file_path)
    meta = {k[len(META_PREFIX):]: float(v.reshape(-1)[0]) for k, v in tensors.items() if k.startswith(META_PREFIX)}
    weights = {k: v for k, v in tensors.items() if not k.startswith(META_PREFIX)}
    try:
        model = SpectrogramEncoder.from_tensors(run_config.encoder_config(), weights)
    except RuntimeError as e:
        raise FormatError(f"{file_path}: weights do not match the stored model configuration ({e})") from e
    model.eval()
    return run_config, model, meta


class ModelTrainer:
    """Masked-spectrogram pretraining over a directory of per-electrode spectrograms."""

    def __init__(
        self,
        run_config: RunConfig,
        config: Optional[ModelTrainerConfig] = None,
        saver: Optional[ITableSaver] = None,
    ) -> None:
        try:
            self.run_config = run_config
            self.config = config or ModelTrainerConfig()
            self.saver: ITableSaver = saver or CSVTableSaver()
        except Exception as e:
            raise SeegPretrainException(e, sys)

    def _save_diverged(self, model: SpectrogramEncoder, step: int) -> None:
        path = self.config.diagnostic_checkpoint_file_path
        save_encoder_checkpoint(path, self.run_config, model, {"diverged_step": step})
        logging.error(f"Diverged weights from step {step} saved to {path}")

    def initiate_model_trainer(self, spectrogram_dir: str) -> ModelTrainerArtifact:
        try:
            logging.info(">>>>>> stage model trainer started <<<<<<")
            signal_cfg = self.run_config.signal_config()
            pretrain_cfg = self.run_config.pretrain_config()
            corpus = build_corpus(
                read_spectrogram_dir(spectrogram_dir),
                pretrain_cfg.segment_frames,
                signal_cfg.zscore_eps,
                signal_cfg.zscore_scope,
                pretrain_cfg.exclude_electrodes,
            )
            result = pretrain(
                corpus,
                self.run_config.encoder_config(),
                pretrain_cfg,
                self.run_config.mask_params(),
                on_divergence=self._save_diverged,
            )
            save_encoder_checkpoint(
                self.config.checkpoint_file_path,
                self.run_config,
                result.model,
                {"best_step": result.best_step, "best_val_total": result.best_val_total},
            )
            self.saver.save(result.curve, self.config.training_curve_file_path)

            artifact = ModelTrainerArtifact(
                checkpoint_file_path=self.config.checkpoint_file_path,
                training_curve_file_path=self.config.training_curve_file_path,
                best_step=result.best_step,
                best_val_total=result.best_val_total,
            )
            logging.info(f"Model trainer artifact created: {artifact}")
            return artifact
        except Exception as e:
            logging.error(f"Model training failed: {e}")
            raise SeegPretrainException(e, sys)
