import os
import sys
from typing import Optional

from seeg_pretrain.configuration.run_config import RunConfig
from seeg_pretrain.data_access.recording_store import load_session
from seeg_pretrain.data_access.spectrogram_store import spectrogram_file_name, write_spectrogram
from seeg_pretrain.entity.artifact_entity import DataTransformationArtifact
from seeg_pretrain.entity.config_entity import DataTransformationConfig
from seeg_pretrain.exception import SeegPretrainException
from seeg_pretrain.logger import logging
from seeg_pretrain.processing.signal_processing import preprocess_recording
from seeg_pretrain.processing.time_frequency import compute_spectrogram
from seeg_pretrain.utils.main_utils import run_jobs


class DataTransformation:
    """
    Turns a recording into one full-length, un-normalised spectrogram file
    per electrode. Windowing and z-scoring happen when the corpus is built.
    """

    def __init__(self, run_config: RunConfig, config: Optional[DataTransformationConfig] = None) -> None:
        try:
            self.run_config = run_config
            self.config = config or DataTransformationConfig()
        except Exception as e:
            raise SeegPretrainException(e, sys)

    def initiate_data_transformation(self, recording_path: str, layout_path: Optional[str] = None) -> DataTransformationArtifact:
        try:
            logging.info(">>>>>> stage data transformation started <<<<<<")
            rec = load_session(recording_path, layout_path)
            if self.config.preprocess:
                rec = preprocess_recording(rec, self.run_config.signal_config())
            stft_cfg = self.run_config.stft_config()
            superlet_cfg = self.run_config.superlet_config()
            method = self.config.method

            def job(eid: str):
                def run():
                    spec = compute_spectrogram(rec.traces[eid], method, stft_cfg, superlet_cfg, eid)
                    path = os.path.join(self.config.spectrogram_dir, spectrogram_file_name(eid))
                    write_spectrogram(path, spec)
                    return path
                return run

            paths = [path for _, path in run_jobs((eid, job(eid)) for eid in rec.electrode_ids)]
            artifact = DataTransformationArtifact(self.config.spectrogram_dir, tuple(paths), method)
            logging.info(f"{method} spectrograms for {len(paths)} electrodes written to {self.config.spectrogram_dir}")
            return artifact
        except Exception as e:
            logging.error(f"Data transformation failed: {e}")
            raise SeegPretrainException(e, sys)
