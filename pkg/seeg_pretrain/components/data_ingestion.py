import sys
from typing import Optional

from seeg_pretrain.configuration.run_config import RunConfig
from seeg_pretrain.data_access.recording_store import write_events, write_layout, write_recording
from seeg_pretrain.data_access.table_store import CSVTableSaver, ITableSaver, manifest_frame
from seeg_pretrain.entity.artifact_entity import DataIngestionArtifact
from seeg_pretrain.entity.config_entity import DataIngestionConfig
from seeg_pretrain.exception import SeegPretrainException
from seeg_pretrain.logger import logging
from seeg_pretrain.processing.synthetic import generate_recording, make_task_dataset, responsive_set


# =========================================
# Data Ingestion
# Generates a seeded synthetic session and writes the recording, probe
# layout, stimulus events and the labeled task manifest.
# =========================================
class DataIngestion:
    def __init__(
        self,
        run_config: RunConfig,
        config: Optional[DataIngestionConfig] = None,
        saver: Optional[ITableSaver] = None,
    ) -> None:
        try:
            self.run_config = run_config
            self.config = config or DataIngestionConfig()
            self.saver: ITableSaver = saver or CSVTableSaver()
        except Exception as e:
            logging.error(f"Error initializing DataIngestion: {e}")
            raise SeegPretrainException(e, sys)

    def initiate_data_ingestion(self) -> DataIngestionArtifact:
        try:
            logging.info(">>>>>> stage data ingestion started <<<<<<")
            synth_cfg = self.run_config.synth_config()
            decode_cfg = self.run_config.decode_config()
            rec, track = generate_recording(synth_cfg)

            write_recording(self.config.recording_file_path, rec)
            write_layout(self.config.layout_file_path, rec.layout)
            write_events(self.config.events_file_path, track)

            ds = make_task_dataset(rec, track, decode_cfg.context_s, decode_cfg.guard_s,
                                   seed=synth_cfg.seed, task=decode_cfg.task)
            self.saver.save(manifest_frame(ds, rec.electrode_ids), self.config.manifest_file_path)

            artifact = DataIngestionArtifact(
                recording_file_path=self.config.recording_file_path,
                layout_file_path=self.config.layout_file_path,
                events_file_path=self.config.events_file_path,
                manifest_file_path=self.config.manifest_file_path,
                responsive_electrodes=tuple(responsive_set(synth_cfg)),
                n_examples=len(ds),
            )
            logging.info(f"Data ingestion artifact created: {artifact}")
            return artifact
        except Exception as e:
            logging.error(f"Data ingestion failed: {e}")
            raise SeegPretrainException(e, sys)
