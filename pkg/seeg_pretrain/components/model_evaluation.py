import os
import sys
from dataclasses import replace
from typing import Dict, List, Optional, Sequence, Tuple

import pandas as pd

from seeg_pretrain.configuration.run_config import RunConfig
from seeg_pretrain.data_access.recording_store import load_session, read_events
from seeg_pretrain.data_access.table_store import (
    MANIFEST_COLUMNS,
    CSVTableSaver,
    ITableSaver,
    dataset_from_manifest,
    read_table,
)
from seeg_pretrain.entity.artifact_entity import ModelEvaluationArtifact
from seeg_pretrain.entity.config_entity import DecodeConfig, ModelEvaluationConfig
from seeg_pretrain.entity.data_entity import EvalRecord, Recording, TaskDataset
from seeg_pretrain.exception import ConfigError, ElectrodeSelectionError, SeegPretrainException
from seeg_pretrain.logger import logging
from seeg_pretrain.modeling.decoding import (
    ExampleBank,
    decoder_jobs,
    efficiency_sweep,
    layerwise_probe,
    records_frame,
    select_top_electrodes,
    train_decoder,
)
from seeg_pretrain.modeling.encoder import SpectrogramEncoder
from seeg_pretrain.processing.signal_processing import preprocess_recording
from seeg_pretrain.processing.synthetic import duration_for_train_size, make_task_dataset
from seeg_pretrain.utils.main_utils import run_jobs

SELECTION_MODEL = "lin_time_5s"


def load_task(run_config: RunConfig, recording_path: str, layout_path: Optional[str] = None,
              events_path: Optional[str] = None, manifest_path: Optional[str] = None) -> Tuple[Recording, TaskDataset]:
    """
    The session and its labeled task. With an events file the task is
    rebuilt for ``decode.task`` (same seed as ingestion, so the same
    examples); otherwise the manifest is read as is.
    """
    decode_cfg = run_config.decode_config()
    rec = load_session(recording_path, layout_path)
    if events_path and os.path.exists(events_path):
        track = read_events(events_path)
        ds = make_task_dataset(rec, track, decode_cfg.context_s, decode_cfg.guard_s,
                               seed=run_config["run.seed"], task=decode_cfg.task)
    elif manifest_path and os.path.exists(manifest_path):
        ds = dataset_from_manifest(read_table(manifest_path, MANIFEST_COLUMNS), decode_cfg.task, decode_cfg.context_s)
    else:
        raise ConfigError("decoding needs an events file or a task manifest next to the recording")
    if run_config["run.preprocess"]:
        rec = preprocess_recording(rec, run_config.signal_config())
    return rec, ds


class ModelEvaluation:
    """
    Per-electrode decoding: baselines, frozen and fine-tuned encoders,
    data-efficiency sweeps and layerwise probes.
    """

    def __init__(
        self,
        run_config: RunConfig,
        config: Optional[ModelEvaluationConfig] = None,
        saver: Optional[ITableSaver] = None,
    ) -> None:
        try:
            self.run_config = run_config
            self.config = config or ModelEvaluationConfig()
            self.saver: ITableSaver = saver or CSVTableSaver()
            self.decode_cfg: DecodeConfig = run_config.decode_config()
            self.method: str = run_config["run.method"]
        except Exception as e:
            raise SeegPretrainException(e, sys)

    # -----------------------------
    def _bank(self, rec: Recording, ds: TaskDataset, eid: str, models: Sequence[str]) -> ExampleBank:
        """Bank with every input the listed models need computed up front."""
        bank = ExampleBank(ds, rec, eid, self.run_config.stft_config(), self.run_config.superlet_config(),
                           self.run_config["signal.zscore_eps"])
        for name in set(models):
            if name in ("pretrained", "random"):
                bank.spectrograms(self.method)
            else:
                bank.baseline_inputs(name, self.decode_cfg.k)
        return bank

    def _run(self, banks: Dict[str, ExampleBank], jobs: Sequence[Tuple[str, str]], cfg: DecodeConfig,
             encoder: Optional[SpectrogramEncoder]) -> List[EvalRecord]:
        encoder_cfg = self.run_config.encoder_config()

        def job(eid, name, mode, seed):
            return lambda: train_decoder(banks[eid], name, mode, cfg, seed, encoder, encoder_cfg, self.method).record

        work = [((eid, name, mode, seed), job(eid, name, mode, seed))
                for eid in sorted(banks) for name, mode in jobs for seed in cfg.seeds]
        return [record for _, record in run_jobs(work)]

    def select_electrodes(self, rec: Recording, ds: TaskDataset) -> Tuple[Tuple[str, ...], List[EvalRecord]]:
        """
        Configured electrodes, or the ``top_k`` best by the linear 5 s
        baseline (clamped to the electrodes present). Returns the selection
        and the baseline records it used.
        """
        explicit = self.config.electrodes or self.run_config["decode.electrodes"]
        if explicit:
            unknown = sorted(set(explicit) - set(rec.electrode_ids))
            if unknown:
                raise ConfigError(f"electrodes {unknown} are not in the recording")
            return tuple(explicit), []
        if not rec.electrode_ids:
            raise ElectrodeSelectionError("no electrodes left to select from")
        banks = {eid: self._bank(rec, ds, eid, [SELECTION_MODEL]) for eid in rec.electrode_ids}
        records = self._run(banks, [(SELECTION_MODEL, "baseline")], self.decode_cfg, None)
        k = min(self.decode_cfg.top_k, len(banks))
        if k < self.decode_cfg.top_k:
            logging.warning(
                f"decode.top_k={self.decode_cfg.top_k} but only {len(banks)} electrodes are present; selecting {k}"
            )
        chosen = select_top_electrodes(records, ds.task_name, k, SELECTION_MODEL)
        logging.info(f"Top {k} electrodes by {SELECTION_MODEL}: {chosen}")
        return tuple(chosen), [r for r in records if r.electrode in chosen]

    def _report(self, rec, ds, encoder, cfg: DecodeConfig) -> ModelEvaluationArtifact:
        electrodes, selection_records = self.select_electrodes(rec, ds)
        jobs = decoder_jobs(cfg, encoder is not None)
        if selection_records and (SELECTION_MODEL, "baseline") in jobs:
            jobs = [j for j in jobs if j != (SELECTION_MODEL, "baseline")]
        else:
            selection_records = []
        banks = {eid: self._bank(rec, ds, eid, [name for name, _ in jobs]) for eid in electrodes}
        records = selection_records + self._run(banks, jobs, cfg, encoder)
        self.saver.save(records_frame(records), self.config.report_file_path)
        return ModelEvaluationArtifact(electrodes, report_file_path=self.config.report_file_path)

    # -----------------------------
    def initiate_finetune(self, rec: Recording, ds: TaskDataset,
                          encoder: Optional[SpectrogramEncoder]) -> ModelEvaluationArtifact:
        """Baselines plus the encoder in every configured mode, over all decode seeds."""
        try:
            logging.info(">>>>>> stage model evaluation (finetune) started <<<<<<")
            artifact = self._report(rec, ds, encoder, self.decode_cfg)
            logging.info(f"Model evaluation artifact created: {artifact}")
            return artifact
        except Exception as e:
            logging.error(f"Fine-tuning evaluation failed: {e}")
            raise SeegPretrainException(e, sys)

    def initiate_evaluation(self, rec: Recording, ds: TaskDataset,
                            encoder: Optional[SpectrogramEncoder]) -> ModelEvaluationArtifact:
        """
        Frozen-only evaluation: baselines and frozen encoder heads, plus a
        layerwise probe of ``encoder`` when one is given.
        """
        try:
            logging.info(">>>>>> stage model evaluation (frozen) started <<<<<<")
            cfg = replace(self.decode_cfg, modes=("frozen",))
            artifact = self._report(rec, ds, encoder, cfg)
            if encoder is None:
                return artifact
            banks = {eid: self._bank(rec, ds, eid, ["pretrained"]) for eid in artifact.electrodes}
            work = [((eid, seed), (lambda eid=eid, seed=seed: layerwise_probe(banks[eid], encoder, cfg, seed, self.method)))
                    for eid in sorted(banks) for seed in cfg.seeds]
            frames = [frame for _, frame in run_jobs(work)]
            self.saver.save(pd.concat(frames, ignore_index=True), self.config.layerwise_file_path)
            artifact = replace(artifact, layerwise_file_path=self.config.layerwise_file_path)
            logging.info(f"Model evaluation artifact created: {artifact}")
            return artifact
        except Exception as e:
            logging.error(f"Frozen evaluation failed: {e}")
            raise SeegPretrainException(e, sys)

    def initiate_sweep(self, rec: Recording, ds: TaskDataset,
                       encoder: Optional[SpectrogramEncoder]) -> ModelEvaluationArtifact:
        """Test AUC against training-set size for every configured decoder."""
        try:
            logging.info(">>>>>> stage model evaluation (sweep) started <<<<<<")
            electrodes, _ = self.select_electrodes(rec, ds)
            n_train = ds.split_sizes()[0]
            sizes = sorted({min(size, n_train) for size in self.decode_cfg.sizes})
            if sizes != sorted(set(self.decode_cfg.sizes)):
                needed = duration_for_train_size(
                    self.run_config.synth_config(), max(self.decode_cfg.sizes), self.decode_cfg.context_s
                )
                logging.warning(
                    f"training sizes {list(self.decode_cfg.sizes)} clipped to {sizes} ({n_train} available); "
                    f"synth.duration_s={needed:g} covers the largest size"
                )
            models = decoder_jobs(self.decode_cfg, encoder is not None)
            encoder_cfg = self.run_config.encoder_config()
            banks = {eid: self._bank(rec, ds, eid, [name for name, _ in models]) for eid in electrodes}

            def job(eid):
                def run():
                    frame = efficiency_sweep(banks[eid], models, sizes, self.decode_cfg.seeds, self.decode_cfg,
                                             encoder, encoder_cfg, self.method)
                    frame.insert(0, "electrode", eid)
                    return frame
                return run

            frames = [frame for _, frame in run_jobs((eid, job(eid)) for eid in sorted(banks))]
            self.saver.save(pd.concat(frames, ignore_index=True), self.config.efficiency_file_path)
            artifact = ModelEvaluationArtifact(electrodes, efficiency_file_path=self.config.efficiency_file_path)
            logging.info(f"Model evaluation artifact created: {artifact}")
            return artifact
        except Exception as e:
            logging.error(f"Data-efficiency sweep failed: {e}")
            raise SeegPretrainException(e, sys)
