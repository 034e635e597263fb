import sys
from typing import Dict, List, Optional, Sequence

from seeg_pretrain.configuration.run_config import RunConfig
from seeg_pretrain.data_access.table_store import CSVTableSaver, ITableSaver
from seeg_pretrain.entity.artifact_entity import EmbeddingAnalysisArtifact
from seeg_pretrain.entity.config_entity import EmbeddingAnalysisConfig
from seeg_pretrain.entity.data_entity import EmbeddingCloud, Recording
from seeg_pretrain.exception import SeegPretrainException
from seeg_pretrain.logger import logging
from seeg_pretrain.modeling.embedding_analysis import (
    compare_intrinsic_dimension,
    curves_frame,
    embed_corpus,
    id_report,
    id_report_frame,
    pool_clouds,
)
from seeg_pretrain.modeling.encoder import SpectrogramEncoder
from seeg_pretrain.utils.main_utils import derive_seed


class EmbeddingAnalysis:
    """Intrinsic dimension of per-electrode embedding clouds, optionally against a random encoder."""

    def __init__(
        self,
        run_config: RunConfig,
        config: Optional[EmbeddingAnalysisConfig] = None,
        saver: Optional[ITableSaver] = None,
    ) -> None:
        try:
            self.run_config = run_config
            self.config = config or EmbeddingAnalysisConfig()
            self.saver: ITableSaver = saver or CSVTableSaver()
            self.analysis_cfg = run_config.analysis_config()
        except Exception as e:
            raise SeegPretrainException(e, sys)

    def _clouds(self, sessions: Sequence[Recording], model: SpectrogramEncoder) -> Dict[str, EmbeddingCloud]:
        per_session: List[Dict[str, EmbeddingCloud]] = [
            embed_corpus(
                rec,
                model,
                self.run_config.signal_config(),
                self.run_config["run.method"],
                self.run_config.stft_config(),
                self.run_config.superlet_config(),
                preprocess=self.run_config["run.preprocess"],
                layer=self.analysis_cfg.layer or None,
            )
            for rec in sessions
        ]
        if self.analysis_cfg.pooled or len(per_session) > 1:
            return pool_clouds(per_session)
        return per_session[0]

    def initiate_embedding_analysis(self, sessions: Sequence[Recording],
                                    encoder: SpectrogramEncoder) -> EmbeddingAnalysisArtifact:
        try:
            logging.info(">>>>>> stage embedding analysis started <<<<<<")
            cfg = self.analysis_cfg
            entries = id_report(self._clouds(sessions, encoder), cfg.n_components, cfg.beta)
            self.saver.save(id_report_frame(entries), self.config.id_report_file_path)
            self.saver.save(curves_frame(entries), self.config.curves_file_path)
            comparison_path = None
            if cfg.compare_random:
                random_model = SpectrogramEncoder(encoder.cfg, seed=derive_seed(self.run_config["run.seed"], "random-encoder"))
                random_entries = id_report(self._clouds(sessions, random_model), cfg.n_components, cfg.beta)
                comparison_path = self.config.comparison_file_path
                self.saver.save(compare_intrinsic_dimension(entries, random_entries), comparison_path)

            artifact = EmbeddingAnalysisArtifact(
                id_report_file_path=self.config.id_report_file_path,
                curves_file_path=self.config.curves_file_path,
                comparison_file_path=comparison_path,
            )
            logging.info(f"Embedding analysis artifact created: {artifact}")
            return artifact
        except Exception as e:
            logging.error(f"Embedding analysis failed: {e}")
            raise SeegPretrainException(e, sys)
