import os
import sys
from typing import List, Optional

import pandas as pd

from seeg_pretrain.constants import (
    EFFICIENCY_CURVE_FILE_NAME,
    EFFICIENCY_FILE_NAME,
    EVAL_REPORT_FILE_NAME,
    SUMMARY_LONG_FILE_NAME,
    SUMMARY_TABLE_FILE_NAME,
)
from seeg_pretrain.data_access.table_store import CSVTableSaver, ITableSaver, read_table
from seeg_pretrain.entity.artifact_entity import ReportArtifact
from seeg_pretrain.exception import SeegPretrainException
from seeg_pretrain.logger import logging

SUMMARY_COLUMNS = ["task", "model", "mode", "auc_mean", "auc_sd", "n"]
CURVE_COLUMNS = ["size", "model", "mode", "auc_mean", "auc_sd", "n_electrodes"]
EVAL_COLUMNS = ["task", "electrode", "model", "mode", "seed", "n_train", "auc"]
EFFICIENCY_COLUMNS = ["electrode", "size", "model", "mode", "auc_mean", "auc_sd", "n_seeds"]


def find_files(run_dir: str, file_name: str) -> List[str]:
    """Every ``file_name`` below ``run_dir``, in sorted path order."""
    found = []
    if not os.path.isdir(run_dir):
        return found
    for root, dirs, files in os.walk(run_dir):
        dirs.sort()
        if file_name in files:
            found.append(os.path.join(root, file_name))
    return sorted(found)


def summarize_records(records: pd.DataFrame) -> pd.DataFrame:
    """Mean and sample sd (ddof=1) of test AUC per (task, model, mode) over electrodes and seeds."""
    if records.empty:
        return pd.DataFrame(columns=SUMMARY_COLUMNS)
    grouped = records.groupby(["task", "model", "mode"], sort=True)["auc"]
    summary = grouped.agg(auc_mean="mean", auc_sd=lambda s: s.std(ddof=1), n="count").reset_index()
    return summary[SUMMARY_COLUMNS]


def format_cell(mean: float, sd: float) -> str:
    return f"{mean:.3f} ± {sd:.3f}"


def summary_table(summary: pd.DataFrame) -> pd.DataFrame:
    """Rows (model, mode), one column per task, cells ``mean ± sd``."""
    if summary.empty:
        return pd.DataFrame(columns=["model", "mode"])
    cells = summary.assign(cell=[format_cell(m, s) for m, s in zip(summary["auc_mean"], summary["auc_sd"])])
    table = cells.pivot(index=["model", "mode"], columns="task", values="cell")
    table.columns.name = None
    return table.reset_index().fillna("")


def efficiency_curve(frame: pd.DataFrame) -> pd.DataFrame:
    """Mean over electrodes of each electrode's seed-averaged AUC, per training-set size."""
    if frame.empty:
        return pd.DataFrame(columns=CURVE_COLUMNS)
    grouped = frame.groupby(["size", "model", "mode"], sort=True)["auc_mean"]
    curve = grouped.agg(auc_mean="mean", auc_sd=lambda s: s.std(ddof=1), n_electrodes="count").reset_index()
    return curve[CURVE_COLUMNS]


class RunReport:
    """Merges the evaluation tables found under a run directory into summary tables."""

    def __init__(self, out_dir: str, saver: Optional[ITableSaver] = None) -> None:
        self.out_dir = out_dir
        self.saver: ITableSaver = saver or CSVTableSaver()

    def _collect(self, run_dir: str, file_name: str, columns: List[str]) -> pd.DataFrame:
        paths = find_files(run_dir, file_name)
        if not paths:
            logging.warning(f"partial report: no {file_name} found under {run_dir}")
            return pd.DataFrame(columns=columns)
        return pd.concat([read_table(p, columns) for p in paths], ignore_index=True)

    def initiate_report(self, run_dir: str) -> ReportArtifact:
        try:
            logging.info(">>>>>> stage report started <<<<<<")
            records = self._collect(run_dir, EVAL_REPORT_FILE_NAME, EVAL_COLUMNS)
            efficiency = self._collect(run_dir, EFFICIENCY_FILE_NAME, EFFICIENCY_COLUMNS)

            summary = summarize_records(records)
            long_path = os.path.join(self.out_dir, SUMMARY_LONG_FILE_NAME)
            table_path = os.path.join(self.out_dir, SUMMARY_TABLE_FILE_NAME)
            self.saver.save(summary, long_path)
            self.saver.save(summary_table(summary), table_path)

            curve_path = None
            if not efficiency.empty:
                curve_path = os.path.join(self.out_dir, EFFICIENCY_CURVE_FILE_NAME)
                self.saver.save(efficiency_curve(efficiency), curve_path)

            artifact = ReportArtifact(long_path, table_path, curve_path, partial=records.empty or efficiency.empty)
            logging.info(f"Report artifact created: {artifact}")
            return artifact
        except Exception as e:
            logging.error(f"Report failed: {e}")
            raise SeegPretrainException(e, sys)
