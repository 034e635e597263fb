import os
from abc import ABC, abstractmethod

import pandas as pd
from pandas import DataFrame

from seeg_pretrain.entity.data_entity import TaskDataset
from seeg_pretrain.exception import FormatError
from seeg_pretrain.logger import logging

MANIFEST_COLUMNS = ["electrode", "center_time_s", "label", "split"]


# -----------------------------
# Interface
# -----------------------------
class ITableSaver(ABC):
    """
    Abstract interface for table savers.
    Every report and manifest goes through a ``save`` with the same contract.
    """

    @abstractmethod
    def save(self, data: DataFrame, file_path: str) -> None:
        """
        Save the given DataFrame to the specified file path.

        Args:
            data (DataFrame): Table to save.
            file_path (str): Destination file path.
        """


# -----------------------------
# CSV Table Saver
# -----------------------------
class CSVTableSaver(ITableSaver):
    """
    CSV with a header row and no index. Floats are written with full
    round-trip precision so repeated runs give byte-identical files.
    """

    def save(self, data: DataFrame, file_path: str) -> None:
        try:
            parent = os.path.dirname(file_path)
            if parent:
                os.makedirs(parent, exist_ok=True)
            data.to_csv(file_path, index=False, header=True, float_format="%.17g", lineterminator="\n")
            logging.info(f"CSV table with {len(data)} rows saved to: {file_path}")
        except Exception as e:
            logging.error(f"Failed to save CSV table to {file_path}: {e}")
            raise RuntimeError(f"Failed to save CSV table to {file_path}") from e


def read_table(file_path: str, required_columns=None) -> DataFrame:
    frame = pd.read_csv(file_path, dtype={"electrode": str})
    missing = set(required_columns or ()) - set(frame.columns)
    if missing:
        raise FormatError(f"{file_path}: missing columns {sorted(missing)}")
    return frame


def manifest_frame(ds: TaskDataset, electrode_ids) -> DataFrame:
    """One row per (electrode, example): the shared time axis repeated per electrode."""
    rows = []
    for eid in electrode_ids:
        for t, label, split in zip(ds.center_times_s, ds.labels, ds.splits):
            rows.append({"electrode": eid, "center_time_s": float(t), "label": int(label), "split": split})
    return DataFrame(rows, columns=MANIFEST_COLUMNS)


def dataset_from_manifest(frame: DataFrame, task_name: str, context_s: float = 5.0) -> TaskDataset:
    """Rebuild the shared task from a manifest; rows of the first electrode define it."""
    if frame.empty:
        raise FormatError("manifest has no rows")
    first = frame[frame["electrode"] == frame["electrode"].iloc[0]]
    return TaskDataset(
        task_name,
        first["center_time_s"].to_numpy(dtype=float),
        first["label"].to_numpy(dtype=int),
        first["split"].to_numpy(dtype=object),
        context_s,
    )
