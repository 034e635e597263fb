"""
Raw recording persistence: FFRW binary traces, the probe layout text file
and the JSON-lines stimulus events.
"""
import os
from typing import Optional

import numpy as np
import pandas as pd

from seeg_pretrain.constants import FORMAT_VERSION, RECORDING_MAGIC
from seeg_pretrain.data_access.binary_codec import BinaryReader, BinaryWriter
from seeg_pretrain.entity.data_entity import ProbeLayout, RawTrace, Recording, StimulusTrack
from seeg_pretrain.exception import FormatError
from seeg_pretrain.logger import logging


def _ensure_parent(file_path: str) -> None:
    parent = os.path.dirname(file_path)
    if parent:
        os.makedirs(parent, exist_ok=True)


def write_recording(file_path: str, rec: Recording) -> None:
    """
    FFRW: magic, u32 version, f64 rate, u32 electrode count, then per
    electrode a u16-prefixed UTF-8 id, u64 sample count and f32 samples.
    Electrodes are written in layout order.
    """
    _ensure_parent(file_path)
    ids = rec.electrode_ids
    with open(file_path, "wb") as f:
        out = BinaryWriter(f)
        out.magic(RECORDING_MAGIC, FORMAT_VERSION)
        out.f64(rec.sample_rate_hz)
        out.u32(len(ids))
        for eid in ids:
            samples = rec.traces[eid].samples
            out.short_text(eid)
            out.u64(samples.size)
            out.array(samples, "<f4")
    logging.info(f"Recording with {len(ids)} electrodes written to {file_path}")


def read_recording(file_path: str, layout: Optional[ProbeLayout] = None, session_id: str = "session-0") -> Recording:
    """Read an FFRW file; without a layout every electrode is its own shaft."""
    with open(file_path, "rb") as f:
        reader = BinaryReader(f, file_path)
        reader.expect_magic(RECORDING_MAGIC, FORMAT_VERSION)
        rate = reader.f64()
        traces = {}
        for _ in range(reader.u32()):
            eid = reader.short_text()
            samples = reader.array(reader.u64(), "<f4").astype(np.float64)
            traces[eid] = RawTrace(samples, rate)
        if not reader.at_end():
            raise FormatError(f"{file_path}: trailing bytes after the last electrode")
    if layout is None:
        layout = ProbeLayout(tuple((eid,) for eid in traces))
    return Recording(traces, layout, session_id)


def write_layout(file_path: str, layout: ProbeLayout) -> None:
    """One shaft per line, electrode ids comma-separated in adjacency order."""
    _ensure_parent(file_path)
    with open(file_path, "w", encoding="utf-8") as f:
        for shaft in layout.shafts:
            f.write(",".join(shaft) + "\n")


def read_layout(file_path: str) -> ProbeLayout:
    with open(file_path, "r", encoding="utf-8") as f:
        shafts = [tuple(e.strip() for e in line.split(",") if e.strip()) for line in f if line.strip()]
    return ProbeLayout(tuple(shafts))


def write_events(file_path: str, track: StimulusTrack) -> None:
    """JSON lines ``{"t": seconds, "intensity": value}``."""
    _ensure_parent(file_path)
    frame = pd.DataFrame({"t": track.event_times_s})
    if track.intensities is not None:
        frame["intensity"] = track.intensities
    frame.to_json(file_path, orient="records", lines=True, double_precision=15)


def read_events(file_path: str, min_separation_s: float = 0.0) -> StimulusTrack:
    try:
        frame = pd.read_json(file_path, orient="records", lines=True)
    except ValueError as e:
        raise FormatError(f"{file_path}: unreadable events file ({e})") from e
    if frame.empty:
        return StimulusTrack(np.empty(0), min_separation_s)
    if "t" not in frame.columns:
        raise FormatError(f"{file_path}: events need a 't' field")
    intensities = frame["intensity"].to_numpy(dtype=np.float64) if "intensity" in frame.columns else None
    return StimulusTrack(frame["t"].to_numpy(dtype=np.float64), min_separation_s, intensities)


def load_session(recording_path: str, layout_path: Optional[str] = None, session_id: str = "session-0") -> Recording:
    layout = read_layout(layout_path) if layout_path and os.path.exists(layout_path) else None
    return read_recording(recording_path, layout, session_id)
