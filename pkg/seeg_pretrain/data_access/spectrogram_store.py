import os
from typing import List

import numpy as np

from seeg_pretrain.constants import FORMAT_VERSION, SPECTROGRAM_FILE_SUFFIX, SPECTROGRAM_MAGIC
from seeg_pretrain.data_access.binary_codec import BinaryReader, BinaryWriter
from seeg_pretrain.entity.data_entity import Spectrogram
from seeg_pretrain.exception import EmptyInputError, FormatError
from seeg_pretrain.logger import logging


def spectrogram_file_name(electrode_id: str) -> str:
    return f"{electrode_id}{SPECTROGRAM_FILE_SUFFIX}"


def write_spectrogram(file_path: str, spec: Spectrogram) -> None:
    """
    FFSG: magic, u32 version, u16-prefixed electrode id, u32 n, u32 m,
    f64 frame hop, f64[n] frequencies, then n*m f32 values row-major.
    """
    parent = os.path.dirname(file_path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(file_path, "wb") as f:
        out = BinaryWriter(f)
        out.magic(SPECTROGRAM_MAGIC, FORMAT_VERSION)
        out.short_text(spec.electrode_id)
        out.u32(spec.n_freqs)
        out.u32(spec.n_frames)
        out.f64(spec.frame_hop_s)
        out.array(spec.freqs_hz, "<f8")
        out.array(spec.values, "<f4")


def read_spectrogram(file_path: str) -> Spectrogram:
    with open(file_path, "rb") as f:
        reader = BinaryReader(f, file_path)
        reader.expect_magic(SPECTROGRAM_MAGIC, FORMAT_VERSION)
        electrode_id = reader.short_text()
        n, m = reader.u32(), reader.u32()
        hop = reader.f64()
        freqs = reader.array(n, "<f8")
        values = reader.array(n * m, "<f4").reshape(n, m)
        if not reader.at_end():
            raise FormatError(f"{file_path}: trailing bytes after the spectrogram values")
    return Spectrogram(values.astype(np.float64), freqs, hop, electrode_id)


def write_spectrogram_dir(directory: str, spectrograms: List[Spectrogram]) -> List[str]:
    paths = []
    for spec in spectrograms:
        path = os.path.join(directory, spectrogram_file_name(spec.electrode_id))
        write_spectrogram(path, spec)
        paths.append(path)
    logging.info(f"{len(paths)} spectrograms written to {directory}")
    return paths


def read_spectrogram_dir(directory: str) -> List[Spectrogram]:
    """Every FFSG file in ``directory``, sorted by file name."""
    if not os.path.isdir(directory):
        raise FileNotFoundError(f"spectrogram directory {directory} does not exist")
    names = sorted(n for n in os.listdir(directory) if n.endswith(SPECTROGRAM_FILE_SUFFIX))
    if not names:
        raise EmptyInputError(f"no {SPECTROGRAM_FILE_SUFFIX} files in {directory}")
    return [read_spectrogram(os.path.join(directory, n)) for n in names]
