"""
FFCK checkpoints: the resolved run configuration plus named tensors.
"""
import os
from typing import Dict, Tuple

import numpy as np
import torch

from seeg_pretrain.constants import CHECKPOINT_MAGIC, DTYPE_CODE_F32, DTYPE_CODE_F64, FORMAT_VERSION
from seeg_pretrain.data_access.binary_codec import BinaryReader, BinaryWriter
from seeg_pretrain.exception import FormatError
from seeg_pretrain.logger import logging

_DTYPES = {DTYPE_CODE_F32: "<f4", DTYPE_CODE_F64: "<f8"}
_NATIVE = {DTYPE_CODE_F32: np.float32, DTYPE_CODE_F64: np.float64}


def save_checkpoint(file_path: str, config_text: str, tensors: Dict[str, torch.Tensor]) -> None:
    """
    Layout: magic "FFCK", u32 version, u32-prefixed config text, u32 tensor
    count, then per tensor (sorted by name): u16-prefixed name, u8 dtype
    code, u8 rank, u64 dims, raw little-endian values.
    """
    parent = os.path.dirname(file_path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(file_path, "wb") as f:
        out = BinaryWriter(f)
        out.magic(CHECKPOINT_MAGIC, FORMAT_VERSION)
        out.long_text(config_text)
        out.u32(len(tensors))
        for name in sorted(tensors):
            array = tensors[name].detach().cpu().numpy()
            code = DTYPE_CODE_F64 if array.dtype == np.float64 else DTYPE_CODE_F32
            out.short_text(name)
            out.u8(code)
            out.u8(array.ndim)
            for dim in array.shape:
                out.u64(dim)
            out.array(array, _DTYPES[code])
    logging.info(f"Checkpoint with {len(tensors)} tensors saved to {file_path}")


def load_checkpoint(file_path: str) -> Tuple[str, Dict[str, torch.Tensor]]:
    """Returns (config text, name -> tensor)."""
    with open(file_path, "rb") as f:
        reader = BinaryReader(f, file_path)
        reader.expect_magic(CHECKPOINT_MAGIC, FORMAT_VERSION)
        config_text = reader.long_text()
        tensors = {}
        for _ in range(reader.u32()):
            name = reader.short_text()
            code = reader.u8()
            if code not in _DTYPES:
                raise FormatError(f"{file_path}: unknown dtype code {code} for tensor {name}")
            shape = tuple(reader.u64() for _ in range(reader.u8()))
            count = int(np.prod(shape)) if shape else 1
            tensors[name] = torch.from_numpy(reader.array(count, _DTYPES[code]).reshape(shape).astype(_NATIVE[code]))
        if not reader.at_end():
            raise FormatError(f"{file_path}: trailing bytes after the last tensor")
    return config_text, tensors
