import os
import sys
import zlib
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, Hashable, Iterable, List, Tuple, TypeVar

import numpy as np
import yaml
from box import ConfigBox
from dotenv import load_dotenv

from seeg_pretrain.constants import THREADS_ENV_KEY
from seeg_pretrain.exception import OutputExistsError, SeegPretrainException
from seeg_pretrain.logger import logging

T = TypeVar("T")

load_dotenv()


# -----------------------------
def read_yaml_file(file_path: str) -> ConfigBox:
    """
    Reads a YAML file and returns its content as a ConfigBox (attribute access).

    Args:
        file_path (str): Path to the YAML file.

    Returns:
        ConfigBox: Parsed YAML content.

    Raises:
        SeegPretrainException: If the file cannot be read or parsed, or if the root is not a mapping.
    """
    try:
        with open(file_path, "r") as yaml_file:
            content = yaml.safe_load(yaml_file)
            if not isinstance(content, dict):
                raise ValueError(f"YAML file {file_path} must contain a mapping at the root.")
            return ConfigBox(content)
    except Exception as e:
        logging.error(f"Failed to read YAML file {file_path}: {e}")
        raise SeegPretrainException(e, sys)


def write_text_file(file_path: str, text: str) -> None:
    parent = os.path.dirname(file_path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(file_path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def derive_seed(base_seed: int, *keys) -> int:
    """
    Stable 32-bit seed for a job identified by ``keys``.

    Keys are hashed with CRC-32 (not ``hash``), so the value is the same in
    every process and under every thread count.
    """
    words = [int(base_seed) & 0xFFFFFFFF] + [zlib.crc32(str(k).encode("utf-8")) for k in keys]
    return int(np.random.SeedSequence(words).generate_state(1)[0])


def worker_count() -> int:
    """Worker pool size from FF_THREADS (default 1)."""
    raw = os.environ.get(THREADS_ENV_KEY, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        logging.warning(f"{THREADS_ENV_KEY}={raw!r} is not an integer; using 1 worker")
        return 1


def run_jobs(jobs: Iterable[Tuple[Hashable, Callable[[], T]]], workers: int = None) -> List[Tuple[Hashable, T]]:
    """
    Run independent seeded jobs on a bounded thread pool.

    Results come back sorted by job key, so the merged output does not
    depend on completion order or pool size.
    """
    jobs = list(jobs)
    workers = worker_count() if workers is None else max(1, workers)
    if workers == 1 or len(jobs) <= 1:
        results: Dict[Hashable, T] = {key: job() for key, job in jobs}
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {key: pool.submit(job) for key, job in jobs}
            results = {key: future.result() for key, future in futures.items()}
    return sorted(results.items(), key=lambda item: item[0])


def ensure_output_dir(path: str, force: bool = False) -> str:
    """
    Create ``path``; refuse a non-empty existing directory unless ``force``.

    Raises:
        OutputExistsError: when the directory holds files and ``force`` is False.
    """
    if os.path.isdir(path) and os.listdir(path) and not force:
        raise OutputExistsError(f"output directory {path} is not empty; pass --force to overwrite")
    os.makedirs(path, exist_ok=True)
    return path
