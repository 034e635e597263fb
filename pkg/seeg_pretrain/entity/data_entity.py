from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterator, List, Optional, Set, Tuple

import numpy as np

from seeg_pretrain.constants import SIGNAL_SAMPLE_RATE_HZ, SPLIT_NAMES
from seeg_pretrain.exception import EmptyInputError, ParameterError, RejectedInputError, ShapeError


# ----------------- Signal -----------------
@dataclass(frozen=True, eq=False)
class RawTrace:
    """
    A single electrode's voltage time series.

    Attributes:
        samples (np.ndarray): voltage values in microvolts, 1-D float64.
        sample_rate_hz (float): sampling rate, positive.
    """
    samples: np.ndarray
    sample_rate_hz: float = SIGNAL_SAMPLE_RATE_HZ

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size < 1:
            raise RejectedInputError("a trace needs a 1-D sequence of at least one sample")
        if not np.all(np.isfinite(samples)):
            raise RejectedInputError("trace contains non-finite samples")
        if not self.sample_rate_hz > 0:
            raise RejectedInputError(f"sample rate must be positive, got {self.sample_rate_hz}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))

    @property
    def n_samples(self) -> int:
        return int(self.samples.size)

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sample_rate_hz

    @property
    def nyquist_hz(self) -> float:
        return self.sample_rate_hz / 2.0

    def with_samples(self, samples: np.ndarray) -> "RawTrace":
        return RawTrace(samples, self.sample_rate_hz)


@dataclass(frozen=True)
class ProbeLayout:
    """Ordered electrode identifiers per shaft; order follows physical adjacency."""
    shafts: Tuple[Tuple[str, ...], ...]

    def __post_init__(self):
        shafts = tuple(tuple(str(e) for e in shaft) for shaft in self.shafts)
        ids = [e for shaft in shafts for e in shaft]
        if len(ids) != len(set(ids)):
            raise RejectedInputError("electrode identifiers must be unique across shafts")
        object.__setattr__(self, "shafts", shafts)

    @property
    def electrode_ids(self) -> List[str]:
        return [e for shaft in self.shafts for e in shaft]

    @property
    def interior_ids(self) -> List[str]:
        """Electrodes with a same-shaft neighbour on both sides (the ones Laplacian re-referencing keeps)."""
        return [e for shaft in self.shafts for e in shaft[1:-1]]


@dataclass(frozen=True, eq=False)
class Recording:
    traces: Dict[str, RawTrace]
    layout: ProbeLayout
    session_id: str = "session-0"

    def __post_init__(self):
        if not self.traces:
            return
        rates = {t.sample_rate_hz for t in self.traces.values()}
        lengths = {t.n_samples for t in self.traces.values()}
        if len(rates) != 1 or len(lengths) != 1:
            raise RejectedInputError("all traces of a recording must share sample rate and length")

    @property
    def electrode_ids(self) -> List[str]:
        """Layout order first, then any unlisted electrodes sorted by id."""
        ordered = [e for e in self.layout.electrode_ids if e in self.traces]
        rest = sorted(set(self.traces) - set(ordered))
        return ordered + rest

    def _first_trace(self) -> RawTrace:
        if not self.traces:
            raise EmptyInputError("recording has no electrodes")
        return next(iter(self.traces.values()))

    @property
    def sample_rate_hz(self) -> float:
        return self._first_trace().sample_rate_hz

    @property
    def n_samples(self) -> int:
        return self._first_trace().n_samples

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sample_rate_hz


@dataclass(frozen=True, eq=False)
class ZScoreStats:
    mean: np.ndarray
    std: np.ndarray
    epsilon: float

    def __post_init__(self):
        if self.mean.shape != self.std.shape:
            raise ShapeError("z-score mean and std must have the same length")
        if np.any(np.maximum(self.std, self.epsilon) <= 0):
            raise ParameterError("z-score denominators must be positive")


# ----------------- Time-frequency -----------------
@dataclass(frozen=True, eq=False)
class Spectrogram:
    """
    Frequency x frame real matrix with its frequency axis.

    Attributes:
        values (np.ndarray): n x m magnitudes or z-units.
        freqs_hz (np.ndarray): strictly increasing, length n.
        frame_hop_s (float): seconds between consecutive frames.
        electrode_id (str): source electrode.
    """
    values: np.ndarray
    freqs_hz: np.ndarray
    frame_hop_s: float
    electrode_id: str = ""

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        freqs = np.asarray(self.freqs_hz, dtype=np.float64)
        if values.ndim != 2 or freqs.ndim != 1 or values.shape[0] != freqs.size:
            raise ShapeError(f"values {values.shape} do not match {freqs.size} frequencies")
        if freqs.size > 1 and np.any(np.diff(freqs) <= 0):
            raise ParameterError("frequencies must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise RejectedInputError("spectrogram values must be finite")
        if not self.frame_hop_s > 0:
            raise ParameterError("frame hop must be positive")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "freqs_hz", freqs)

    @property
    def n_freqs(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_frames(self) -> int:
        return int(self.values.shape[1])

    def with_values(self, values: np.ndarray) -> "Spectrogram":
        return Spectrogram(values, self.freqs_hz, self.frame_hop_s, self.electrode_id)


# ----------------- Masking -----------------
class MaskAxis(str, Enum):
    TIME = "time"
    FREQUENCY = "frequency"


class MaskAction(str, Enum):
    KEEP = "keep"
    REPLACE = "replace"
    ZERO = "zero"


@dataclass(frozen=True)
class MaskInterval:
    """
    One masked interval along an axis.

    ``start``/``width`` bound the interval along ``axis``. Time intervals may
    carry ``row_widths``: a per-row column extent centered inside
    ``[start, start + width)`` (adaptive wedges). Without it every row is
    covered by the full width.
    """
    axis: MaskAxis
    start: int
    width: int
    action: MaskAction
    replace_source: Optional[int] = None
    row_widths: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        if self.width < 1 or self.start < 0:
            raise ParameterError("mask intervals need start >= 0 and width >= 1")
        if self.row_widths is not None:
            if self.axis is not MaskAxis.TIME:
                raise ParameterError("row widths only apply to time intervals")
            if any(w < 1 or w > self.width for w in self.row_widths):
                raise ParameterError("row widths must lie in [1, width]")

    @property
    def stop(self) -> int:
        return self.start + self.width

    def extents(self, n_rows: int) -> np.ndarray:
        """Per-row extent along the interval's axis."""
        if self.row_widths is not None:
            return np.asarray(self.row_widths, dtype=int)
        return np.full(n_rows, self.width, dtype=int)

    def footprint(self, shape: Tuple[int, int], offset: int = 0) -> np.ndarray:
        """Boolean n x m mask covered by the interval, shifted by ``offset`` along its axis."""
        n, m = shape
        mask = np.zeros((n, m), dtype=bool)
        start = self.start + offset
        if self.axis is MaskAxis.FREQUENCY:
            mask[start:start + self.width, :] = True
            return mask
        if self.row_widths is None:
            mask[:, start:start + self.width] = True
            return mask
        if len(self.row_widths) != n:
            raise ShapeError(f"interval has {len(self.row_widths)} row widths for {n} rows")
        for row, w in enumerate(self.row_widths):
            left = start + (self.width - w) // 2
            mask[row, left:left + w] = True
        return mask


@dataclass(frozen=True, eq=False)
class MaskPlan:
    intervals: Tuple[MaskInterval, ...]
    shape: Tuple[int, int]
    masked_set: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "intervals", tuple(self.intervals))
        masked = np.zeros(self.shape, dtype=bool)
        for interval in self.intervals:
            masked |= interval.footprint(self.shape)
        object.__setattr__(self, "masked_set", masked)

    def positions(self) -> Set[Tuple[int, int]]:
        rows, cols = np.nonzero(self.masked_set)
        return set(zip(rows.tolist(), cols.tolist()))

    def on_axis(self, axis: MaskAxis) -> List[MaskInterval]:
        return [i for i in self.intervals if i.axis is axis]


@dataclass(frozen=True, eq=False)
class MaskedSpectrogram:
    """Augmented view Y~ and the masked position set M it was produced with."""
    values: np.ndarray
    mask: np.ndarray
    plan: MaskPlan


# ----------------- Synthetic stimuli and tasks -----------------
@dataclass(frozen=True, eq=False)
class StimulusTrack:
    event_times_s: np.ndarray
    min_separation_s: float
    intensities: Optional[np.ndarray] = None

    def __post_init__(self):
        times = np.asarray(self.event_times_s, dtype=np.float64)
        if times.size > 1 and np.any(np.diff(times) < self.min_separation_s - 1e-9):
            raise ParameterError("stimulus events closer than the declared minimum separation")
        object.__setattr__(self, "event_times_s", times)
        if self.intensities is not None:
            intensities = np.asarray(self.intensities, dtype=np.float64)
            if intensities.shape != times.shape:
                raise ShapeError("one intensity per event is required")
            object.__setattr__(self, "intensities", intensities)


@dataclass(frozen=True, eq=False)
class LabeledExample:
    electrode_id: str
    center_time_s: float
    label: int
    context: np.ndarray
    sample_rate_hz: float


@dataclass(frozen=True, eq=False)
class TaskDataset:
    """
    Labeled center times shared by every electrode of a session.

    Split assignment lives on the center times, so all electrodes see the
    same time segments in each split.
    """
    task_name: str
    center_times_s: np.ndarray
    labels: np.ndarray
    splits: np.ndarray
    context_s: float = 5.0

    def __post_init__(self):
        times = np.asarray(self.center_times_s, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        splits = np.asarray(self.splits, dtype=object)
        if not (times.shape == labels.shape == splits.shape):
            raise ShapeError("center times, labels and splits must align")
        if not set(np.unique(labels).tolist()) <= {0, 1}:
            raise ParameterError("labels must be binary")
        if not set(splits.tolist()) <= set(SPLIT_NAMES):
            raise ParameterError(f"splits must be drawn from {SPLIT_NAMES}")
        object.__setattr__(self, "center_times_s", times)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "splits", splits)

    def __len__(self) -> int:
        return int(self.labels.size)

    def indices(self, split: str) -> np.ndarray:
        return np.flatnonzero(self.splits == split)

    def split_sizes(self) -> Tuple[int, int, int]:
        return tuple(int(self.indices(s).size) for s in SPLIT_NAMES)

    def train_subset_mask(self, size: int, seed: int) -> np.ndarray:
        """Boolean keep-mask retaining ``size`` training examples (seeded draw) and every val/test example."""
        train = self.indices("train")
        if not 1 <= size <= train.size:
            raise ParameterError(f"requested {size} training examples, {train.size} available")
        rng = np.random.default_rng(seed)
        kept = np.sort(rng.choice(train, size=size, replace=False))
        keep = np.ones(len(self), dtype=bool)
        keep[train] = False
        keep[kept] = True
        return keep

    def subset(self, keep: np.ndarray) -> "TaskDataset":
        return TaskDataset(
            self.task_name, self.center_times_s[keep], self.labels[keep], self.splits[keep], self.context_s
        )

    def with_train_subset(self, size: int, seed: int) -> "TaskDataset":
        """Keep ``size`` training examples (seeded draw); val/test untouched."""
        keep = self.train_subset_mask(size, seed)
        return self.subset(keep)

    def examples(self, recording: Recording, electrode_id: str) -> Iterator[LabeledExample]:
        """Full-length contexts centered on each labeled time; raises ShapeError if one leaves the trace."""
        trace = recording.traces[electrode_id]
        n = int(np.floor(self.context_s * trace.sample_rate_hz + 1e-9))
        for t, label in zip(self.center_times_s, self.labels):
            start = int(np.floor(t * trace.sample_rate_hz)) - n // 2
            if start < 0 or start + n > trace.n_samples:
                raise ShapeError(
                    f"context [{start}, {start + n}) around {t:g} s falls outside "
                    f"{electrode_id} ({trace.n_samples} samples)"
                )
            yield LabeledExample(
                electrode_id, float(t), int(label), trace.samples[start:start + n], trace.sample_rate_hz
            )


@dataclass(frozen=True)
class EvalRecord:
    task: str
    electrode: str
    model: str
    mode: str
    seed: int
    n_train: int
    n_val: int
    n_test: int
    auc: float

    def __post_init__(self):
        if not 0.0 <= self.auc <= 1.0:
            raise ParameterError(f"AUC must lie in [0, 1], got {self.auc}")


# ----------------- Analysis -----------------
@dataclass(frozen=True, eq=False)
class EmbeddingCloud:
    vectors: np.ndarray
    electrode_id: str
    session_id: str = "session-0"

    def __post_init__(self):
        vectors = np.asarray(self.vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] < 2:
            raise ShapeError("an embedding cloud needs at least two vectors")
        if not np.all(np.isfinite(vectors)):
            raise RejectedInputError("embedding vectors must be finite")
        object.__setattr__(self, "vectors", vectors)

    @property
    def n_segments(self) -> int:
        return int(self.vectors.shape[0])


@dataclass(frozen=True, eq=False)
class IdReportEntry:
    electrode_id: str
    intrinsic_dim: int
    n_segments: int
    curve: np.ndarray
