"""
Raw voltage preprocessing: high-pass, line-noise notches, Laplacian
re-referencing, segmentation and per-frequency-bin z-scoring.

All functions are pure; filters run forward-backward so event-locked
windows are not shifted in time.
"""
from typing import Iterable, List, Optional, Tuple

import numpy as np
from scipy import signal as sps

from seeg_pretrain.entity.config_entity import SignalConfig
from seeg_pretrain.entity.data_entity import ProbeLayout, RawTrace, Recording, Spectrogram, ZScoreStats
from seeg_pretrain.exception import ParameterError
from seeg_pretrain.logger import logging


def _padlen(n_samples: int, n_coefficients: int) -> int:
    return max(0, min(3 * n_coefficients, n_samples - 1))


def highpass_filter(trace: RawTrace, cutoff_hz: float = 0.1, order: int = 4) -> RawTrace:
    """
    Zero-phase Butterworth high-pass (``order`` per direction).

    Args:
        trace (RawTrace): input trace; finiteness is enforced by RawTrace itself.
        cutoff_hz (float): -3 dB corner, must lie below Nyquist.
        order (int): Butterworth order of each pass.

    Returns:
        RawTrace: filtered trace with the same length and rate.
    """
    if not 0.0 < cutoff_hz < trace.nyquist_hz:
        raise ParameterError(f"cutoff {cutoff_hz} Hz must lie in (0, {trace.nyquist_hz}) Hz")
    sos = sps.butter(order, cutoff_hz, btype="highpass", fs=trace.sample_rate_hz, output="sos")
    if trace.n_samples < 2:
        return trace.with_samples(np.zeros_like(trace.samples))
    filtered = sps.sosfiltfilt(sos, trace.samples, padlen=_padlen(trace.n_samples, 2 * len(sos) + 1))
    return trace.with_samples(filtered)


def line_harmonics(base_hz: float, sample_rate_hz: float) -> np.ndarray:
    nyquist = sample_rate_hz / 2.0
    count = int(np.ceil(nyquist / base_hz))
    harmonics = base_hz * np.arange(1, count + 1)
    return harmonics[harmonics < nyquist]


def remove_line_noise(trace: RawTrace, base_hz: float = 60.0, bandwidth_hz: float = 1.0) -> RawTrace:
    """Second-order IIR notch of ``bandwidth_hz`` at ``base_hz`` and every harmonic below Nyquist."""
    if not 0.0 < base_hz < trace.nyquist_hz:
        raise ParameterError(f"line frequency {base_hz} Hz must lie below Nyquist ({trace.nyquist_hz} Hz)")
    if bandwidth_hz <= 0:
        raise ParameterError("notch bandwidth must be positive")
    samples = trace.samples
    if trace.n_samples < 2:
        return trace
    for harmonic in line_harmonics(base_hz, trace.sample_rate_hz):
        b, a = sps.iirnotch(harmonic, harmonic / bandwidth_hz, fs=trace.sample_rate_hz)
        samples = sps.filtfilt(b, a, samples, padlen=_padlen(trace.n_samples, 3))
    return trace.with_samples(samples)


def laplacian_rereference(rec: Recording) -> Recording:
    """
    Subtract the mean of the two same-shaft neighbours from each electrode.

    Only electrodes with a neighbour on both sides survive; shafts shorter
    than three electrodes contribute nothing.
    """
    traces = {}
    shafts = []
    for shaft in rec.layout.shafts:
        present = [e for e in shaft if e in rec.traces]
        kept = []
        for i in range(1, len(present) - 1):
            left = rec.traces[present[i - 1]].samples
            right = rec.traces[present[i + 1]].samples
            center = rec.traces[present[i]]
            traces[present[i]] = center.with_samples(center.samples - (left + right) / 2.0)
            kept.append(present[i])
        if kept:
            shafts.append(tuple(kept))
    logging.info(f"Laplacian re-reference kept {len(traces)} of {len(rec.traces)} electrodes")
    return Recording(traces=traces, layout=ProbeLayout(tuple(shafts)), session_id=rec.session_id)


def segment_starts(n_samples: int, sample_rate_hz: float, window_s: float = 5.0, hop_s: float = 5.0) -> np.ndarray:
    """Exact start indices floor(k * hop_s * rate) of every full window."""
    window = int(np.floor(window_s * sample_rate_hz + 1e-9))
    if window < 1:
        raise ParameterError("window must cover at least one sample")
    if hop_s <= 0:
        raise ParameterError("hop must be positive")
    starts = []
    k = 0
    while True:
        start = int(np.floor(k * hop_s * sample_rate_hz + 1e-9))
        if start + window > n_samples:
            break
        starts.append(start)
        k += 1
    return np.asarray(starts, dtype=np.int64)


def segment_recording(trace: RawTrace, window_s: float = 5.0, hop_s: float = 5.0) -> List[RawTrace]:
    """Cut a trace into windows; a trailing partial window is dropped."""
    window = int(np.floor(window_s * trace.sample_rate_hz + 1e-9))
    starts = segment_starts(trace.n_samples, trace.sample_rate_hz, window_s, hop_s)
    return [trace.with_samples(trace.samples[s:s + window]) for s in starts]


def fit_zscore_stats(matrices: Iterable[np.ndarray], epsilon: float = 1e-8) -> ZScoreStats:
    """Per-row statistics pooled over several n x m matrices (session-level scope)."""
    stacked = np.concatenate([np.asarray(m, dtype=np.float64) for m in matrices], axis=1)
    return ZScoreStats(mean=stacked.mean(axis=1), std=stacked.std(axis=1), epsilon=epsilon)


def zscore(
    spec: Spectrogram, stats: Optional[ZScoreStats] = None, epsilon: float = 1e-8
) -> Tuple[Spectrogram, ZScoreStats]:
    """
    Normalize every frequency row to zero mean and unit (population) variance.

    The denominator is ``max(std, epsilon)``: rows whose spread is below the
    guard map to zeros, while well-conditioned rows are divided by their
    exact std, which keeps the transform idempotent.
    """
    values = spec.values
    if values.shape[0] < 1 or values.shape[1] < 2:
        raise ParameterError("z-scoring needs at least one row and two frames")
    if stats is None:
        stats = ZScoreStats(mean=values.mean(axis=1), std=values.std(axis=1), epsilon=epsilon)
    elif stats.mean.size != values.shape[0]:
        raise ParameterError(f"stats cover {stats.mean.size} bins, spectrogram has {values.shape[0]}")
    denominator = np.maximum(stats.std, stats.epsilon)
    normalized = (values - stats.mean[:, None]) / denominator[:, None]
    return spec.with_values(normalized), stats


def zscore_matrix(values: np.ndarray, epsilon: float = 1e-8) -> np.ndarray:
    """Array form of :func:`zscore` over the last axis, for stacks of windows."""
    mean = values.mean(axis=-1, keepdims=True)
    std = values.std(axis=-1, keepdims=True)
    return (values - mean) / np.maximum(std, epsilon)


def preprocess_trace(trace: RawTrace, cfg: SignalConfig) -> RawTrace:
    trace = highpass_filter(trace, cfg.highpass_hz, cfg.highpass_order)
    return remove_line_noise(trace, cfg.line_hz, cfg.notch_bandwidth_hz)


def preprocess_recording(rec: Recording, cfg: SignalConfig) -> Recording:
    """High-pass and notch every trace, then Laplacian re-reference when configured."""
    logging.info(f"Preprocessing {len(rec.traces)} electrodes of session {rec.session_id}")
    traces = {eid: preprocess_trace(trace, cfg) for eid, trace in rec.traces.items()}
    filtered = Recording(traces=traces, layout=rec.layout, session_id=rec.session_id)
    if not cfg.rereference:
        return filtered
    return laplacian_rereference(filtered)
