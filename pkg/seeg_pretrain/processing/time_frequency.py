"""
Time-frequency representations: Hann-window magnitude STFT and the
multiplicative adaptive superlet transform (geometric mean of Morlet
responses), plus block-average decimation with edge trimming.
"""
from typing import Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import fft as sp_fft
from scipy import signal as sps

from seeg_pretrain.entity.config_entity import StftConfig, SuperletConfig
from seeg_pretrain.entity.data_entity import RawTrace, Spectrogram
from seeg_pretrain.exception import EmptyInputError, EmptyOutputError, ParameterError
from seeg_pretrain.logger import logging

SQRT2 = np.sqrt(2.0)


# ----------------- STFT -----------------
def stft_frame_count(n_samples: int, cfg: StftConfig) -> int:
    return (n_samples - cfg.window_samples) // cfg.hop_samples + 1


def stft(trace: RawTrace, cfg: StftConfig = StftConfig(), electrode_id: str = "") -> Spectrogram:
    """
    Magnitude STFT keeping the lowest ``n_bins`` non-negative frequency bins.

    Frames are taken without padding, so the frame count is
    ``floor((len - window) / hop) + 1``; ``trim_frames`` columns are then
    dropped from each side.
    """
    if trace.n_samples < cfg.window_samples:
        raise EmptyInputError(f"trace of {trace.n_samples} samples is shorter than the {cfg.window_samples}-sample window")
    if cfg.n_bins > cfg.window_samples // 2 + 1:
        raise ParameterError(f"{cfg.n_bins} bins exceed the {cfg.window_samples // 2 + 1} available")
    frames = sliding_window_view(trace.samples, cfg.window_samples)[:: cfg.hop_samples]
    window = sps.get_window("hann", cfg.window_samples)
    spectrum = np.abs(sp_fft.rfft(frames * window, axis=-1))[:, : cfg.n_bins].T
    n_frames = spectrum.shape[1]
    if n_frames <= 2 * cfg.trim_frames:
        raise EmptyOutputError(f"{n_frames} frames leave nothing after trimming {cfg.trim_frames} per side")
    values = spectrum[:, cfg.trim_frames: n_frames - cfg.trim_frames]
    freqs = np.arange(cfg.n_bins) * trace.sample_rate_hz / cfg.window_samples
    if freqs[-1] > cfg.max_freq_hz:
        logging.warning(f"STFT top bin {freqs[-1]:.2f} Hz exceeds max_freq_hz={cfg.max_freq_hz}")
    return Spectrogram(values, freqs, cfg.hop_samples / trace.sample_rate_hz, electrode_id)


# ----------------- Morlet -----------------
def envelope_width(f: float, c: float) -> float:
    """B_c = c / f, the Gaussian standard deviation in seconds."""
    return c / f


def morlet_wavelet(
    f: float, c: float, sample_rate_hz: float, support_sigmas: float = 5.0, max_half_width: int = None
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Sampled Morlet wavelet psi_{c,f}(t) on a symmetric grid.

    The support is ``+- support_sigmas * B_c``, optionally capped at
    ``max_half_width`` samples.

    Returns:
        (t, psi): sample times in seconds and complex wavelet values.
    """
    width = envelope_width(f, c)
    half = int(np.ceil(support_sigmas * width * sample_rate_hz))
    if max_half_width is not None:
        half = min(half, max_half_width)
    t = np.arange(-half, half + 1) / sample_rate_hz
    psi = (
        np.exp(-(t ** 2) / (2.0 * width ** 2)) * np.exp(2j * np.pi * f * t) / (width * np.sqrt(2.0 * np.pi))
    )
    return t, psi


def _check_morlet(f: float, c: float, sample_rate_hz: float) -> None:
    if not f > 0 or c < 1:
        raise ParameterError(f"Morlet needs f > 0 and c >= 1, got f={f}, c={c}")
    if f >= sample_rate_hz / 2.0:
        raise ParameterError(f"frequency {f} Hz is at or above Nyquist ({sample_rate_hz / 2.0} Hz)")


def _morlet_batch(
    samples: np.ndarray, f: float, c: float, sample_rate_hz: float, support_sigmas: float
) -> np.ndarray:
    n = samples.shape[-1]
    # taps farther than the trace length never reach a same-length output sample
    _, psi = morlet_wavelet(f, c, sample_rate_hz, support_sigmas, max_half_width=n - 1)
    return sps.fftconvolve(samples, psi[None, :], mode="same", axes=-1) / sample_rate_hz


def morlet_response(trace: RawTrace, f: float, c: float, support_sigmas: float = 5.0) -> np.ndarray:
    """
    Complex convolution x * psi_{c,f}, same length as the trace.

    The discrete sum is scaled by 1 / rate so it approximates the
    continuous convolution integral.
    """
    _check_morlet(f, c, trace.sample_rate_hz)
    return _morlet_batch(trace.samples[None, :], f, c, trace.sample_rate_hz, support_sigmas)[0]


# ----------------- Superlet -----------------
def adaptive_order(f: float, cfg: SuperletConfig) -> int:
    """
    Superlet order rising linearly from o_min at f_min to o_max at f_max,
    rounded half up.
    """
    f_min, f_max = cfg.f_min_hz, cfg.f_max_hz
    tol = 1e-9 * max(1.0, abs(f_max))
    if f < f_min - tol or f > f_max + tol:
        raise ParameterError(f"frequency {f} Hz outside [{f_min}, {f_max}] Hz")
    if f_max == f_min:
        return cfg.o_min
    fraction = min(max((f - f_min) / (f_max - f_min), 0.0), 1.0)
    return int(cfg.o_min + np.floor((cfg.o_max - cfg.o_min) * fraction + 0.5 + 1e-9))


def decimate_trim(mat: np.ndarray, factor: int, trim: int) -> np.ndarray:
    """
    Average non-overlapping ``factor``-wide column blocks, then drop
    ``trim`` columns from each side.
    """
    mat = np.asarray(mat)
    if factor < 1 or trim < 0:
        raise ParameterError("decimation factor must be >= 1 and trim >= 0")
    n, m = mat.shape
    n_blocks = m // factor
    if m <= 2 * trim * factor or n_blocks - 2 * trim < 1:
        raise EmptyOutputError(f"{m} columns leave nothing after decimating by {factor} and trimming {trim}")
    blocks = mat[:, : n_blocks * factor].reshape(n, n_blocks, factor).mean(axis=-1)
    return blocks[:, trim: n_blocks - trim]


def superlet_batch(samples: np.ndarray, sample_rate_hz: float, cfg: SuperletConfig) -> np.ndarray:
    """
    Undecimated superlet magnitudes for a stack of equal-length traces.

    Args:
        samples (np.ndarray): B x L traces.

    Returns:
        np.ndarray: B x n_freqs x L geometric means of sqrt(2) * |x * psi_{c_i,f}|.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    batch, length = samples.shape
    out = np.empty((batch, len(cfg.foi_hz), length))
    with np.errstate(divide="ignore"):
        for row, f in enumerate(cfg.foi_hz):
            _check_morlet(f, cfg.c1, sample_rate_hz)
            order = adaptive_order(f, cfg)
            log_sum = np.zeros((batch, length))
            for i in range(1, order + 1):
                response = _morlet_batch(samples, f, cfg.c1 * i, sample_rate_hz, cfg.support_sigmas)
                log_sum += np.log(SQRT2 * np.abs(response))
            out[:, row, :] = np.exp(log_sum / order)
    return out


def superlet_transform(trace: RawTrace, cfg: SuperletConfig = SuperletConfig(), electrode_id: str = "") -> Spectrogram:
    """Adaptive multiplicative superlet spectrogram, decimated and edge-trimmed."""
    full = superlet_batch(trace.samples[None, :], trace.sample_rate_hz, cfg)[0]
    values = decimate_trim(full, cfg.decimation, cfg.trim_frames)
    return Spectrogram(values, np.asarray(cfg.foi_hz), cfg.decimation / trace.sample_rate_hz, electrode_id)


def superlet_transform_many(samples: np.ndarray, sample_rate_hz: float, cfg: SuperletConfig) -> np.ndarray:
    """Decimated, trimmed superlet values for a B x L stack; shares each kernel FFT across the batch."""
    full = superlet_batch(samples, sample_rate_hz, cfg)
    return np.stack([decimate_trim(mat, cfg.decimation, cfg.trim_frames) for mat in full])


def stft_many(samples: np.ndarray, sample_rate_hz: float, cfg: StftConfig) -> np.ndarray:
    return np.stack([stft(RawTrace(x, sample_rate_hz), cfg).values for x in np.atleast_2d(samples)])


def compute_spectrogram(
    trace: RawTrace, method: str, stft_cfg: StftConfig, superlet_cfg: SuperletConfig, electrode_id: str = ""
) -> Spectrogram:
    if method == "stft":
        return stft(trace, stft_cfg, electrode_id)
    if method == "superlet":
        return superlet_transform(trace, superlet_cfg, electrode_id)
    raise ParameterError(f"unknown transform method {method!r}")


def compute_spectrogram_stack(
    samples: np.ndarray, sample_rate_hz: float, method: str, stft_cfg: StftConfig, superlet_cfg: SuperletConfig
) -> np.ndarray:
    """B x n x m spectrogram values for a stack of equal-length windows."""
    if method == "stft":
        return stft_many(samples, sample_rate_hz, stft_cfg)
    if method == "superlet":
        return superlet_transform_many(samples, sample_rate_hz, superlet_cfg)
    raise ParameterError(f"unknown transform method {method!r}")
