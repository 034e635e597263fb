"""
Synthetic SEEG-like recordings and decodable tasks.

Each trace is 1/f-shaped Gaussian noise plus Poisson-timed Gabor bursts and
an optional line-noise sinusoid. A fraction of electrodes also carries a
phase-locked high-gamma burst after every stimulus event.
"""
import string
from typing import List, Tuple

import numpy as np
from scipy import fft as sp_fft
from sklearn.model_selection import train_test_split

from seeg_pretrain.constants import SIGNAL_LINE_HZ, SPLIT_NAMES
from seeg_pretrain.entity.config_entity import SynthConfig
from seeg_pretrain.entity.data_entity import ProbeLayout, RawTrace, Recording, StimulusTrack, TaskDataset
from seeg_pretrain.exception import GenerationError, ParameterError
from seeg_pretrain.logger import logging

BURST_FREQ_RANGE_HZ: Tuple[float, float] = (4.0, 150.0)
BURST_CYCLES_RANGE: Tuple[float, float] = (3.0, 7.0)
NEGATIVE_GRID_STEP_S: float = 0.1
MIN_EXAMPLES_PER_CLASS: int = 5
TRAIN_FRACTION: float = 0.8
DURATION_SLACK: float = 1.15


def electrode_names(n_shafts: int, electrodes_per_shaft: int) -> ProbeLayout:
    """Shafts lettered A, B, ... with contacts numbered from 1 (A1, A2, ...)."""
    letters = string.ascii_uppercase
    shafts = []
    for s in range(n_shafts):
        prefix = letters[s % 26] * (s // 26 + 1)
        shafts.append(tuple(f"{prefix}{i + 1}" for i in range(electrodes_per_shaft)))
    return ProbeLayout(tuple(shafts))


def colored_noise(n_samples: int, sample_rate_hz: float, slope: float, std: float, rng: np.random.Generator) -> np.ndarray:
    """Gaussian noise whose power spectrum falls as f**slope, scaled to ``std``."""
    spectrum = sp_fft.rfft(rng.standard_normal(n_samples))
    freqs = sp_fft.rfftfreq(n_samples, 1.0 / sample_rate_hz)
    gain = np.zeros_like(freqs)
    gain[1:] = freqs[1:] ** (slope / 2.0)
    noise = sp_fft.irfft(spectrum * gain, n_samples)
    spread = noise.std()
    return noise * (std / spread) if spread > 0 else noise


def gabor_bursts(
    n_samples: int, sample_rate_hz: float, rate_hz: float, amplitude: float, rng: np.random.Generator
) -> np.ndarray:
    """Poisson-timed Gabor atoms with random center frequency, width and phase."""
    out = np.zeros(n_samples)
    duration = n_samples / sample_rate_hz
    count = rng.poisson(rate_hz * duration)
    centers = rng.uniform(0.0, duration, count)
    freqs = rng.uniform(*BURST_FREQ_RANGE_HZ, count)
    cycles = rng.uniform(*BURST_CYCLES_RANGE, count)
    phases = rng.uniform(0.0, 2.0 * np.pi, count)
    gains = rng.uniform(0.5, 1.5, count)
    for t0, f, c, phase, gain in zip(centers, freqs, cycles, phases, gains):
        sigma = c / (2.0 * np.pi * f)
        lo = max(0, int(np.floor((t0 - 4.0 * sigma) * sample_rate_hz)))
        hi = min(n_samples, int(np.ceil((t0 + 4.0 * sigma) * sample_rate_hz)) + 1)
        if lo >= hi:
            continue
        t = np.arange(lo, hi) / sample_rate_hz - t0
        out[lo:hi] += amplitude * gain * np.exp(-(t ** 2) / (2.0 * sigma ** 2)) * np.cos(2.0 * np.pi * f * t + phase)
    return out


def evoked_response(sample_rate_hz: float, freq_hz: float, duration_s: float) -> np.ndarray:
    """Unit-peak Hann-windowed sine starting at phase zero."""
    n = max(1, int(round(duration_s * sample_rate_hz)))
    t = np.arange(n) / sample_rate_hz
    return np.hanning(n) * np.sin(2.0 * np.pi * freq_hz * t)


def stimulus_track(cfg: SynthConfig, rng: np.random.Generator) -> StimulusTrack:
    """Events spaced by min separation plus an exponential gap, intensities ~ N(1, sd) clipped at 0."""
    times = []
    t = cfg.min_event_separation_s
    while t < cfg.duration_s - cfg.min_event_separation_s:
        times.append(t)
        t += cfg.min_event_separation_s + rng.exponential(cfg.mean_extra_separation_s)
    times = np.asarray(times)
    intensities = np.clip(rng.normal(1.0, cfg.intensity_sd, times.size), 0.0, None)
    return StimulusTrack(times, cfg.min_event_separation_s, intensities)


def responsive_electrodes(cfg: SynthConfig, layout: ProbeLayout, rng: np.random.Generator) -> List[str]:
    """
    Drawn from the interior contacts, the ones re-referencing keeps.
    Layouts without interior contacts draw from all.
    """
    ids = layout.interior_ids or layout.electrode_ids
    count = int(round(cfg.responsive_fraction * len(ids)))
    chosen = rng.choice(len(ids), size=count, replace=False)
    return sorted(ids[i] for i in chosen)


def synth_trace(
    cfg: SynthConfig,
    seed: np.random.SeedSequence,
    track: StimulusTrack,
    responsive: bool,
) -> RawTrace:
    rng = np.random.default_rng(seed)
    n = int(round(cfg.duration_s * cfg.sample_rate_hz))
    samples = colored_noise(n, cfg.sample_rate_hz, cfg.spectral_slope, cfg.noise_std, rng)
    samples += gabor_bursts(n, cfg.sample_rate_hz, cfg.burst_rate_hz, cfg.burst_amp * cfg.noise_std, rng)
    # drawn unconditionally so the line amplitude never shifts the rest of the stream
    line_phase = rng.uniform(0.0, 2.0 * np.pi)
    if cfg.line_noise_amp > 0:
        t = np.arange(n) / cfg.sample_rate_hz
        samples += cfg.line_noise_amp * np.sin(2.0 * np.pi * SIGNAL_LINE_HZ * t + line_phase)
    if responsive:
        kernel = evoked_response(cfg.sample_rate_hz, cfg.response_freq_hz, cfg.response_duration_s)
        scale = cfg.response_snr * cfg.noise_std
        for t_event, intensity in zip(track.event_times_s, track.intensities):
            start = int(np.floor(t_event * cfg.sample_rate_hz))
            stop = min(n, start + kernel.size)
            samples[start:stop] += scale * intensity * kernel[: stop - start]
    return RawTrace(samples, cfg.sample_rate_hz)


def _session_plan(cfg: SynthConfig):
    layout = electrode_names(cfg.n_shafts, cfg.electrodes_per_shaft)
    root = np.random.SeedSequence(cfg.seed)
    event_seed, *electrode_seeds = root.spawn(len(layout.electrode_ids) + 1)
    event_rng = np.random.default_rng(event_seed)
    track = stimulus_track(cfg, event_rng)
    responsive = responsive_electrodes(cfg, layout, event_rng)
    return layout, electrode_seeds, track, responsive


def responsive_set(cfg: SynthConfig) -> List[str]:
    """Electrodes that carry the evoked response for ``cfg`` (no traces are generated)."""
    return _session_plan(cfg)[3]


def duration_for_train_size(cfg: SynthConfig, n_train: int, context_s: float = 5.0) -> float:
    """
    Recording length (s) expected to yield ``n_train`` onset training
    examples, from the mean event period, padded by ``DURATION_SLACK``.
    """
    if n_train < 1:
        raise ParameterError("n_train must be positive")
    period = cfg.min_event_separation_s + cfg.mean_extra_separation_s
    n_events = int(np.ceil(n_train / (2.0 * TRAIN_FRACTION)))
    return float(np.ceil(DURATION_SLACK * (n_events * period + 2.0 * cfg.min_event_separation_s + context_s)))


def generate_recording(cfg: SynthConfig = SynthConfig()) -> Tuple[Recording, StimulusTrack]:
    """
    Seed-deterministic synthetic recording.

    Per-electrode streams are spawned from one ``SeedSequence`` so each
    trace depends only on (seed, electrode index), whatever order or worker
    generates it.
    """
    if cfg.duration_s < 20.0:
        logging.warning(f"synthetic duration {cfg.duration_s} s is below 20 s; tasks may be too small")
    layout, electrode_seeds, track, responsive = _session_plan(cfg)
    traces = {
        eid: synth_trace(cfg, seed, track, eid in responsive)
        for eid, seed in zip(layout.electrode_ids, electrode_seeds)
    }
    logging.info(
        f"Generated {len(traces)} electrodes x {cfg.duration_s} s, {track.event_times_s.size} events, "
        f"{len(responsive)} responsive: {responsive}"
    )
    return Recording(traces, layout, session_id=f"synth-{cfg.seed}"), track


# ----------------- Tasks -----------------
def _context_fits(times: np.ndarray, n_samples: int, sample_rate_hz: float, context_s: float) -> np.ndarray:
    n = int(np.floor(context_s * sample_rate_hz + 1e-9))
    starts = np.floor(times * sample_rate_hz).astype(np.int64) - n // 2
    return (starts >= 0) & (starts + n <= n_samples)


def _onset_examples(rec: Recording, track: StimulusTrack, context_s: float, guard_s: float, rng):
    events = track.event_times_s
    positives = events[_context_fits(events, rec.n_samples, rec.sample_rate_hz, context_s)]
    grid = np.arange(0.0, rec.duration_s, NEGATIVE_GRID_STEP_S)
    grid = grid[_context_fits(grid, rec.n_samples, rec.sample_rate_hz, context_s)]
    if events.size:
        distance = np.min(np.abs(grid[:, None] - events[None, :]), axis=1)
        grid = grid[distance >= guard_s]
    if grid.size < positives.size:
        raise GenerationError(f"only {grid.size} negative centers for {positives.size} positives")
    negatives = np.sort(rng.choice(grid, size=positives.size, replace=False))
    return positives, negatives


def _intensity_examples(rec: Recording, track: StimulusTrack, context_s: float, rng):
    if track.intensities is None:
        raise GenerationError("the intensity task needs per-event intensities")
    fits = _context_fits(track.event_times_s, rec.n_samples, rec.sample_rate_hz, context_s)
    times, levels = track.event_times_s[fits], track.intensities[fits]
    if times.size < 2:
        raise GenerationError("too few events for the intensity task")
    mu, sd = levels.mean(), levels.std()
    high, low = times[levels >= mu + sd], times[levels <= mu - sd]
    n = min(high.size, low.size)
    high = np.sort(rng.choice(high, size=n, replace=False))
    low = np.sort(rng.choice(low, size=n, replace=False))
    return high, low


def make_task_dataset(
    rec: Recording,
    track: StimulusTrack,
    context_s: float = 5.0,
    guard_s: float = 1.0,
    seed: int = 0,
    task: str = "onset",
) -> TaskDataset:
    """
    Balanced binary task over the recording's shared time axis.

    ``onset``: positives centered on events, negatives on a 0.1 s grid at
    least ``guard_s`` from every event. ``intensity``: events at least one
    standard deviation above versus below the mean intensity. Every context
    fits inside the recording. Splits are stratified 80/10/10.
    """
    rng = np.random.default_rng(seed)
    if task == "onset":
        positives, negatives = _onset_examples(rec, track, context_s, guard_s, rng)
    elif task == "intensity":
        positives, negatives = _intensity_examples(rec, track, context_s, rng)
    else:
        raise ParameterError(f"unknown task {task!r}")
    if positives.size < MIN_EXAMPLES_PER_CLASS:
        raise GenerationError(f"{positives.size} examples per class, need at least {MIN_EXAMPLES_PER_CLASS}")
    times = np.concatenate([positives, negatives])
    labels = np.concatenate([np.ones(positives.size, dtype=np.int64), np.zeros(negatives.size, dtype=np.int64)])
    order = np.argsort(times, kind="stable")
    times, labels = times[order], labels[order]

    index = np.arange(times.size)
    train, rest = train_test_split(index, test_size=0.2, stratify=labels, random_state=seed)
    val, test = train_test_split(rest, test_size=0.5, stratify=labels[rest], random_state=seed)
    splits = np.empty(times.size, dtype=object)
    for name, idx in zip(SPLIT_NAMES, (train, val, test)):
        splits[idx] = name
    logging.info(f"Task {task}: {positives.size} positives, {negatives.size} negatives, splits {len(train)}/{len(val)}/{len(test)}")
    return TaskDataset(task, times, labels, splits, context_s)
