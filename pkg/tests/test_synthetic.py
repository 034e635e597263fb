from dataclasses import replace

import numpy as np
import pytest
from scipy import signal as sp_signal

from seeg_pretrain.entity.config_entity import DecodeConfig, SynthConfig
from seeg_pretrain.entity.data_entity import ProbeLayout, RawTrace, Recording, StimulusTrack, TaskDataset
from seeg_pretrain.exception import GenerationError, ParameterError, ShapeError
from seeg_pretrain.processing.signal_processing import laplacian_rereference, remove_line_noise
from seeg_pretrain.processing.synthetic import (
    colored_noise,
    duration_for_train_size,
    electrode_names,
    generate_recording,
    make_task_dataset,
    responsive_set,
    stimulus_track,
)


def _flat_recording(duration_s: float, rate: float = 64.0) -> Recording:
    n = int(duration_s * rate)
    return Recording({"A1": RawTrace(np.zeros(n), rate)}, ProbeLayout((("A1",),)))


class TestNames:
    def test_shaft_lettering(self):
        layout = electrode_names(2, 3)
        assert layout.shafts == (("A1", "A2", "A3"), ("B1", "B2", "B3"))

    def test_more_than_26_shafts(self):
        assert electrode_names(27, 1).shafts[-1] == ("AA1",)


class TestGenerateRecording:
    def test_same_seed_is_bitwise_identical(self, small_synth_cfg):
        first, track_a = generate_recording(small_synth_cfg)
        second, track_b = generate_recording(small_synth_cfg)
        for eid in first.electrode_ids:
            assert np.array_equal(first.traces[eid].samples, second.traces[eid].samples)
        np.testing.assert_array_equal(track_a.event_times_s, track_b.event_times_s)

    def test_different_seed_differs(self, small_synth_cfg):
        first, _ = generate_recording(small_synth_cfg)
        second, _ = generate_recording(replace(small_synth_cfg, seed=4))
        assert not np.array_equal(first.traces["A1"].samples, second.traces["A1"].samples)

    def test_layout_and_duration(self, small_synth_cfg):
        rec, track = generate_recording(small_synth_cfg)
        assert rec.electrode_ids == ["A1", "A2", "A3", "A4", "A5", "B1", "B2", "B3", "B4", "B5"]
        assert rec.n_samples == int(120 * 512)
        assert np.all(np.diff(track.event_times_s) >= small_synth_cfg.min_event_separation_s - 1e-9)

    def test_responsive_fraction(self, small_synth_cfg):
        assert len(responsive_set(small_synth_cfg)) == 2

    @pytest.mark.parametrize("seed", range(10))
    def test_responsive_electrodes_survive_rereferencing(self, seed):
        cfg = SynthConfig(n_shafts=3, electrodes_per_shaft=6, duration_s=60.0, sample_rate_hz=256.0, seed=seed)
        rec, _ = generate_recording(cfg)
        survivors = set(laplacian_rereference(rec).electrode_ids)
        chosen = responsive_set(cfg)
        assert len(chosen) == 5
        assert set(chosen) <= survivors

    def test_short_shafts_draw_from_every_contact(self):
        cfg = SynthConfig(n_shafts=2, electrodes_per_shaft=2, duration_s=60.0, sample_rate_hz=256.0, responsive_fraction=0.5)
        assert len(responsive_set(cfg)) == 2

    def test_default_layout_leaves_enough_electrodes(self):
        cfg = SynthConfig()
        assert len(electrode_names(cfg.n_shafts, cfg.electrodes_per_shaft).interior_ids) >= DecodeConfig().top_k

    def test_background_spectral_slope(self, rng):
        x = colored_noise(2 ** 16, 512.0, -1.0, 10.0, rng)
        freqs, power = sp_signal.welch(x, fs=512.0, nperseg=4096)
        band = (freqs >= 1.0) & (freqs <= 100.0)
        slope = np.polyfit(np.log(freqs[band]), np.log(power[band]), 1)[0]
        assert abs(slope - (-1.0)) <= 0.3
        assert x.std() == pytest.approx(10.0)

    def test_evoked_band_power(self, small_synth_cfg):
        rec, track = generate_recording(small_synth_cfg)
        eid = responsive_set(small_synth_cfg)[0]
        rate = small_synth_cfg.sample_rate_hz
        sos = sp_signal.butter(4, [70.0, 110.0], btype="bandpass", fs=rate, output="sos")
        band = sp_signal.sosfiltfilt(sos, rec.traces[eid].samples)
        width = int(0.3 * rate)

        def power_at(times):
            starts = (np.asarray(times) * rate).astype(int)
            return np.mean([np.mean(band[s:s + width] ** 2) for s in starts])

        events = track.event_times_s
        assert power_at(events) > 1.5 * power_at(events - 1.0)

    def test_line_noise_is_removable(self, small_synth_cfg):
        quiet = replace(small_synth_cfg, line_noise_amp=0.0)
        with_line, _ = generate_recording(small_synth_cfg)
        without, _ = generate_recording(quiet)
        a = remove_line_noise(with_line.traces["A1"]).samples
        b = remove_line_noise(without.traces["A1"]).samples
        middle = slice(20 * 512, 100 * 512)
        rms = np.sqrt(np.mean((a[middle] - b[middle]) ** 2))
        assert rms <= 0.02 * np.sqrt(np.mean(b[middle] ** 2))
        assert not np.allclose(with_line.traces["A1"].samples, without.traces["A1"].samples)


class TestTaskDataset:
    @pytest.fixture
    def track(self):
        return StimulusTrack(np.arange(100) * 4.0 + 5.0, 2.5, np.linspace(0.0, 2.0, 100))

    def test_balanced_onset_task(self, track):
        ds = make_task_dataset(_flat_recording(410.0), track, seed=1)
        assert int(ds.labels.sum()) == 100
        assert len(ds) == 200
        assert ds.split_sizes() == (160, 20, 20)

    def test_negatives_respect_guard(self, track):
        ds = make_task_dataset(_flat_recording(410.0), track, guard_s=1.0, seed=2)
        negatives = ds.center_times_s[ds.labels == 0]
        distance = np.min(np.abs(negatives[:, None] - track.event_times_s[None, :]), axis=1)
        assert distance.min() >= 1.0 - 1e-9

    def test_contexts_fit_inside_recording(self, track):
        ds = make_task_dataset(_flat_recording(410.0), track, seed=3)
        assert ds.center_times_s.min() - 2.5 >= 0.0
        assert ds.center_times_s.max() + 2.5 <= 410.0

    def test_splits_are_stratified(self, track):
        ds = make_task_dataset(_flat_recording(410.0), track, seed=4)
        for split in ("train", "val", "test"):
            labels = ds.labels[ds.indices(split)]
            assert labels.sum() * 2 == labels.size

    def test_intensity_task(self, track):
        ds = make_task_dataset(_flat_recording(410.0), track, seed=5, task="intensity")
        assert int(ds.labels.sum()) * 2 == len(ds)
        assert ds.task_name == "intensity"

    def test_too_few_events(self):
        track = StimulusTrack(np.array([5.0, 9.0, 13.0]), 2.5)
        with pytest.raises(GenerationError):
            make_task_dataset(_flat_recording(30.0), track)

    def test_unknown_task(self, track):
        with pytest.raises(ParameterError):
            make_task_dataset(_flat_recording(410.0), track, task="pitch")

    def test_seed_decides_splits(self, track):
        a = make_task_dataset(_flat_recording(410.0), track, seed=6)
        b = make_task_dataset(_flat_recording(410.0), track, seed=6)
        np.testing.assert_array_equal(a.splits, b.splits)
        np.testing.assert_array_equal(a.center_times_s, b.center_times_s)

    @pytest.mark.parametrize("seed", range(5))
    def test_duration_covers_training_size(self, seed):
        cfg = SynthConfig(duration_s=1.0, seed=seed)
        cfg = replace(cfg, duration_s=duration_for_train_size(cfg, 300))
        track = stimulus_track(cfg, np.random.default_rng(seed))
        ds = make_task_dataset(_flat_recording(cfg.duration_s), track, seed=seed)
        assert ds.split_sizes()[0] >= 300

    def test_duration_needs_positive_size(self):
        with pytest.raises(ParameterError):
            duration_for_train_size(SynthConfig(), 0)

    def test_examples_are_full_contexts(self, track):
        rec = _flat_recording(410.0)
        ds = make_task_dataset(rec, track, seed=7)
        assert {ex.context.size for ex in ds.examples(rec, "A1")} == {5 * 64}

    @pytest.mark.parametrize("center", [1.0, 408.0])
    def test_examples_reject_contexts_outside_trace(self, center):
        rec = _flat_recording(410.0)
        ds = TaskDataset("onset", np.array([100.0, center]), np.array([1, 0]), np.array(["train", "test"], dtype=object))
        with pytest.raises(ShapeError):
            list(ds.examples(rec, "A1"))
