from dataclasses import replace

import numpy as np
import pandas as pd
import pytest
import torch

from seeg_pretrain.entity.config_entity import DecodeConfig, EncoderConfig, StftConfig
from seeg_pretrain.entity.data_entity import EvalRecord, ProbeLayout, RawTrace, Recording, TaskDataset
from seeg_pretrain.exception import (
    DegenerateTaskError,
    ElectrodeSelectionError,
    LengthError,
    ParameterError,
    ShapeError,
    UndefinedMetricError,
)
from seeg_pretrain.modeling.decoding import (
    ExampleBank,
    baseline_input_dim,
    build_baseline,
    center_mean,
    decoder_jobs,
    efficiency_sweep,
    extract_features,
    layerwise_probe,
    records_frame,
    select_top_electrodes,
    train_decoder,
)
from seeg_pretrain.modeling.encoder import SpectrogramEncoder
from seeg_pretrain.modeling.metrics import roc_auc
from seeg_pretrain.utils.main_utils import derive_seed

RATE = 256.0
STFT = StftConfig(window_samples=64, overlap_samples=56, n_bins=16, trim_frames=1)
ENCODER = EncoderConfig(n_layers=2, n_heads=2, d_hidden=16, d_ff=32, n_bins=16, max_frames=32)


def pair_count_auc(scores, labels) -> float:
    pos = [s for s, l in zip(scores, labels) if l == 1]
    neg = [s for s, l in zip(scores, labels) if l == 0]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p in pos for n in neg)
    return wins / (len(pos) * len(neg))


@pytest.fixture(scope="module")
def burst_task():
    """Label 1 centers carry a 40 Hz burst on A1; A2 is noise only."""
    rng = np.random.default_rng(7)
    n = int(200 * RATE)
    traces = {"A1": rng.normal(size=n), "A2": rng.normal(size=n)}
    times = np.arange(2.0, 198.0, 2.0)
    labels = np.arange(times.size) % 2
    t = np.arange(int(0.3 * RATE)) / RATE
    for center in times[labels == 1]:
        start = int(center * RATE) - t.size // 2
        traces["A1"][start:start + t.size] += 3.0 * np.sin(2 * np.pi * 40.0 * t)
    pair = (np.arange(times.size) // 2) % 10
    splits = np.where(pair < 8, "train", np.where(pair == 8, "val", "test")).astype(object)
    layout = ProbeLayout((("A1", "A2"),))
    rec = Recording({k: RawTrace(v, RATE) for k, v in traces.items()}, layout)
    return rec, TaskDataset("onset", times, labels, splits, context_s=1.0)


@pytest.fixture
def decode_cfg():
    return DecodeConfig(n_updates=60, val_every=20, batch_size=16, head_lr=1e-2, k=5, context_s=1.0)


def _bank(burst_task, electrode="A1"):
    rec, ds = burst_task
    return ExampleBank(ds, rec, electrode, stft_cfg=STFT)


class TestRocAuc:
    def test_hand_example(self):
        assert roc_auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == pytest.approx(0.75)

    def test_matches_pair_counting_with_ties(self, rng):
        for _ in range(20):
            scores = np.round(rng.random(40), 1)
            labels = rng.integers(0, 2, size=40)
            labels[:2] = [0, 1]
            assert roc_auc(scores, labels) == pytest.approx(pair_count_auc(scores, labels), abs=1e-12)

    def test_extremes(self):
        assert roc_auc([1, 2, 3, 4], [0, 0, 1, 1]) == 1.0
        assert roc_auc([4, 3, 2, 1], [0, 0, 1, 1]) == 0.0
        assert roc_auc([5, 5, 5, 5], [0, 1, 0, 1]) == 0.5

    def test_single_class(self):
        with pytest.raises(UndefinedMetricError):
            roc_auc([0.2, 0.3], [1, 1])

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            roc_auc([0.2, 0.3, 0.1], [0, 1])


class TestFeatures:
    def test_center_slice_mean(self):
        model = SpectrogramEncoder(ENCODER, seed=0).eval()
        y = torch.randn(3, 16, 23)
        with torch.no_grad():
            e = model.encode(y)
            torch.testing.assert_close(extract_features(model, y, k=5), e[:, 6:16].mean(dim=1))

    def test_window_too_wide(self):
        model = SpectrogramEncoder(ENCODER, seed=0).eval()
        with pytest.raises(LengthError):
            extract_features(model, torch.randn(16, 9), k=5)

    def test_center_mean(self):
        values = np.arange(10.0)[None, None, :]
        np.testing.assert_allclose(center_mean(values, 2), [[4.5]])


class TestBaselines:
    def test_default_input_dims(self):
        assert baseline_input_dim("lin_time_5s") == 10240
        assert baseline_input_dim("lin_time_250ms") == 512
        assert baseline_input_dim("lin_stft") == 40

    def test_deep_architecture(self):
        model = build_baseline("deep_5ff", input_dim=100, seed=1)
        widths = [m.out_features for m in model if isinstance(m, torch.nn.Linear)]
        assert widths == [1024, 512, 256, 128, 1]

    def test_linear_outputs_probabilities(self):
        model = build_baseline("lin_stft", seed=2)
        out = model(torch.randn(5, 40))
        assert out.shape == (5, 1)
        assert bool(((out > 0) & (out < 1)).all())

    def test_unknown_kind(self):
        with pytest.raises(ParameterError):
            build_baseline("svm")


class TestExampleBank:
    def test_input_shapes(self, burst_task):
        bank = _bank(burst_task)
        assert bank.baseline_inputs("lin_time_5s", 5).shape == (98, 256)
        assert bank.baseline_inputs("lin_time_250ms", 5).shape == (98, 64)
        assert bank.baseline_inputs("lin_stft", 5).shape == (98, 16)
        assert bank.spectrograms("stft").shape == (98, 16, 23)

    def test_raw_inputs_are_standardised(self, burst_task):
        raw = _bank(burst_task).raw()
        np.testing.assert_allclose(raw.mean(axis=1), 0.0, atol=1e-9)

    def test_subset_reuses_cache(self, burst_task):
        bank = _bank(burst_task)
        spectra = bank.spectrograms("stft")
        keep = np.zeros(98, dtype=bool)
        keep[:10] = True
        np.testing.assert_array_equal(bank.subset(keep).spectrograms("stft"), spectra[:10])


class TestTrainDecoder:
    def test_baseline_detects_burst(self, burst_task, decode_cfg):
        run = train_decoder(_bank(burst_task), "lin_stft", "baseline", replace(decode_cfg, n_updates=200), seed=0)
        assert run.record.auc >= 0.8
        assert (run.record.n_train, run.record.n_val, run.record.n_test) == (80, 10, 8)

    def test_same_seed_same_record(self, burst_task, decode_cfg):
        first = train_decoder(_bank(burst_task), "lin_time_250ms", "baseline", decode_cfg, seed=1)
        second = train_decoder(_bank(burst_task), "lin_time_250ms", "baseline", decode_cfg, seed=1)
        assert first.record == second.record

    def test_frozen_encoder_is_untouched(self, burst_task, decode_cfg):
        encoder = SpectrogramEncoder(ENCODER, seed=3)
        before = encoder.tensors()
        run = train_decoder(_bank(burst_task), "pretrained", "frozen", decode_cfg, 0, encoder, method="stft")
        after = run.model.encoder.tensors()
        assert all(torch.equal(before[k], after[k]) for k in before)

    def test_finetune_leaves_source_encoder_alone(self, burst_task, decode_cfg):
        encoder = SpectrogramEncoder(ENCODER, seed=3)
        before = encoder.tensors()
        run = train_decoder(_bank(burst_task), "pretrained", "finetune", decode_cfg, 0, encoder, method="stft")
        assert all(torch.equal(before[k], encoder.tensors()[k]) for k in before)
        assert 0.0 <= run.record.auc <= 1.0

    def test_random_encoder_needs_only_config(self, burst_task, decode_cfg):
        run = train_decoder(_bank(burst_task), "random", "frozen", decode_cfg, 0, encoder_cfg=ENCODER)
        assert run.record.model == "random"

    def test_random_encoder_seed_is_keyed_by_name_and_mode(self, burst_task, decode_cfg):
        run = train_decoder(_bank(burst_task), "random", "frozen", decode_cfg, 4, encoder_cfg=ENCODER)
        expected = SpectrogramEncoder(ENCODER, seed=derive_seed(4, "random", "frozen")).tensors()
        assert all(torch.equal(expected[k], run.model.encoder.tensors()[k]) for k in expected)
        assert derive_seed(4, "random", "frozen") != derive_seed(4, "random", "finetune")
        assert derive_seed(4, "lin_stft", "baseline") != derive_seed(4, "lin_ftst", "baseline")

    def test_baseline_in_encoder_mode(self, burst_task, decode_cfg):
        with pytest.raises(ParameterError):
            train_decoder(_bank(burst_task), "lin_stft", "frozen", decode_cfg, 0)

    def test_pretrained_without_encoder(self, burst_task, decode_cfg):
        with pytest.raises(ParameterError):
            train_decoder(_bank(burst_task), "pretrained", "frozen", decode_cfg, 0)

    def test_single_class_training_split(self, burst_task, decode_cfg):
        rec, ds = burst_task
        keep = (ds.labels == 1) | (ds.splits != "train")
        with pytest.raises(DegenerateTaskError):
            train_decoder(ExampleBank(ds.subset(keep), rec, "A1", stft_cfg=STFT), "lin_stft", "baseline", decode_cfg, 0)


class TestSelectionAndSweeps:
    def test_decoder_jobs(self):
        cfg = DecodeConfig(kinds=("lin_stft",), modes=("frozen",))
        assert decoder_jobs(cfg, has_encoder=True) == [("lin_stft", "baseline"), ("pretrained", "frozen"), ("random", "frozen")]
        assert decoder_jobs(replace(cfg, include_random=False), has_encoder=False) == [("lin_stft", "baseline")]

    def test_top_electrodes_with_ties(self):
        records = [
            EvalRecord("onset", e, "lin_time_5s", "baseline", s, 80, 10, 10, auc)
            for e, aucs in {"B2": (0.9, 0.7), "A1": (0.8, 0.8), "C3": (0.6, 0.6)}.items()
            for s, auc in enumerate(aucs)
        ]
        assert select_top_electrodes(records, "onset", k=2) == ["A1", "B2"]

    def test_too_few_electrodes(self):
        frame = records_frame([EvalRecord("onset", "A1", "lin_time_5s", "baseline", 0, 8, 1, 1, 0.5)])
        with pytest.raises(ElectrodeSelectionError):
            select_top_electrodes(frame, "onset", k=2)

    def test_efficiency_sweep(self, burst_task, decode_cfg):
        frame = efficiency_sweep(_bank(burst_task), [("lin_stft", "baseline")], [20, 40], [0, 1], decode_cfg)
        assert list(frame["size"]) == [20, 40]
        assert list(frame["n_seeds"]) == [2, 2]
        assert frame["auc_sd"].notna().all()

    def test_layerwise_probe(self, burst_task, decode_cfg):
        encoder = SpectrogramEncoder(ENCODER, seed=5)
        frame = layerwise_probe(_bank(burst_task), encoder, decode_cfg, seed=0)
        assert list(frame["layer"]) == [1, 2]
        assert isinstance(frame, pd.DataFrame)
