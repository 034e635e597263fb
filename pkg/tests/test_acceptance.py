"""
End-to-end runs of the desk profile through the command line. Slow: run with
``pytest -m slow``.
"""
import os

import numpy as np
import pandas as pd
import pytest

from seeg_pretrain.components.model_trainer import load_encoder_checkpoint
from seeg_pretrain.configuration.run_config import RunConfig
from seeg_pretrain.constants import (
    CHECKPOINT_FILE_NAME,
    EFFICIENCY_FILE_NAME,
    EVAL_REPORT_FILE_NAME,
    SUMMARY_LONG_FILE_NAME,
    SUMMARY_TABLE_FILE_NAME,
    TRAINING_CURVE_FILE_NAME,
)
from seeg_pretrain.pipeline.cli import EXIT_OK, dispatch
from seeg_pretrain.processing.synthetic import responsive_set

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def desk_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("desk")
    synth, spectra, ckpt = (str(root / name) for name in ("synth", "spectra", "ckpt"))
    assert dispatch(["synth", "--out", synth, "--seed", "0"]) == EXIT_OK
    assert dispatch(["transform", "--out", spectra, "--in", synth, "--seed", "0"]) == EXIT_OK
    assert dispatch(["pretrain", "--out", ckpt, "--data", spectra, "--seed", "0"]) == EXIT_OK
    return root


class TestDeskPretraining:
    def test_validation_loss_drops(self, desk_run):
        curve = pd.read_csv(desk_run / "ckpt" / TRAINING_CURVE_FILE_NAME)
        checked = curve.dropna(subset=["val_total"]).set_index("step")["val_total"]
        assert checked.iloc[-1] <= 0.7 * checked.loc[50]

    def test_checkpoint_holds_best_weights(self, desk_run):
        curve = pd.read_csv(desk_run / "ckpt" / TRAINING_CURVE_FILE_NAME)
        checked = curve.dropna(subset=["val_total"])
        _, _, meta = load_encoder_checkpoint(str(desk_run / "ckpt" / CHECKPOINT_FILE_NAME))
        best = checked.loc[checked["val_total"].idxmin()]
        assert meta["best_step"] == best["step"]
        assert meta["best_val_total"] == pytest.approx(best["val_total"])


class TestEndToEndDecoding:
    @pytest.fixture(scope="class")
    def finetune_run(self, desk_run):
        cfg = RunConfig.resolve(overrides={"run.seed": 0})
        electrodes = ",".join(responsive_set(cfg.synth_config()))
        out = str(desk_run / "finetune")
        code = dispatch([
            "finetune", "--out", out, "--in", str(desk_run / "synth"), "--seed", "0",
            "--checkpoint", str(desk_run / "ckpt" / CHECKPOINT_FILE_NAME), "--electrodes", electrodes,
        ])
        assert code == EXIT_OK
        return pd.read_csv(os.path.join(out, EVAL_REPORT_FILE_NAME), dtype={"electrode": str})

    def test_every_decoder_reports(self, finetune_run):
        assert {"lin_time_5s", "deep_5ff", "pretrained", "random"} <= set(finetune_run["model"])
        assert finetune_run["auc"].between(0.0, 1.0).all()
        assert set(finetune_run["seed"]) == {0, 1, 2}

    def test_decoder_ordering(self, finetune_run):
        mean = finetune_run.groupby(["model", "mode"])["auc"].mean()
        finetuned = mean[("pretrained", "finetune")]
        assert finetuned > mean[("pretrained", "frozen")]
        assert mean[("pretrained", "frozen")] >= mean[("deep_5ff", "baseline")]
        assert mean[("deep_5ff", "baseline")] > mean[("lin_time_5s", "baseline")]
        assert finetuned >= mean[("random", "finetune")] + 0.05

    def test_report_summarises_run(self, desk_run, finetune_run):
        out = desk_run / "report"
        assert dispatch(["report", "--out", str(out), "--in", str(desk_run / "finetune")]) == EXIT_OK
        summary = pd.read_csv(out / SUMMARY_LONG_FILE_NAME)
        assert int(summary["n"].sum()) == len(finetune_run)
        row = summary[(summary["model"] == "pretrained") & (summary["mode"] == "finetune")].iloc[0]
        expected = finetune_run[(finetune_run["model"] == "pretrained") & (finetune_run["mode"] == "finetune")]["auc"]
        assert row["auc_sd"] == pytest.approx(np.std(expected, ddof=1))
        table = pd.read_csv(out / SUMMARY_TABLE_FILE_NAME)
        assert "±" in table.loc[0, "onset"]


class TestDataEfficiency:
    @pytest.fixture(scope="class")
    def sweep_run(self, desk_run):
        session = ["--set", "synth.cover_sizes=true", "--set", "synth.n_shafts=1"]
        synth = str(desk_run / "long_synth")
        assert dispatch(["synth", "--out", synth, "--seed", "1", *session]) == EXIT_OK
        cfg = RunConfig.resolve(overrides={"run.seed": 1, "synth.cover_sizes": True, "synth.n_shafts": 1})
        electrodes = ",".join(responsive_set(cfg.synth_config()))
        out = str(desk_run / "sweep")
        code = dispatch([
            "sweep", "--out", out, "--in", synth, "--seed", "1",
            "--checkpoint", str(desk_run / "ckpt" / CHECKPOINT_FILE_NAME), "--electrodes", electrodes,
            "--set", "decode.kinds=deep_5ff", "--set", "decode.modes=finetune", "--set", "decode.include_random=false",
        ])
        assert code == EXIT_OK
        return pd.read_csv(os.path.join(out, EFFICIENCY_FILE_NAME), dtype={"electrode": str})

    def test_sizes_are_not_clipped(self, sweep_run):
        assert set(sweep_run["size"]) == {150, 1000}

    def test_finetuned_at_150_matches_deep_baseline_at_1000(self, sweep_run):
        curve = sweep_run.groupby(["model", "mode", "size"])["auc_mean"].mean()
        assert curve[("pretrained", "finetune", 150)] >= curve[("deep_5ff", "baseline", 1000)]
