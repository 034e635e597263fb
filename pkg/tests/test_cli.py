import os
import sys
from pathlib import Path

import pandas as pd
import pytest

from seeg_pretrain.constants import (
    CHECKPOINT_FILE_NAME,
    EVAL_REPORT_FILE_NAME,
    LAYOUT_FILE_NAME,
    MANIFEST_FILE_NAME,
    RECORDING_FILE_NAME,
    RESOLVED_CONFIG_FILE_NAME,
    SUMMARY_LONG_FILE_NAME,
    SUMMARY_TABLE_FILE_NAME,
)
from seeg_pretrain.exception import ConfigError, SeegPretrainException
from seeg_pretrain.pipeline.cli import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, build_parser, dispatch, overrides_from_args, root_cause

SMALL_SYNTH = [
    "--set", "synth.n_shafts=2",
    "--set", "synth.electrodes_per_shaft=2",
    "--set", "synth.duration_s=120",
    "--set", "synth.sample_rate_hz=512",
]


TINY_MODEL = [
    "--set", "model.n_layers=1",
    "--set", "model.n_heads=2",
    "--set", "model.d_h=16",
    "--set", "model.d_ff=32",
    "--set", "pretrain.batch_size=2",
    "--set", "pretrain.n_steps=3",
    "--set", "pretrain.val_every=1",
]

QUICK_DECODE = [
    "--set", "decode.n_updates=4",
    "--set", "decode.val_every=2",
    "--set", "decode.seeds=0,1",
    "--set", "decode.kinds=lin_time_5s,lin_stft",
    "--set", "decode.include_random=false",
]


def _synth(out, *extra):
    return dispatch(["synth", "--out", str(out), "--seed", "3", *SMALL_SYNTH, *extra])


class TestParsing:
    def test_help(self, capsys):
        assert dispatch(["--help"]) == EXIT_OK
        assert "pretrain" in capsys.readouterr().out

    def test_missing_out(self):
        assert dispatch(["synth"]) == EXIT_USAGE

    def test_unknown_command(self):
        assert dispatch(["train", "--out", "x"]) == EXIT_USAGE

    def test_flags_become_keys(self):
        args = build_parser().parse_args(
            ["pretrain", "--out", "o", "--data", "d", "--seed", "4", "--mask-scheme", "adaptive", "--set", "model.d_h=32"]
        )
        overrides = overrides_from_args(args)
        assert overrides["run.seed"] == 4
        assert overrides["run.mask_scheme"] == "adaptive"
        assert overrides["paths.data"] == "d"
        assert overrides["model.d_h"] == "32"
        assert "run.profile" not in overrides

    def test_unknown_key(self, tmp_path):
        assert dispatch(["synth", "--out", str(tmp_path / "o"), "--set", "synth.depth=3"]) == EXIT_USAGE

    def test_set_without_equals(self, tmp_path):
        assert dispatch(["synth", "--out", str(tmp_path / "o"), "--set", "synth.seed"]) == EXIT_USAGE

    def test_root_cause_unwraps(self):
        inner = ConfigError("bad key")
        try:
            raise inner
        except ConfigError as e:
            wrapped = SeegPretrainException(SeegPretrainException(e, sys), sys)
        assert root_cause(wrapped) is inner


class TestSynthCommand:
    def test_writes_session_files(self, tmp_path):
        out = tmp_path / "synth"
        assert _synth(out) == EXIT_OK
        for name in (RECORDING_FILE_NAME, LAYOUT_FILE_NAME, MANIFEST_FILE_NAME, RESOLVED_CONFIG_FILE_NAME):
            assert (out / name).is_file()
        assert "run.seed=3" in (out / RESOLVED_CONFIG_FILE_NAME).read_text(encoding="utf-8").splitlines()

    def test_refuses_non_empty_output(self, tmp_path):
        out = tmp_path / "synth"
        assert _synth(out) == EXIT_OK
        assert _synth(out) == EXIT_USAGE

    def test_force_is_deterministic(self, tmp_path):
        out = tmp_path / "synth"
        assert _synth(out) == EXIT_OK
        first = (out / RECORDING_FILE_NAME).read_bytes()
        manifest = (out / MANIFEST_FILE_NAME).read_bytes()
        assert _synth(out, "--force") == EXIT_OK
        assert (out / RECORDING_FILE_NAME).read_bytes() == first
        assert (out / MANIFEST_FILE_NAME).read_bytes() == manifest

    def test_config_file_and_override(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("run.seed=9\nsynth.duration_s=60\n", encoding="utf-8")
        out = tmp_path / "synth"
        assert _synth(out, "--config", str(cfg)) == EXIT_OK
        lines = (out / RESOLVED_CONFIG_FILE_NAME).read_text(encoding="utf-8").splitlines()
        assert "run.seed=3" in lines
        assert "synth.duration_s=120.0" in lines


class TestOtherCommands:
    def test_finetune_needs_checkpoint(self, tmp_path):
        assert dispatch(["finetune", "--out", str(tmp_path / "o"), "--in", str(tmp_path)]) == EXIT_USAGE

    def test_missing_checkpoint_file(self, tmp_path):
        code = dispatch([
            "finetune", "--out", str(tmp_path / "o"), "--in", str(tmp_path), "--checkpoint", str(tmp_path / "none.ffck")
        ])
        assert code == EXIT_USAGE

    def test_missing_recording(self, tmp_path):
        assert dispatch(["transform", "--out", str(tmp_path / "o"), "--in", str(tmp_path / "none.ffrw")]) == EXIT_USAGE

    def test_missing_data_directory(self, tmp_path):
        assert dispatch(["pretrain", "--out", str(tmp_path / "o"), "--data", str(tmp_path / "none")]) == EXIT_USAGE

    def test_corrupt_recording_is_a_runtime_failure(self, tmp_path):
        bad = tmp_path / "bad.ffrw"
        bad.write_bytes(b"NOPE")
        assert dispatch(["transform", "--out", str(tmp_path / "o"), "--in", str(bad)]) == EXIT_RUNTIME

    def test_report_on_empty_run(self, tmp_path):
        run_dir = tmp_path / "run"
        run_dir.mkdir()
        out = tmp_path / "report"
        assert dispatch(["report", "--out", str(out), "--in", str(run_dir)]) == EXIT_OK
        assert pd.read_csv(out / SUMMARY_LONG_FILE_NAME).empty
        assert list(pd.read_csv(out / SUMMARY_TABLE_FILE_NAME).columns) == ["model", "mode"]

    @pytest.mark.parametrize("command", ["evaluate", "sweep"])
    def test_decoding_commands_accept_missing_checkpoint_flag(self, command):
        args = build_parser().parse_args([command, "--out", "o", "--in", "r"])
        assert args.checkpoint is None
        assert os.path.basename(args.inputs[0]) == "r"


class TestDefaultSession:
    @pytest.fixture(scope="class")
    def session(self, tmp_path_factory):
        out = tmp_path_factory.mktemp("default") / "synth"
        assert dispatch(["synth", "--out", str(out), "--set", "synth.duration_s=120"]) == EXIT_OK
        return out

    def _evaluate(self, session, out, *extra):
        code = dispatch(["evaluate", "--out", str(out), "--in", str(session), *QUICK_DECODE, *extra])
        assert code == EXIT_OK
        return pd.read_csv(out / EVAL_REPORT_FILE_NAME, dtype={"electrode": str})

    def test_evaluate_selects_top_k(self, session, tmp_path):
        report = self._evaluate(session, tmp_path / "eval")
        assert report["electrode"].nunique() == 10
        assert {"lin_time_5s", "lin_stft"} == set(report["model"])

    def test_top_k_is_clamped_to_surviving_electrodes(self, session, tmp_path):
        report = self._evaluate(session, tmp_path / "eval", "--set", "decode.top_k=20")
        assert sorted(report["electrode"].unique()) == [f"{s}{i}" for s in "ABC" for i in range(2, 6)]


PIPELINE = [
    ["synth", "--out", "synth", "--seed", "2",
     "--set", "synth.n_shafts=1", "--set", "synth.electrodes_per_shaft=5", "--set", "synth.duration_s=90"],
    ["transform", "--out", "spectra", "--in", "synth", "--seed", "2"],
    ["pretrain", "--out", "ckpt", "--data", "spectra", "--seed", "2", *TINY_MODEL],
    ["evaluate", "--out", "eval", "--in", "synth", "--seed", "2", "--checkpoint", os.path.join("ckpt", CHECKPOINT_FILE_NAME),
     *QUICK_DECODE, "--set", "decode.top_k=2"],
    ["id", "--out", "id", "--in", "synth", "--seed", "2", "--checkpoint", os.path.join("ckpt", CHECKPOINT_FILE_NAME),
     "--set", "analysis.n_components=8"],
]


class TestThreadCount:
    @pytest.fixture(scope="class")
    def outputs(self, tmp_path_factory):
        found = {}
        for threads in ("1", "4"):
            root = tmp_path_factory.mktemp(f"threads{threads}")
            with pytest.MonkeyPatch.context() as mp:
                mp.setenv("FF_THREADS", threads)
                mp.chdir(root)
                for argv in PIPELINE:
                    assert dispatch(argv) == EXIT_OK, argv[0]
            found[threads] = {p.relative_to(root).as_posix(): p.read_bytes() for p in Path(root).rglob("*") if p.is_file()}
        return found

    @pytest.mark.parametrize("stage", ["synth", "spectra", "ckpt", "eval", "id"])
    def test_outputs_are_byte_identical(self, outputs, stage):
        single = {name: data for name, data in outputs["1"].items() if name.split("/")[0] == stage}
        pooled = {name: data for name, data in outputs["4"].items() if name.split("/")[0] == stage}
        assert len(single) > 1
        assert single.keys() == pooled.keys()
        for name in single:
            assert single[name] == pooled[name], name
