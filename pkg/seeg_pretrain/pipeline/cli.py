"""
Command-line front-end: ``seeg-pretrain <subcommand> [options]``.

Exit codes: 0 on success, 1 on usage or configuration errors, 2 on any
other failure.
"""
import argparse
import sys
from typing import Dict, List, Optional

import torch

from seeg_pretrain.configuration.run_config import RunConfig
from seeg_pretrain.exception import ConfigError, OutputExistsError, SeegPretrainException, UsageError
from seeg_pretrain.logger import logging
from seeg_pretrain.pipeline.training_pipeline import TrainPipeline

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2

COMMANDS = {
    "synth": ("Generate a seeded synthetic recording, events and task manifest.", "start_synth"),
    "transform": ("Write one spectrogram file per electrode of a recording.", "start_transform"),
    "pretrain": ("Pretrain the encoder on a spectrogram directory.", "start_pretrain"),
    "finetune": ("Decode a task with baselines, frozen and fine-tuned encoders.", "start_finetune"),
    "evaluate": ("Decode with frozen features only; probe every layer of a checkpoint.", "start_evaluate"),
    "sweep": ("Test AUC against the number of training examples.", "start_sweep"),
    "id": ("Intrinsic dimension of per-electrode embeddings.", "start_id"),
    "report": ("Summarise the evaluation tables of a run directory.", "start_report"),
}


class CliParser(argparse.ArgumentParser):
    """Raises UsageError instead of exiting, so dispatch owns the exit code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, help="root seed for every random draw")
    parser.add_argument("--config", help="key=value run configuration file")
    parser.add_argument("--profile", choices=["desk", "full"], help="model/training size profile")
    parser.add_argument("--force", action="store_true", help="overwrite a non-empty output directory")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one configuration key (repeatable)")


def build_parser() -> CliParser:
    parser = CliParser(prog="seeg-pretrain", description="Self-supervised pretraining toolkit for SEEG recordings.")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=CliParser)
    subparsers.required = True
    for name, (help_text, _) in COMMANDS.items():
        sub = subparsers.add_parser(name, help=help_text, description=help_text)
        _add_common(sub)
        if name == "transform":
            sub.add_argument("--in", dest="inputs", nargs=1, required=True, help="recording file or synth directory")
            sub.add_argument("--layout", help="probe layout file")
            sub.add_argument("--method", choices=["stft", "superlet"], help="time-frequency transform")
        elif name == "pretrain":
            sub.add_argument("--data", required=True, help="directory of spectrogram files")
            sub.add_argument("--mask-scheme", choices=["static", "adaptive"], help="masking scheme")
        elif name in ("finetune", "evaluate", "sweep"):
            sub.add_argument("--in", dest="inputs", nargs=1, required=True, help="recording file or synth directory")
            sub.add_argument("--checkpoint", required=name == "finetune", help="pretrained encoder checkpoint")
            sub.add_argument("--layout", help="probe layout file")
            sub.add_argument("--events", help="stimulus events file")
            sub.add_argument("--manifest", help="task manifest file")
            sub.add_argument("--task", choices=["onset", "intensity"], help="decoding task")
            sub.add_argument("--electrodes", help="comma-separated electrodes to decode (default: top-k)")
        elif name == "id":
            sub.add_argument("--in", dest="inputs", nargs="+", required=True,
                             help="one or more recordings of the same electrodes")
            sub.add_argument("--checkpoint", required=True, help="pretrained encoder checkpoint")
            sub.add_argument("--layout", help="probe layout file")
        elif name == "report":
            sub.add_argument("--in", dest="inputs", nargs=1, required=True, help="run directory to summarise")
    return parser


def overrides_from_args(args: argparse.Namespace) -> Dict[str, object]:
    """CLI flags as configuration keys; flags that were not given are left out."""
    overrides: Dict[str, object] = {}
    for item in args.set:
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    flag_keys = {
        "seed": "run.seed",
        "profile": "run.profile",
        "method": "run.method",
        "mask_scheme": "run.mask_scheme",
        "task": "decode.task",
        "electrodes": "decode.electrodes",
        "out": "paths.out",
        "data": "paths.data",
        "checkpoint": "paths.checkpoint",
        "layout": "paths.layout",
        "events": "paths.events",
        "manifest": "paths.manifest",
        "inputs": "paths.recording",
    }
    for attr, key in flag_keys.items():
        value = getattr(args, attr, None)
        if value is not None:
            overrides[key] = value
    return overrides


def root_cause(error: BaseException) -> BaseException:
    while isinstance(error, SeegPretrainException) and error.original is not None:
        error = error.original
    return error


def dispatch(argv: Optional[List[str]] = None) -> int:
    """Run exactly one subcommand and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(str(e), file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:
        # --help
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    torch.set_num_threads(1)
    torch.use_deterministic_algorithms(True)
    try:
        overrides = overrides_from_args(args)
        if args.config:
            run_config = RunConfig.from_file(args.config, overrides)
        else:
            run_config = RunConfig.resolve(overrides=overrides)
        pipeline = TrainPipeline(run_config, force=args.force)
        logging.info(f"Running command {args.command}")
        artifact = getattr(pipeline, COMMANDS[args.command][1])()
        logging.info(f"Command {args.command} finished: {artifact}")
        return EXIT_OK
    except Exception as e:
        cause = root_cause(e)
        if isinstance(cause, (UsageError, ConfigError, OutputExistsError)):
            logging.error(f"{args.command}: {cause}")
            print(f"error: {cause}", file=sys.stderr)
            return EXIT_USAGE
        logging.exception(f"{args.command} failed")
        print(f"error: {cause}", file=sys.stderr)
        return EXIT_RUNTIME


def main() -> None:
    sys.exit(dispatch())
