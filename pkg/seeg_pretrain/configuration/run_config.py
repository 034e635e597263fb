"""
Run configuration: flat ``section.key=value`` text checked against
``config/schema.yaml``, layered over a profile from ``config/model.yaml``,
echoed canonically and turned into the typed config entities.
"""
import os
from dataclasses import dataclass, replace
from typing import Any, Dict, Iterable, Mapping, Optional, Tuple

from seeg_pretrain.constants import MODEL_PROFILE_FILE_PATH, SCHEMA_FILE_PATH
from seeg_pretrain.entity.config_entity import (
    AnalysisConfig,
    DecodeConfig,
    EncoderConfig,
    MaskParams,
    PretrainConfig,
    SignalConfig,
    StftConfig,
    SuperletConfig,
    SynthConfig,
)
from seeg_pretrain.exception import ConfigError, ParameterError
from seeg_pretrain.logger import logging
from seeg_pretrain.processing.synthetic import duration_for_train_size
from seeg_pretrain.utils.main_utils import read_yaml_file

VALUE_TYPES = ("int", "float", "str", "bool", "int_list", "float_list", "str_list")
_TRUE = {"true", "1", "yes", "on"}
_FALSE = {"false", "0", "no", "off"}


@dataclass(frozen=True)
class KeySpec:
    name: str
    type: str
    default: Any
    choices: Optional[Tuple[Any, ...]] = None

    @property
    def is_list(self) -> bool:
        return self.type.endswith("_list")

    @property
    def element_type(self) -> str:
        return self.type[:-len("_list")] if self.is_list else self.type


def _scalar(name: str, kind: str, raw: Any) -> Any:
    try:
        if kind == "bool":
            if isinstance(raw, bool):
                return raw
            text = str(raw).strip().lower()
            if text in _TRUE:
                return True
            if text in _FALSE:
                return False
            raise ValueError(raw)
        if kind == "int":
            if isinstance(raw, bool) or (isinstance(raw, float) and not raw.is_integer()):
                raise ValueError(raw)
            return int(str(raw).strip()) if isinstance(raw, str) else int(raw)
        if kind == "float":
            if isinstance(raw, bool):
                raise ValueError(raw)
            return float(str(raw).strip()) if isinstance(raw, str) else float(raw)
        text = str(raw).strip()
        if "\n" in text:
            raise ValueError(raw)
        return text
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{name}: cannot read {raw!r} as {kind}") from e


def coerce_value(spec: KeySpec, raw: Any) -> Any:
    """Convert text or a YAML value to the key's declared type and check its choices."""
    if spec.is_list:
        if isinstance(raw, str):
            items = [item for item in (part.strip() for part in raw.split(",")) if item]
        elif isinstance(raw, (list, tuple)):
            items = list(raw)
        else:
            items = [raw]
        value = tuple(_scalar(spec.name, spec.element_type, item) for item in items)
        checked = value
    else:
        value = _scalar(spec.name, spec.type, raw)
        checked = (value,)
    if spec.choices is not None:
        bad = [v for v in checked if v not in spec.choices]
        if bad:
            raise ConfigError(f"{spec.name}: {bad} not among {list(spec.choices)}")
    return value


def format_value(spec: KeySpec, value: Any) -> str:
    def one(v):
        if spec.element_type == "bool":
            return "true" if v else "false"
        if spec.element_type == "float":
            return repr(float(v))
        return str(v)

    if spec.is_list:
        return ",".join(one(v) for v in value)
    return one(value)


def load_schema(schema_path: str = SCHEMA_FILE_PATH) -> Dict[str, KeySpec]:
    content = read_yaml_file(schema_path)
    specs: Dict[str, KeySpec] = {}
    for section, keys in content.sections.items():
        for key, entry in keys.items():
            name = f"{section}.{key}"
            if entry.type not in VALUE_TYPES:
                raise ConfigError(f"{schema_path}: key {name} has unknown type {entry.type!r}")
            choices = entry.get("choices")
            spec = KeySpec(name, entry.type, None, tuple(choices) if choices is not None else None)
            specs[name] = KeySpec(name, entry.type, coerce_value(spec, entry.default), spec.choices)
    return specs


def load_profile(name: str, profile_path: str = MODEL_PROFILE_FILE_PATH) -> Dict[str, Any]:
    content = read_yaml_file(profile_path)
    if name not in content.profiles:
        raise ConfigError(f"unknown profile {name!r}; known: {sorted(content.profiles)}")
    return dict(content.profiles[name])


def parse_config_text(text: str, source: str = "<config>") -> Dict[str, str]:
    """``key=value`` lines; blank lines and ``#`` comments are skipped, a key may appear once."""
    entries: Dict[str, str] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{number}: expected key=value, got {stripped!r}")
        key, value = stripped.split("=", 1)
        key = key.strip()
        if key in entries:
            raise ConfigError(f"{source}:{number}: key {key} set twice")
        entries[key] = value.strip()
    return entries


def _build(cls, **kwargs):
    try:
        return cls(**kwargs)
    except ParameterError as e:
        raise ConfigError(f"invalid {cls.__name__}: {e}") from e


class RunConfig:
    """
    Resolved run parameters. Resolution order, lowest first: schema
    defaults, the ``run.profile`` profile, the config file, CLI overrides.
    """

    def __init__(self, values: Mapping[str, Any], schema: Mapping[str, KeySpec]):
        self._values = dict(values)
        self._schema = dict(schema)

    @classmethod
    def resolve(
        cls,
        config_text: Optional[str] = None,
        overrides: Optional[Mapping[str, Any]] = None,
        source: str = "<config>",
        schema_path: str = SCHEMA_FILE_PATH,
        profile_path: str = MODEL_PROFILE_FILE_PATH,
    ) -> "RunConfig":
        schema = load_schema(schema_path)
        file_values = parse_config_text(config_text, source) if config_text else {}
        overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
        for layer in (file_values, overrides):
            unknown = sorted(set(layer) - set(schema))
            if unknown:
                raise ConfigError(f"unknown configuration keys: {unknown}")

        profile_key = "run.profile"
        raw_profile = overrides.get(profile_key, file_values.get(profile_key, schema[profile_key].default))
        profile = coerce_value(schema[profile_key], raw_profile)
        profile_values = load_profile(profile, profile_path)
        unknown = sorted(set(profile_values) - set(schema))
        if unknown:
            raise ConfigError(f"profile {profile!r} sets unknown keys: {unknown}")

        values = {name: spec.default for name, spec in schema.items()}
        for layer in (profile_values, file_values, overrides):
            for key, raw in layer.items():
                values[key] = coerce_value(schema[key], raw)
        values[profile_key] = profile
        config = cls(values, schema)
        config._check_consistency()
        logging.info(f"Run configuration resolved with profile {profile!r} ({len(file_values)} file keys, "
                     f"{len(overrides)} overrides)")
        return config

    @classmethod
    def from_file(cls, file_path: str, overrides: Optional[Mapping[str, Any]] = None, **kwargs) -> "RunConfig":
        try:
            with open(file_path, "r", encoding="utf-8") as f:
                text = f.read()
        except OSError as e:
            raise ConfigError(f"cannot read config file {file_path}: {e}") from e
        return cls.resolve(text, overrides, source=file_path, **kwargs)

    def _check_consistency(self) -> None:
        bins = self["stft.n_bins"] if self["run.method"] == "stft" else self["superlet.n_freqs"]
        if self["model.n_bins"] != bins:
            raise ConfigError(
                f"model.n_bins={self['model.n_bins']} does not match the {self['run.method']} "
                f"frequency count {bins}"
            )

    def __getitem__(self, key: str) -> Any:
        if key not in self._values:
            raise ConfigError(f"unknown configuration key {key!r}")
        return self._values[key]

    def __eq__(self, other) -> bool:
        return isinstance(other, RunConfig) and self._values == other._values

    def keys(self) -> Iterable[str]:
        return sorted(self._values)

    def updated(self, overrides: Mapping[str, Any]) -> "RunConfig":
        """Copy with ``overrides`` applied on top (keys still checked against the schema)."""
        values = dict(self._values)
        for key, raw in overrides.items():
            if key not in self._schema:
                raise ConfigError(f"unknown configuration key {key!r}")
            values[key] = coerce_value(self._schema[key], raw)
        config = RunConfig(values, self._schema)
        config._check_consistency()
        return config

    def to_text(self) -> str:
        """Canonical echo: every key, sorted, one ``key=value`` per line."""
        return "".join(f"{key}={format_value(self._schema[key], self._values[key])}\n" for key in self.keys())

    def require_paths(self, *keys: str) -> None:
        """Every named path key must be set and point at an existing file or directory."""
        for key in keys:
            path = self[key]
            if not path:
                raise ConfigError(f"{key} is required for this command")
            if not os.path.exists(path):
                raise ConfigError(f"{key}={path} does not exist")

    # ----------------- typed views -----------------
    def signal_config(self) -> SignalConfig:
        return _build(
            SignalConfig,
            sample_rate_hz=self["signal.sample_rate_hz"],
            highpass_hz=self["signal.highpass_hz"],
            highpass_order=self["signal.highpass_order"],
            line_hz=self["signal.line_hz"],
            notch_bandwidth_hz=self["signal.notch_bandwidth_hz"],
            rereference=self["signal.rereference"],
            window_s=self["signal.window_s"],
            hop_s=self["signal.hop_s"],
            zscore_eps=self["signal.zscore_eps"],
            zscore_scope=self["signal.zscore_scope"],
        )

    def stft_config(self) -> StftConfig:
        return _build(
            StftConfig,
            window_samples=self["stft.window_samples"],
            overlap_samples=self["stft.overlap_samples"],
            n_bins=self["stft.n_bins"],
            max_freq_hz=self["stft.max_freq_hz"],
            trim_frames=self["stft.trim_frames"],
        )

    def superlet_config(self) -> SuperletConfig:
        if self["superlet.n_freqs"] < 1 or not 0 < self["superlet.f_min_hz"] < self["superlet.f_max_hz"]:
            raise ConfigError("superlet needs n_freqs >= 1 and 0 < f_min_hz < f_max_hz")
        try:
            return SuperletConfig.evenly_spaced(
                self["superlet.f_min_hz"],
                self["superlet.f_max_hz"],
                self["superlet.n_freqs"],
                c1=self["superlet.c1"],
                o_min=self["superlet.o_min"],
                o_max=self["superlet.o_max"],
                decimation=self["superlet.decimation"],
                trim_frames=self["superlet.trim_frames"],
                support_sigmas=self["superlet.support_sigmas"],
            )
        except ParameterError as e:
            raise ConfigError(f"invalid SuperletConfig: {e}") from e

    def mask_params(self) -> MaskParams:
        return _build(
            MaskParams,
            p_mask=self["mask.p_mask"],
            p_id=self["mask.p_id"],
            p_replace=self["mask.p_replace"],
            time_step_range=(self["mask.time_step_min"], self["mask.time_step_max"]),
            freq_step_range=(self["mask.freq_step_min"], self["mask.freq_step_max"]),
            replace_retries=self["mask.replace_retries"],
        )

    def encoder_config(self) -> EncoderConfig:
        return _build(
            EncoderConfig,
            n_layers=self["model.n_layers"],
            n_heads=self["model.n_heads"],
            d_hidden=self["model.d_h"],
            d_ff=self["model.d_ff"],
            dropout=self["model.dropout"],
            n_bins=self["model.n_bins"],
            max_frames=self["model.max_frames"],
            gamma=self["model.gamma"],
            alpha=self["model.alpha"],
        )

    def pretrain_config(self) -> PretrainConfig:
        return _build(
            PretrainConfig,
            batch_size=self["pretrain.batch_size"],
            n_steps=self["pretrain.n_steps"],
            lr=self["pretrain.lr"],
            betas=(self["pretrain.beta1"], self["pretrain.beta2"]),
            eps=self["pretrain.eps"],
            weight_decay=self["pretrain.weight_decay"],
            max_trust=self["pretrain.max_trust"],
            val_every=self["pretrain.val_every"],
            val_fraction=self["pretrain.val_fraction"],
            segment_frames=self["pretrain.segment_frames"],
            mask_scheme=self["run.mask_scheme"],
            seed=self["run.seed"],
            exclude_electrodes=self["pretrain.exclude_electrodes"],
        )

    def decode_config(self) -> DecodeConfig:
        return _build(
            DecodeConfig,
            task=self["decode.task"],
            k=self["decode.k"],
            layer=self["decode.layer"],
            n_updates=self["decode.n_updates"],
            val_every=self["decode.val_every"],
            batch_size=self["decode.batch_size"],
            head_lr=self["decode.head_lr"],
            encoder_lr=self["decode.encoder_lr"],
            weight_decay=self["decode.weight_decay"],
            top_k=self["decode.top_k"],
            context_s=self["decode.context_s"],
            guard_s=self["decode.guard_s"],
            kinds=self["decode.kinds"],
            modes=self["decode.modes"],
            include_random=self["decode.include_random"],
            seeds=self["decode.seeds"],
            sizes=self["decode.sizes"],
        )

    def synth_config(self) -> SynthConfig:
        """
        Generator settings. With ``synth.cover_sizes`` the duration grows to
        the length expected to give the largest ``decode.sizes`` entry.
        """
        cfg = _build(
            SynthConfig,
            n_shafts=self["synth.n_shafts"],
            electrodes_per_shaft=self["synth.electrodes_per_shaft"],
            duration_s=self["synth.duration_s"],
            sample_rate_hz=self["synth.sample_rate_hz"],
            seed=self["run.seed"],
            spectral_slope=self["synth.spectral_slope"],
            noise_std=self["synth.noise_std"],
            burst_rate_hz=self["synth.burst_rate_hz"],
            burst_amp=self["synth.burst_amp"],
            line_noise_amp=self["synth.line_noise_amp"],
            responsive_fraction=self["synth.responsive_fraction"],
            response_snr=self["synth.response_snr"],
            response_freq_hz=self["synth.response_freq_hz"],
            response_duration_s=self["synth.response_duration_s"],
            min_event_separation_s=self["synth.min_event_separation_s"],
            mean_extra_separation_s=self["synth.mean_extra_separation_s"],
            intensity_sd=self["synth.intensity_sd"],
        )
        if not self["synth.cover_sizes"] or not self["decode.sizes"]:
            return cfg
        needed = duration_for_train_size(cfg, max(self["decode.sizes"]), self["decode.context_s"])
        if needed <= cfg.duration_s:
            return cfg
        logging.info(f"synth.duration_s raised from {cfg.duration_s:g} to {needed:g} to cover decode.sizes")
        return replace(cfg, duration_s=needed)

    def analysis_config(self) -> AnalysisConfig:
        return _build(
            AnalysisConfig,
            n_components=self["analysis.n_components"],
            beta=self["analysis.beta"],
            layer=self["analysis.layer"],
            pooled=self["analysis.pooled"],
            compare_random=self["analysis.compare_random"],
        )
