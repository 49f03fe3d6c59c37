import json
import logging
import os
import pathlib
from collections.abc import Iterable

import dotenv
from easydict import EasyDict as edict

from region_synth.errors import ConfigError

dotenv.load_dotenv()


class ExperimentLogger(logging.Logger):
    def __init__(self, name, log_path: str = "", logger_level="INFO"):
        super().__init__(name)
        self.log_path = log_path
        self.configure_logger(logger_level=logger_level)

    def configure_logger(self, logger_level="INFO"):
        env_level = os.getenv("REGION_SYNTH_LOG_LEVEL")
        if env_level:
            logger_level = env_level
        if logger_level is None:
            logger_level = "INFO"
        if logger_level == "DEBUG":
            logger_level = logging.DEBUG
        elif logger_level == "INFO":
            logger_level = logging.INFO
        else:
            logger_level = getattr(logging, str(logger_level).upper())
        self.setLevel(logger_level)

        formatter = logging.Formatter("%(asctime)s - %(levelname)s - %(message)s")

        console_handler = logging.StreamHandler()
        console_handler.setLevel(logger_level)
        console_handler.setFormatter(formatter)
        self.addHandler(console_handler)

        if self.log_path:
            pathlib.Path(self.log_path).parent.mkdir(parents=True, exist_ok=True)
            file_handler = logging.FileHandler(self.log_path)
            file_handler.setLevel(logger_level)
            file_handler.setFormatter(formatter)
            self.addHandler(file_handler)


def _default_config_path() -> pathlib.Path:
    return pathlib.Path(__file__).parent.parent / "default_config.json"


with open(_default_config_path()) as f:
    DEFAULT_CONFIG = json.load(f)


# Per-dataset presets selected by train.profile; shared values live in default_config.json.
DATASET_PROFILES = {
    "voc": {"loss": {"lambda1": 0.01}, "sample": {"radius": 1e-6}, "train": {"synth_per_class": 500}},
    "coco": {"loss": {"lambda1": 0.1}, "sample": {"radius": 1e-4}, "train": {"synth_per_class": 300}},
    "dior": {"loss": {"lambda1": 0.1}, "sample": {"radius": 1e-4}, "train": {"synth_per_class": 300}},
}

_TRUE = {"true", "1", "yes", "on"}
_FALSE = {"false", "0", "no", "off"}


def coerce_value(key: str, raw: str, default):
    """Parse ``raw`` into the type of ``default``."""
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            lowered = raw.lower()
            if lowered in _TRUE:
                return True
            if lowered in _FALSE:
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError as e:
        raise ConfigError(f"invalid value for '{key}': {raw!r}") from e
    return raw


def override_config(default_config, config, prefix: str = ""):
    """Recursively merge ``config`` into ``default_config``; unknown keys are rejected."""
    for key, value in config.items():
        path = f"{prefix}{key}"
        if key not in default_config:
            raise ConfigError(f"unknown config key '{path}'")
        current = default_config[key]
        if isinstance(current, dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key '{path}' is a section, not a value")
            override_config(current, value, prefix=f"{path}.")
        elif isinstance(value, str) and not isinstance(current, str):
            default_config[key] = coerce_value(path, value, current)
        else:
            default_config[key] = value
    return default_config


def resolve_flat_key(config, key: str) -> str:
    """Unprefixed benchmark names such as ``num_seen`` or ``d_f`` stand for ``data.<name>``."""
    key = key.strip()
    if "." not in key and key not in config and key in config.get("data", {}):
        return f"data.{key}"
    return key


def set_flat_key(config, key: str, raw: str):
    key = resolve_flat_key(config, key)
    parts = key.split(".")
    node = config
    for part in parts[:-1]:
        if part not in node or not isinstance(node[part], dict):
            raise ConfigError(f"unknown config key '{key}'")
        node = node[part]
    leaf = parts[-1]
    if leaf not in node or isinstance(node[leaf], dict):
        raise ConfigError(f"unknown config key '{key}'")
    node[leaf] = coerce_value(key, raw, node[leaf])


def parse_assignments(lines: Iterable[str], source: str = "<overrides>") -> list[tuple[str, str]]:
    """Parse ``key=value`` lines. Blank lines and ``#`` comments are skipped."""
    assignments = []
    for lineno, line in enumerate(lines, start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {line.strip()!r}")
        key, value = stripped.split("=", 1)
        assignments.append((key.strip(), value.strip()))
    return assignments


def load_config(path: str | None = None, overrides: Iterable[str] = ()) -> edict:
    """
    Build the run configuration.

    Order: packaged defaults, then the ``train.profile`` preset, then the key=value
    file at ``path``, then ``overrides`` (each ``key=value``). A profile selected in the
    file or overrides is applied before their explicit values.
    """
    file_assignments: list[tuple[str, str]] = []
    if path is not None:
        try:
            with open(path) as f:
                file_assignments = parse_assignments(f, source=str(path))
        except OSError as e:
            raise ConfigError(f"cannot read config file {path}: {e}") from e
    override_assignments = parse_assignments(overrides, source="--set")

    config = edict(json.loads(json.dumps(DEFAULT_CONFIG)))
    assignments = file_assignments + override_assignments
    for key, value in assignments:
        if key == "train.profile":
            config.train.profile = value
    apply_profile(config, config.train.profile)
    for key, value in assignments:
        set_flat_key(config, key, value)
    return config


def apply_profile(config, profile: str):
    if not profile:
        return config
    if profile not in DATASET_PROFILES:
        raise ConfigError(
            f"unknown train.profile '{profile}', expected one of {sorted(DATASET_PROFILES)}"
        )
    override_config(config, edict(DATASET_PROFILES[profile]))
    return config


def flatten_config(config, prefix: str = "") -> dict:
    flat = {}
    for key, value in config.items():
        if isinstance(value, dict):
            flat.update(flatten_config(value, prefix=f"{prefix}{key}."))
        else:
            flat[f"{prefix}{key}"] = value
    return flat
