"""Configuration: a json file, overridable by environment, then by flags.

Environment variables are named BANNERFORGE_<SECTION>_<KEY>, for example
BANNERFORGE_TEXTGEN_MAX_TOKENS=120 or BANNERFORGE_PATHS_IMAGE_STORE=/tmp/imgs.
Values are coerced to the type of the default they replace.
"""

from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass
from pathlib import Path

from .generation import GenParams

ENV_PREFIX = "BANNERFORGE_"

DEFAULTS = {
    "textgen": {
        "base_url": "http://localhost:8801/generate",
        "auth_header": "",
        "temperature": 0.2,
        "max_tokens": 80,
    },
    "imagegen": {
        "base_url": "http://localhost:8802/generate",
        "auth_header": "",
        "max_inflight": 4,
        "defaults": {"width": 1024, "height": 768, "steps": 30, "guidance": 7.5, "seed": 0},
    },
    "detector": {
        "base_url": "http://localhost:8803/detect",
        "threshold": 0.25,
    },
    "paths": {
        "catalog": "",
        "template": "",
        "image_store": "images",
        "ledgers_dir": "ledgers",
        "svr_model": "",
        "svr_range": "",
    },
    "sanitize_mode": "lenient",
    "prompt_suffix": "",
}

_TOP_LEVEL_ENV = {"SANITIZE_MODE": "sanitize_mode", "PROMPT_SUFFIX": "prompt_suffix"}


class ConfigError(Exception):
    pass


def _coerce(raw: str, like):
    if isinstance(like, bool):
        return raw.lower() in ("1", "true", "yes", "on")
    if isinstance(like, int):
        return int(raw)
    if isinstance(like, float):
        return float(raw)
    return raw


def _merge(base: dict, extra: dict, path: str = "") -> None:
    for key, value in extra.items():
        if key not in base:
            raise ConfigError(f"unknown config key {path}{key!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key {path}{key!r} must be a section")
            _merge(base[key], value, f"{path}{key}.")
        else:
            base[key] = value


def _apply_env(data: dict, env) -> None:
    for name, raw in env.items():
        if not name.startswith(ENV_PREFIX):
            continue
        rest = name[len(ENV_PREFIX):]
        if rest in _TOP_LEVEL_ENV:
            data[_TOP_LEVEL_ENV[rest]] = raw
            continue
        section_name, _, key_part = rest.partition("_")
        section = data.get(section_name.lower())
        if not isinstance(section, dict) or not key_part:
            continue
        key = key_part.lower()
        if key in section and not isinstance(section[key], dict):
            section[key] = _coerce(raw, section[key])
            continue
        # One nesting level, e.g. IMAGEGEN_DEFAULTS_WIDTH -> defaults.width
        head, _, tail = key.partition("_")
        nested = section.get(head)
        if isinstance(nested, dict) and tail in nested:
            nested[tail] = _coerce(raw, nested[tail])


@dataclass
class Config:
    textgen: dict
    imagegen: dict
    detector: dict
    paths: dict
    sanitize_mode: str
    prompt_suffix: str

    def gen_params(self, **replacements) -> GenParams:
        merged = {**self.imagegen["defaults"], **replacements}
        return GenParams(**merged)

    def require_files(self, *names: str) -> None:
        """Check that the named path entries are set and point at files."""
        for name in names:
            value = self.paths.get(name, "")
            if not value:
                raise ConfigError(f"config paths.{name} is not set")
            if not Path(value).is_file():
                raise ConfigError(f"config paths.{name} does not exist: {value}")

    def ledger_path(self, filename: str) -> Path:
        return Path(self.paths["ledgers_dir"]) / filename

    def to_dict(self) -> dict:
        return {
            "textgen": copy.deepcopy(self.textgen),
            "imagegen": copy.deepcopy(self.imagegen),
            "detector": copy.deepcopy(self.detector),
            "paths": copy.deepcopy(self.paths),
            "sanitize_mode": self.sanitize_mode,
            "prompt_suffix": self.prompt_suffix,
        }


def load_config(path=None, env=None, overrides: dict | None = None) -> Config:
    """Layered load: defaults, then json file, then env, then explicit overrides."""
    data = copy.deepcopy(DEFAULTS)
    if path is not None:
        try:
            file_data = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid json: {exc}")
        if not isinstance(file_data, dict):
            raise ConfigError(f"config file {path} must hold a json object")
        _merge(data, file_data)
    _apply_env(data, os.environ if env is None else env)
    if overrides:
        _merge(data, overrides)

    if data["imagegen"]["max_inflight"] < 1:
        raise ConfigError(f"imagegen.max_inflight must be >= 1, got "
                          f"{data['imagegen']['max_inflight']}")
    if data["sanitize_mode"] not in ("lenient", "strict"):
        raise ConfigError(f"sanitize_mode must be lenient or strict, got "
                          f"{data['sanitize_mode']!r}")
    threshold = data["detector"]["threshold"]
    if not (0.0 <= threshold <= 1.0):
        raise ConfigError(f"detector.threshold must be in [0, 1], got {threshold}")

    return Config(textgen=data["textgen"], imagegen=data["imagegen"],
                  detector=data["detector"], paths=data["paths"],
                  sanitize_mode=data["sanitize_mode"],
                  prompt_suffix=data["prompt_suffix"])
