"""Settings file handling.

One TOML file with optional ``[jnd]``, ``[detector]``, ``[scrub]`` and
``[harness]`` tables whose keys mirror the config dataclasses::

    [detector]
    min_area = 64
    band_high = 12

    [scrub]
    noise_std = 0.7

Command-line ``--set section.key=value`` overrides are applied on top.
"""

from __future__ import annotations

import dataclasses
import sys
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .detector import DetectorConfig
from .errors import ConfigError
from .harness import HarnessConfig
from .mitigation import ScrubConfig
from .perception import JndConfig

_SECTIONS = {"jnd": JndConfig, "detector": DetectorConfig, "scrub": ScrubConfig}
_HARNESS_KEYS = {"tile_size", "entropy_threshold", "margin", "sign", "workers"}


def _coerce(text: str):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def parse_overrides(items) -> dict:
    """``["detector.min_area=32", ...]`` -> ``{"detector": {"min_area": 32}}``."""
    out: dict = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        section, dot, name = key.strip().partition(".")
        if not sep or not dot or not section or not name:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        out.setdefault(section, {})[name] = _coerce(value.strip())
    return out


def _build(cls, values: dict):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(values) - names
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {cls.__name__}: {exc}") from exc


def load_settings(path=None, overrides=None) -> HarnessConfig:
    raw: dict = {}
    if path is not None:
        path = Path(path)
        try:
            raw = tomllib.loads(path.read_text())
        except FileNotFoundError:
            raise
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    for section, values in (overrides or {}).items():
        raw.setdefault(section, {}).update(values)

    unknown = set(raw) - set(_SECTIONS) - {"harness"}
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    parts = {name: _build(cls, raw.get(name, {})) for name, cls in _SECTIONS.items()}
    harness = raw.get("harness", {})
    bad = set(harness) - _HARNESS_KEYS
    if bad:
        raise ConfigError(f"unknown harness keys: {sorted(bad)}")
    try:
        return HarnessConfig(jnd=parts["jnd"], detector=parts["detector"], scrub=parts["scrub"], **harness)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid harness settings: {exc}") from exc
