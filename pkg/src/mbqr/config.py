"""Scenario files: flat key = value sections, strictly validated.

The on-disk format is INI-style: ``[section]`` headers over ``key =
value`` lines, ``#``/``;`` comments, no interpolation.  Parsing is
strict in both directions: unknown sections or keys are rejected with
the offending line, and every physical parameter is range-checked at
parse time with the violated bound in the message.  Environment
variables ``MBQR_<SECTION>_<KEY>`` override file values before
validation.
"""

from __future__ import annotations

import configparser
import math
import os
from dataclasses import dataclass
from typing import Any, Mapping

from .protocols import VARIANTS, element_names
from .repeater import VARIANT_NAMES, ChannelModel, RepeaterConfig

__all__ = [
    "COMMANDS",
    "ENV_PREFIX",
    "ConfigError",
    "ScenarioConfig",
    "parse_scenario",
    "load_scenario",
]

COMMANDS = ("compile", "purify", "threshold", "repeater", "sweep", "verify")
ENV_PREFIX = "MBQR_"

_REQUIRED = object()
_INF = math.inf


@dataclass(frozen=True)
class _Field:
    kind: str  # float | int | bool | str | str_list | int_list
    default: Any
    lo: float = -_INF
    hi: float = _INF
    lo_open: bool = False
    hi_open: bool = False
    choices: tuple[str, ...] | None = None


_ELEMENTS = element_names()

SCHEMA: Mapping[str, Mapping[str, _Field]] = {
    "scenario": {
        "command": _Field("str", _REQUIRED, choices=COMMANDS),
        "seed": _Field("int", 0, lo=0, hi=2**64 - 1),
    },
    "channel": {
        "v_opt": _Field("float", 0.99, lo=0.0, hi=1.0),
        "eta": _Field("float", 0.3, lo=0.0, hi=1.0),
        "dark": _Field("float", 1e-4, lo=0.0, hi=1.0),
        "alpha": _Field("float", 0.16, lo=0.0),
    },
    "repeater": {
        "total_distance": _Field("float", _REQUIRED, lo=0.0, lo_open=True),
        "levels": _Field("int", _REQUIRED, lo=1, hi=30),
        "steps_per_level": _Field("int", 1, lo=0, hi=2),
        "integrated_swapping": _Field("bool", True),
        "noise": _Field("float", 1.0, lo=0.0, hi=1.0),
        "p_bell": _Field("float", 1.0, lo=0.0, hi=1.0, lo_open=True),
        "variant": _Field("str", "V2", choices=VARIANT_NAMES),
        "final_round": _Field("bool", True),
    },
    "sweep": {
        "distance_min": _Field("float", _REQUIRED, lo=0.0, lo_open=True),
        "distance_max": _Field("float", _REQUIRED, lo=0.0, lo_open=True),
        "points": _Field("int", 25, lo=2, hi=100000),
        "levels": _Field("int_list", ()),
        "log_spacing": _Field("bool", True),
    },
    "purify": {
        "element": _Field("str", _REQUIRED, choices=_ELEMENTS),
        "variant": _Field("str", "xrot", choices=VARIANTS),
        "noise": _Field("float", 1.0, lo=0.0, hi=1.0),
        "fidelity": _Field("float", 0.95, lo=0.0, hi=1.0),
        "family": _Field("str", "binary", choices=("binary", "werner")),
        "rounds": _Field("int", 1, lo=1, hi=100),
    },
    "threshold": {
        "elements": _Field("str_list", ("one_step", "two_step"), choices=_ELEMENTS),
        "family": _Field("str", "werner", choices=("binary", "werner")),
        "mode": _Field("str", "iterated", choices=("iterated", "single")),
        "bracket_lo": _Field("float", 0.85, lo=0.0, hi=1.0),
        "bracket_hi": _Field("float", 1.0, lo=0.0, hi=1.0),
        "tol": _Field("float", 1e-4, lo=0.0, hi=0.1, lo_open=True),
        "grid_points": _Field("int", 64, lo=8, hi=4096),
    },
    "compile": {
        "elements": _Field("str_list", _ELEMENTS, choices=_ELEMENTS),
        "variant": _Field("str", "xrot", choices=VARIANTS),
    },
}

# sections a command materializes even when absent from the file
_NEEDED = {
    "compile": ("compile",),
    "purify": ("purify",),
    "threshold": ("threshold",),
    "repeater": ("repeater", "channel"),
    "sweep": ("repeater", "sweep", "channel"),
    "verify": (),
}


class ConfigError(ValueError):
    """Scenario rejected; the message names the key, line, or bound."""


def _line_of(lines: list[str], section: str, key: str | None) -> str:
    """Best-effort source line for an error message."""
    header = f"[{section}]"
    start = None
    for i, raw in enumerate(lines):
        if raw.split("#")[0].split(";")[0].strip() == header:
            start = i
            break
    if start is None:
        return ""
    if key is None:
        return f" (line {start + 1})"
    for i in range(start + 1, len(lines)):
        stripped = lines[i].strip()
        if stripped.startswith("["):
            break
        body = stripped.split("#")[0].split(";")[0]
        if body.split("=")[0].strip() == key:
            return f" (line {i + 1})"
    return ""


def _bound_text(f: _Field) -> str:
    lo = "(" if f.lo_open else "["
    hi = ")" if f.hi_open else "]"
    lo_v = "-inf" if f.lo == -_INF else f"{f.lo:g}"
    hi_v = "inf" if f.hi == _INF else f"{f.hi:g}"
    return f"{lo}{lo_v}, {hi_v}{hi}"


def _parse_number(raw: str, f: _Field, where: str) -> float | int:
    try:
        val = int(raw, 0) if f.kind == "int" else float(raw)
    except ValueError:
        raise ConfigError(f"{where}: {raw!r} is not a valid {f.kind}") from None
    below = val < f.lo or (f.lo_open and val == f.lo)
    above = val > f.hi or (f.hi_open and val == f.hi)
    if below or above:
        raise ConfigError(f"{where}: {val!r} out of range {_bound_text(f)}")
    return val


def _parse_value(raw: str, f: _Field, where: str) -> Any:
    raw = raw.strip()
    if f.kind in ("float", "int"):
        return _parse_number(raw, f, where)
    if f.kind == "bool":
        low = raw.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ConfigError(f"{where}: {raw!r} is not a valid bool (use true/false)")
    if f.kind == "str":
        if f.choices is not None and raw not in f.choices:
            raise ConfigError(
                f"{where}: {raw!r} is not one of {', '.join(f.choices)}"
            )
        return raw
    if f.kind == "str_list":
        items = tuple(s.strip() for s in raw.split(",") if s.strip())
        if not items:
            raise ConfigError(f"{where}: expected a comma-separated list")
        if f.choices is not None:
            for item in items:
                if item not in f.choices:
                    raise ConfigError(
                        f"{where}: {item!r} is not one of {', '.join(f.choices)}"
                    )
        return items
    if f.kind == "int_list":
        try:
            return tuple(int(s.strip()) for s in raw.split(",") if s.strip())
        except ValueError:
            raise ConfigError(f"{where}: {raw!r} is not a comma-separated int list") from None
    raise AssertionError(f"unhandled field kind {f.kind}")


@dataclass(frozen=True)
class ScenarioConfig:
    """A validated scenario: the command plus fully defaulted sections."""

    command: str
    seed: int
    values: Mapping[str, Mapping[str, Any]]
    source: str = "<string>"

    def section(self, name: str) -> Mapping[str, Any]:
        if name not in self.values:
            raise ConfigError(f"scenario has no [{name}] section")
        return self.values[name]

    def channel_model(self) -> ChannelModel:
        ch = self.values.get("channel", {})
        defaults = {k: f.default for k, f in SCHEMA["channel"].items()}
        defaults.update(ch)
        return ChannelModel(**defaults)

    def repeater_config(self) -> RepeaterConfig:
        rp = self.section("repeater")
        return RepeaterConfig(
            total_distance=rp["total_distance"],
            levels=rp["levels"],
            steps_per_level=rp["steps_per_level"],
            integrated_swapping=rp["integrated_swapping"],
            noise=rp["noise"],
            p_bell=rp["p_bell"],
            variant=rp["variant"],
            final_round=rp["final_round"],
            channel=self.channel_model(),
        )


def _apply_env(
    sections: dict[str, dict[str, str]], env: Mapping[str, str]
) -> dict[str, tuple[str, str]]:
    """Overrides {section: {key: raw}} in place; returns where-notes."""
    notes: dict[str, tuple[str, str]] = {}
    for section, fields in SCHEMA.items():
        for key in fields:
            var = f"{ENV_PREFIX}{section.upper()}_{key.upper()}"
            if var in env:
                sections.setdefault(section, {})[key] = env[var]
                notes[f"{section}.{key}"] = (var, env[var])
    return notes


def parse_scenario(
    text: str,
    source: str = "<string>",
    env: Mapping[str, str] | None = None,
) -> ScenarioConfig:
    """Parse and validate one scenario; raises :class:`ConfigError`."""
    lines = text.splitlines()
    parser = configparser.ConfigParser(
        interpolation=None, delimiters=("=",), comment_prefixes=("#", ";"), strict=True
    )
    try:
        parser.read_string(text, source=source)
    except configparser.Error as err:
        raise ConfigError(f"{source}: {err}") from None

    raw_sections: dict[str, dict[str, str]] = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(
                f"{source}: unknown section [{section}]{_line_of(lines, section, None)}"
            )
        raw_sections[section] = {}
        for key, raw in parser[section].items():
            if key not in SCHEMA[section]:
                raise ConfigError(
                    f"{source}: unknown key {key!r} in section [{section}]"
                    f"{_line_of(lines, section, key)}"
                )
            raw_sections[section][key] = raw

    env_notes = _apply_env(raw_sections, env if env is not None else os.environ)

    if "scenario" not in raw_sections or "command" not in raw_sections["scenario"]:
        raise ConfigError(f"{source}: missing required key 'command' in section [scenario]")

    values: dict[str, dict[str, Any]] = {}
    for section, raw_kv in raw_sections.items():
        values[section] = {}
        for key, raw in raw_kv.items():
            note = env_notes.get(f"{section}.{key}")
            if note:
                where = f"environment variable {note[0]}"
            else:
                where = f"{source}: key {key!r} in [{section}]{_line_of(lines, section, key)}"
            values[section][key] = _parse_value(raw, SCHEMA[section][key], where)

    command = values["scenario"]["command"]
    needed = ("scenario",) + _NEEDED[command]
    for section in needed:
        block = values.setdefault(section, {})
        for key, f in SCHEMA[section].items():
            if key in block:
                continue
            if f.default is _REQUIRED:
                raise ConfigError(
                    f"{source}: missing required key {key!r} in section [{section}]"
                )
            block[key] = f.default
    # sections present but unused by the command still get defaults
    for section, block in values.items():
        for key, f in SCHEMA[section].items():
            if key not in block and f.default is not _REQUIRED:
                block[key] = f.default

    sw = values.get("sweep", {})
    if "distance_min" in sw and "distance_max" in sw:
        if sw["distance_min"] >= sw["distance_max"]:
            raise ConfigError(
                f"{source}: key 'distance_min' in [sweep] must be below distance_max"
            )
    th = values.get("threshold", {})
    if "bracket_lo" in th and "bracket_hi" in th:
        if th["bracket_lo"] >= th["bracket_hi"]:
            raise ConfigError(
                f"{source}: key 'bracket_lo' in [threshold] must be below bracket_hi"
            )

    return ScenarioConfig(
        command=command,
        seed=values["scenario"]["seed"],
        values=values,
        source=source,
    )


def load_scenario(path: str, env: Mapping[str, str] | None = None) -> ScenarioConfig:
    """Read and validate the scenario file at ``path``."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        raise ConfigError(f"cannot read scenario file {path}: {err}") from None
    return parse_scenario(text, source=path, env=env)
