"""Scenario config files.

An INI-style text file; a line starting with ``;`` is a comment so ``#`` is free for ASCII
maps, which are written as indented continuation lines::

    [scenario]
    name = gridbot_illusion
    stages = 40
    seed = 7

    [params]
    producer = hold

    ; agent and relation sections only group keys; they merge into params
    [agent.receiver]
    direction = 0

    [goal]
    kind = istate_set
    target = small_room
    require_illusory = yes

    [plan]
    horizon = 12

Keys from ``[params]``, ``[agent.*]`` and ``[relation.*]`` sections all
become scenario parameters.  Errors carry ``path:line`` context.
"""

from __future__ import annotations

import configparser
import os
import re
from dataclasses import dataclass, field
from typing import Optional

from .errors import ConfigError

KNOWN_SECTIONS = ("scenario", "goal", "plan", "margins")
SCENARIO_KEYS = {"name", "stages", "seed"}
GOAL_KEYS = {"kind", "observations", "target", "require_plausible", "require_illusory",
             "stage", "tol", "on"}
PLAN_KEYS = {"horizon", "budget", "mode", "cost", "margin_c"}
MARGIN_KEYS = {"space"}


@dataclass
class RunConfig:
    path: str
    scenario: str
    stages: Optional[int] = None
    seed: int = 0
    params: dict = field(default_factory=dict)
    goal: dict = field(default_factory=dict)
    plan: dict = field(default_factory=dict)
    margins: dict = field(default_factory=dict)
    lines: dict = field(default_factory=dict)

    def line_of(self, section: str, key: Optional[str] = None) -> Optional[int]:
        return self.lines.get((section, key))

    def error(self, message, section=None, key=None) -> ConfigError:
        return ConfigError(message, self.path, self.line_of(section, key) if section else None)


def _locate(text: str) -> dict:
    """Map ``(section, key)`` and ``(section, None)`` to 1-based line numbers."""
    out = {}
    section = None
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith(";"):
            continue
        m = re.fullmatch(r"\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            out.setdefault((section, None), n)
            continue
        if raw[:1] in " \t":
            continue
        m = re.match(r"([^=:]+?)\s*[=:]", line)
        if m and section is not None:
            out.setdefault((section, m.group(1).strip().lower()), n)
    return out


def _int(cfg: RunConfig, section, key, value) -> int:
    try:
        return int(value)
    except ValueError:
        raise cfg.error(f"{key} must be an integer, got {value!r}", section, key) from None


def parse_config_text(text: str, path: str = "<string>") -> RunConfig:
    parser = configparser.ConfigParser(comment_prefixes=(";",), inline_comment_prefixes=None,
                                       interpolation=None, empty_lines_in_values=False)
    try:
        parser.read_string(text, source=path)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("expected a [section] header", path, exc.lineno) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", path, exc.lineno) from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r} in [{exc.section}]", path, exc.lineno) from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ConfigError("malformed line", path, lineno) from None

    lines = _locate(text)
    if not parser.has_section("scenario"):
        raise ConfigError("missing [scenario] section", path, None)
    sc = parser["scenario"]
    cfg = RunConfig(path=path, scenario="", lines=lines)
    for key in sc:
        if key not in SCENARIO_KEYS:
            raise cfg.error(f"unknown key {key!r} in [scenario]", "scenario", key)
    if "name" not in sc or not sc["name"].strip():
        raise cfg.error("[scenario] needs a name", "scenario")
    cfg.scenario = sc["name"].strip()
    if "stages" in sc:
        cfg.stages = _int(cfg, "scenario", "stages", sc["stages"])
        if cfg.stages < 1:
            raise cfg.error("stages must be at least 1", "scenario", "stages")
    if "seed" in sc:
        cfg.seed = _int(cfg, "scenario", "seed", sc["seed"])

    for section in parser.sections():
        if section == "scenario":
            continue
        if section == "params" or section.startswith(("agent.", "relation.")):
            for key, value in parser[section].items():
                if key in cfg.params:
                    raise cfg.error(f"parameter {key!r} given twice", section, key)
                cfg.params[key] = value
                cfg.lines.setdefault(("params", key), lines.get((section, key)))
        elif section in KNOWN_SECTIONS:
            allowed = {"goal": GOAL_KEYS, "plan": PLAN_KEYS, "margins": MARGIN_KEYS}[section]
            target = getattr(cfg, section)
            for key, value in parser[section].items():
                if key not in allowed:
                    raise cfg.error(f"unknown key {key!r} in [{section}]", section, key)
                target[key] = value.strip()
        else:
            raise cfg.error(f"unknown section [{section}]", section)
    return cfg


def load_config(path: str) -> RunConfig:
    if not os.path.isfile(path):
        raise ConfigError("config file not found", path, None)
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", path, None) from None
    return parse_config_text(text, path)
