"""Experiment configuration files (INI or JSON)."""
from __future__ import annotations

import configparser
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InputError


@dataclass
class ExperimentConfig:
    """A list of named experiments plus global settings.

    ``experiments`` holds (name, kind, params) triples; ``kind`` selects a runner.
    """

    model: str | None = None
    out_dir: str = "out"
    seed: int = 0
    threads: int | None = None
    tolerance_scale: float = 1.0
    experiments: list[tuple[str, str, dict]] = field(default_factory=list)


_GLOBAL_KEYS = {"model", "out_dir", "seed", "threads", "tolerance_scale"}


def _apply_globals(cfg: ExperimentConfig, data: dict, where: str) -> None:
    for key, val in data.items():
        if key not in _GLOBAL_KEYS:
            raise InputError(f"{where}: unknown setting '{key}'")
        if key in ("seed", "threads"):
            try:
                val = int(val)
            except (TypeError, ValueError):
                raise InputError(f"{where}: '{key}' must be an integer") from None
        elif key == "tolerance_scale":
            try:
                val = float(val)
            except (TypeError, ValueError):
                raise InputError(f"{where}: 'tolerance_scale' must be a number") from None
            if val <= 0:
                raise InputError(f"{where}: 'tolerance_scale' must be positive")
        setattr(cfg, key, val)


def parse_ini(text: str, source: str = "<config>") -> ExperimentConfig:
    """[general] holds global settings; each [experiment NAME] section needs ``kind``."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise InputError(f"{source}: {exc}") from None
    cfg = ExperimentConfig()
    for sec in cp.sections():
        items = dict(cp.items(sec))
        if sec == "general":
            _apply_globals(cfg, items, f"{source} [general]")
        elif sec.startswith("experiment"):
            name = sec[len("experiment"):].strip() or f"exp{len(cfg.experiments)}"
            if "kind" not in items:
                raise InputError(f"{source} [{sec}]: missing 'kind'")
            kind = items.pop("kind")
            cfg.experiments.append((name, kind, items))
        else:
            raise InputError(f"{source}: unknown section [{sec}]")
    return cfg


def parse_json(text: str, source: str = "<config>") -> ExperimentConfig:
    """{"general": {...}, "experiments": [{"name": ..., "kind": ..., ...}, ...]}."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise InputError(f"{source}: top level must be an object")
    cfg = ExperimentConfig()
    _apply_globals(cfg, data.get("general", {}), f"{source} general")
    for i, exp in enumerate(data.get("experiments", [])):
        if not isinstance(exp, dict) or "kind" not in exp:
            raise InputError(f"{source}: experiment #{i} needs a 'kind'")
        exp = dict(exp)
        kind = exp.pop("kind")
        name = str(exp.pop("name", f"{kind}{i}"))
        cfg.experiments.append((name, kind, exp))
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc.strerror}") from None
    if path.suffix.lower() == ".json":
        cfg = parse_json(text, str(path))
    else:
        cfg = parse_ini(text, str(path))
    if cfg.model is not None and not Path(cfg.model).is_absolute():
        cfg.model = str(path.parent / cfg.model)
    return cfg
