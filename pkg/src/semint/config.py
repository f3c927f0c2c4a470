"""Service/replay configuration file loading."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ConfigInvalid, SemintError

SCENARIO_DIR = "scenarios/drought"


@dataclass
class Config:
    port: int
    data_dir: Path
    cep_rules: Path
    inference_rules: Path
    vocabularies: list[Path] = field(default_factory=list)
    host: str = "127.0.0.1"


def _path(base: Path, value, key: str) -> Path:
    if not isinstance(value, str) or not value:
        raise ConfigInvalid(key, "expected a path string")
    p = Path(value)
    return p if p.is_absolute() else base / p


def parse_config(obj: dict, base_dir: str | os.PathLike = ".") -> Config:
    """Validate a decoded config object.

    Rule and vocabulary paths resolve against ``base_dir`` (the config file's
    directory); ``data_dir`` resolves against the working directory.
    """
    if not isinstance(obj, dict):
        raise ConfigInvalid("<root>", "config must be a JSON object")
    base = Path(base_dir)
    for key in ("port", "data_dir", "cep_rules", "inference_rules"):
        if key not in obj:
            raise ConfigInvalid(key, "missing")
    port = obj["port"]
    if isinstance(port, bool) or not isinstance(port, int) or not 0 <= port <= 65535:
        raise ConfigInvalid("port", "expected an integer in [0, 65535]")
    if not isinstance(obj["data_dir"], str) or not obj["data_dir"]:
        raise ConfigInvalid("data_dir", "expected a path string")
    vocabs = obj.get("vocabularies", [])
    if not isinstance(vocabs, list):
        raise ConfigInvalid("vocabularies", "expected a list of paths")
    cfg = Config(
        port=port,
        data_dir=Path(obj["data_dir"]),
        cep_rules=_path(base, obj["cep_rules"], "cep_rules"),
        inference_rules=_path(base, obj["inference_rules"], "inference_rules"),
        vocabularies=[_path(base, v, "vocabularies") for v in vocabs],
        host=obj.get("host", "127.0.0.1"),
    )
    for key, p in [("cep_rules", cfg.cep_rules), ("inference_rules", cfg.inference_rules)] + [
        ("vocabularies", v) for v in cfg.vocabularies
    ]:
        if not p.is_file():
            raise ConfigInvalid(key, f"file not found: {p}")
    return cfg


def load_config(path: str | os.PathLike) -> Config:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigInvalid("<file>", f"file not found: {path}") from None
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigInvalid("<file>", f"cannot read {path}: {exc}") from None
    return parse_config(obj, path.parent)


def bundled_scenario_dir() -> Path:
    """Directory holding the bundled drought scenario (rules, inputs, config)."""
    root = resources.files("semint.data").joinpath(SCENARIO_DIR)
    if not isinstance(root, Path):
        raise SemintError("bundled scenario is not available on the filesystem")
    return root
