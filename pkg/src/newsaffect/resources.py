"""Access to the data files shipped inside the package."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .errors import ConfigError


def data_path(name: str) -> Path:
    p = Path(str(resources.files("newsaffect").joinpath("data", name)))
    if not p.is_file():
        raise ConfigError(f"packaged data file {name!r} not found at {p}")
    return p
