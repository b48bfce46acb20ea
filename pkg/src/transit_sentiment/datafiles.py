"""Paths that may point at files shipped with the package (``builtin:<name>``)."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

PREFIX = "builtin:"


def _builtin(path: str):
    return resources.files("transit_sentiment.data").joinpath(path[len(PREFIX):])


def read_text(path: str | Path) -> str:
    path = str(path)
    if path.startswith(PREFIX):
        return _builtin(path).read_text("utf-8")
    return Path(path).read_text(encoding="utf-8")


def exists(path: str | Path) -> bool:
    path = str(path)
    if path.startswith(PREFIX):
        return _builtin(path).is_file()
    return Path(path).is_file()
