"""Shared locations for tests: the package's bundled data directory."""

from importlib import resources
from pathlib import Path

BUNDLED_DATA = Path(str(resources.files("cogchess").joinpath("data")))
