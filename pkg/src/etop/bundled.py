"""Access to the sample datasets and space files shipped with the package."""

from importlib import resources
from pathlib import Path

from .errors import ConfigError


def bundled_path(name: str) -> Path:
    """Filesystem path of a bundled data file."""
    p = Path(str(resources.files("etop").joinpath("data", name)))
    if not p.exists():
        raise ConfigError(f"no bundled file named {name!r}")
    return p


def list_bundled() -> list[str]:
    root = resources.files("etop").joinpath("data")
    return sorted(entry.name for entry in root.iterdir() if entry.is_file())
