"""Bundled example configurations."""
from pathlib import Path

FIXTURES = Path(__file__).parent


def fixture_path(name: str) -> Path:
    path = FIXTURES / (name if name.endswith(".toml") else f"{name}.toml")
    if not path.is_file():
        raise FileNotFoundError(f"no bundled fixture {name!r}")
    return path
