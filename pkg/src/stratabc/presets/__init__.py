"""Named experiment configs for the benchmark case studies, shipped as TOML."""

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from importlib import resources
from typing import Any

from stratabc.exceptions import ConfigError


def preset_names() -> list[str]:
    return sorted(
        entry.name.removesuffix(".toml")
        for entry in resources.files(__name__).iterdir()
        if entry.name.endswith(".toml")
    )


def preset_text(name: str) -> str:
    if name not in preset_names():
        raise ConfigError([f"no config file or preset named {name!r}; presets: {', '.join(preset_names())}"])
    return resources.files(__name__).joinpath(f"{name}.toml").read_text(encoding="utf-8")


def load_preset(name: str) -> dict[str, Any]:
    return tomllib.loads(preset_text(name))
