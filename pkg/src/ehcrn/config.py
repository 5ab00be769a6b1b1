"""Line-oriented run-configuration files.

Grammar: one `key = value` pair per line, `#` starts a comment, blank
lines ignored.  Values are numbers, words, or comma-separated number
lists.  Unknown keys are errors; every key has a documented default.
Command-line flags override file values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path


class ConfigError(ValueError):
    """Malformed config file; message carries the line number."""


@dataclass
class RunConfig:
    """Raw parsed key/value pairs, insertion ordered."""

    values: dict[str, str] = field(default_factory=dict)
    source: str = "<memory>"

    def serialize(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.values.items())

    # typed accessors -----------------------------------------------------

    def get_float(self, key: str, default: float | None = None) -> float:
        if key not in self.values:
            if default is None:
                raise ConfigError(f"{self.source}: missing required key '{key}'")
            return default
        try:
            return float(self.values[key])
        except ValueError:
            raise ConfigError(
                f"{self.source}: key '{key}' is not a number: {self.values[key]!r}")

    def get_int(self, key: str, default: int | None = None) -> int:
        if key not in self.values:
            if default is None:
                raise ConfigError(f"{self.source}: missing required key '{key}'")
            return default
        try:
            return int(self.values[key])
        except ValueError:
            raise ConfigError(
                f"{self.source}: key '{key}' is not an integer: {self.values[key]!r}")

    def get_str(self, key: str, default: str | None = None) -> str:
        if key not in self.values:
            if default is None:
                raise ConfigError(f"{self.source}: missing required key '{key}'")
            return default
        return self.values[key]

    def get_bool(self, key: str, default: bool = False) -> bool:
        raw = self.values.get(key)
        if raw is None:
            return default
        if raw.lower() in ("true", "yes", "1", "on"):
            return True
        if raw.lower() in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"{self.source}: key '{key}' is not a boolean: {raw!r}")

    def get_floats(self, key: str, default: list[float] | None = None) -> list[float]:
        if key not in self.values:
            if default is None:
                raise ConfigError(f"{self.source}: missing required key '{key}'")
            return default
        try:
            return [float(v) for v in self.values[key].split(",")]
        except ValueError:
            raise ConfigError(
                f"{self.source}: key '{key}' is not a number list: {self.values[key]!r}")

    def get_float_or_floats(self, key: str) -> float | tuple[float, ...]:
        raw = self.get_str(key)
        parts = raw.split(",")
        vals = self.get_floats(key)
        return vals[0] if len(parts) == 1 else tuple(vals)

    def check_known(self, known: set[str]) -> None:
        for k in self.values:
            if k not in known:
                raise ConfigError(f"{self.source}: unknown key '{k}'")


def parse_config_text(text: str, source: str = "<memory>") -> RunConfig:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError(f"{source}:{lineno}: empty key or value in {raw!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key '{key}'")
        values[key] = value
    return RunConfig(values=values, source=source)


def parse_config(path: str | Path) -> RunConfig:
    path = Path(path)
    return parse_config_text(path.read_text(), source=str(path))
