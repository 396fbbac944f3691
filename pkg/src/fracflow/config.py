"""Line-oriented configuration files: `key = value`, `#` comments, UTF-8."""

from __future__ import annotations

from pathlib import Path

from .errors import ConfigError


class Config:
    """Flat string-to-string mapping with typed, error-reporting accessors."""

    def __init__(self, entries: dict[str, str], source: str = "<memory>"):
        self.entries = dict(entries)
        self.source = source

    @classmethod
    def from_file(cls, path) -> "Config":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_text(text, source=str(path))

    @classmethod
    def from_text(cls, text: str, source: str = "<memory>") -> "Config":
        entries = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
            key, value = line.split("=", 1)
            key = key.strip()
            if not key:
                raise ConfigError(f"{source}:{lineno}: empty key")
            entries[key] = value.strip()
        return cls(entries, source)

    def has(self, key: str) -> bool:
        return key in self.entries

    def _raw(self, key: str, default):
        return self.entries.get(key, default)

    def get_str(self, key: str, default=None) -> str:
        v = self._raw(key, default)
        return v if isinstance(v, str) else v

    def get_float(self, key: str, default=None) -> float:
        v = self._raw(key, default)
        if v is None or isinstance(v, (int, float)):
            return v
        try:
            return float(v)
        except ValueError as exc:
            raise ConfigError(f"{self.source}: key {key!r}: {v!r} is not a number") from exc

    def get_int(self, key: str, default=None) -> int:
        v = self._raw(key, default)
        if v is None or isinstance(v, int):
            return v
        try:
            return int(v)
        except ValueError as exc:
            raise ConfigError(f"{self.source}: key {key!r}: {v!r} is not an integer") from exc

    def get_floats(self, key: str, default=None) -> list[float]:
        v = self._raw(key, default)
        if v is None or isinstance(v, list):
            return v
        try:
            return [float(tok) for tok in v.split(",") if tok.strip()]
        except ValueError as exc:
            raise ConfigError(f"{self.source}: key {key!r}: {v!r} is not a number list") from exc

    def get_ints(self, key: str, default=None) -> list[int]:
        v = self._raw(key, default)
        if v is None or isinstance(v, list):
            return v
        try:
            return [int(tok) for tok in v.split(",") if tok.strip()]
        except ValueError as exc:
            raise ConfigError(f"{self.source}: key {key!r}: {v!r} is not an integer list") from exc

    def require(self, *keys: str) -> None:
        missing = [k for k in keys if k not in self.entries]
        if missing:
            raise ConfigError(f"{self.source}: missing required keys: {', '.join(missing)}")
