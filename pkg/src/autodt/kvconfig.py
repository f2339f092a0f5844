"""Minimal ``key = value`` configuration files.

Blank lines and lines starting with ``#`` are ignored; a ``#`` after a value
starts a comment. Keys are case-sensitive and may appear once. List values are
comma separated.
"""

from __future__ import annotations


class ConfigError(ValueError):
    pass


def parse_kv(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def split_list(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]
