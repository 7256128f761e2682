"""Flat key-value config text: ``section.key = value`` lines.

Shared by scenario files and encryption key files.  Blank lines and ``#``
comments are ignored; keys are dotted paths; duplicate keys are rejected.
Parse errors carry the 1-based line number.
"""

from __future__ import annotations

from .errors import ParseError

__all__ = ["parse_kv", "format_kv", "KVReader", "CONFIG_FORMAT_VERSION"]

CONFIG_FORMAT_VERSION = 1


def parse_kv(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    got_any = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        got_any = True
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key:
            raise ParseError(f"line {lineno}: empty key")
        if key in out:
            raise ParseError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    if not got_any:
        raise ParseError("empty config")
    return out


def format_kv(pairs: dict[str, str]) -> str:
    return "".join(f"{k} = {v}\n" for k, v in pairs.items())


class KVReader:
    """Typed access to a parsed key-value dict, tracking consumed keys."""

    def __init__(self, data: dict[str, str]):
        self.data = dict(data)
        self.used: set[str] = set()

    def has(self, key: str) -> bool:
        return key in self.data

    def _raw(self, key: str, default=None, required=False):
        if key in self.data:
            self.used.add(key)
            return self.data[key]
        if required:
            raise ParseError(f"missing required key {key!r}")
        return default

    def str(self, key: str, default: str | None = None, required=False, choices=None):
        val = self._raw(key, default, required)
        if val is not None and choices is not None and val not in choices:
            raise ParseError(f"{key!r} must be one of {sorted(choices)}, got {val!r}")
        return val

    def float(self, key: str, default=None, required=False):
        val = self._raw(key, default, required)
        if val is None or isinstance(val, float):
            return val
        try:
            return float(val)
        except ValueError as exc:
            raise ParseError(f"{key!r}: not a number: {val!r}") from exc

    def int(self, key: str, default=None, required=False):
        val = self._raw(key, default, required)
        if val is None or isinstance(val, int):
            return val
        try:
            return int(val)
        except ValueError as exc:
            raise ParseError(f"{key!r}: not an integer: {val!r}") from exc

    def bool(self, key: str, default=None, required=False):
        val = self._raw(key, default, required)
        if val is None or isinstance(val, bool):
            return val
        low = val.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ParseError(f"{key!r}: not a boolean: {val!r}")

    def floats(self, key: str, default=None, required=False):
        val = self._raw(key, default, required)
        if val is None or not isinstance(val, str):
            return val
        try:
            return tuple(float(tok) for tok in val.replace(",", " ").split())
        except ValueError as exc:
            raise ParseError(f"{key!r}: not a number list: {val!r}") from exc

    def ints(self, key: str, default=None, required=False):
        val = self._raw(key, default, required)
        if val is None or not isinstance(val, str):
            return val
        try:
            return tuple(int(tok) for tok in val.replace(",", " ").split())
        except ValueError as exc:
            raise ParseError(f"{key!r}: not an integer list: {val!r}") from exc

    def reject_unknown(self):
        unknown = sorted(set(self.data) - self.used)
        if unknown:
            raise ParseError(f"unknown keys: {', '.join(unknown)}")
