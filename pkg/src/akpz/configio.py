"""Flat key-value documents used for experiment specs and CLI configs.

Format: one `key = value` pair per line; blank lines and lines starting with
'#' are ignored; a key may repeat, in which case its values accumulate in
order. Keys are dotted lowercase words. Values are kept as strings here;
callers coerce them.
"""

from __future__ import annotations

import re

from .errors import ConfigError

_KEY_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]*$")


def parse_kv(text, source="<config>"):
    """Ordered dict key -> list of string values."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if not _KEY_RE.match(key):
            raise ConfigError(f"{source}:{lineno}: bad key {key!r}")
        out.setdefault(key, []).append(val.strip())
    return out


def read_kv(path):
    with open(path) as fh:
        return parse_kv(fh.read(), source=str(path))


def format_kv(pairs):
    """pairs: iterable of (key, value); values are stringified with repr-free
    formatting (floats get 17 significant digits)."""
    lines = []
    for key, val in pairs:
        if isinstance(val, float):
            sval = f"{val:.17g}"
        elif isinstance(val, (list, tuple)):
            sval = ",".join(
                f"{v:.17g}" if isinstance(v, float) else str(v) for v in val
            )
        else:
            sval = str(val)
        lines.append(f"{key} = {sval}")
    return "\n".join(lines) + "\n"


def one(kv, key, default=None, required=False, source="<config>"):
    vals = kv.get(key)
    if not vals:
        if required:
            raise ConfigError(f"{source}: missing required key {key!r}")
        return default
    if len(vals) > 1:
        raise ConfigError(f"{source}: key {key!r} given {len(vals)} times")
    return vals[0]


def coerce(val, kind, key, source="<config>"):
    try:
        if kind is bool:
            low = val.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(val)
        return kind(val)
    except ValueError:
        raise ConfigError(
            f"{source}: key {key!r}: cannot read {val!r} as {kind.__name__}"
        ) from None
