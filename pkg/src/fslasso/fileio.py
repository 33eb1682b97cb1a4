"""CSV and key-value text formats used by the CLI and the benchmark outputs.

All floats are written with ``%.17g`` so identical inputs reproduce
byte-identical files.  Config files are flat ``key = value`` lines; lines
starting with ``#`` are comments.
"""

from __future__ import annotations

import os

import numpy as np


class ConfigError(ValueError):
    """Malformed or incomplete configuration; maps to CLI exit code 2."""


def format_float(v) -> str:
    return format(float(v), ".17g")


def write_matrix_csv(path, M, header=None) -> None:
    """Write a matrix, one CSV row per line, with an optional header row."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header is not None:
            fh.write(",".join(str(h) for h in header) + "\n")
        for row in M:
            fh.write(",".join(format_float(v) for v in row) + "\n")


def read_matrix_csv(path, has_header=False):
    """Read a matrix written by :func:`write_matrix_csv`.

    Returns ``(matrix, header)``; the header is ``None`` unless requested.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    header = None
    if has_header:
        header, lines = lines[0].split(","), lines[1:]
    data = np.asarray([[float(v) for v in ln.split(",")] for ln in lines])
    return data, header


def write_rows_csv(path, rows, columns) -> None:
    """Write dict rows under a fixed column order."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            cells = []
            for col in columns:
                v = row[col]
                cells.append(format_float(v) if isinstance(v, float) else str(v))
            fh.write(",".join(cells) + "\n")


def write_keyvalue(path, mapping) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key, value in mapping.items():
            if isinstance(value, float):
                value = format_float(value)
            fh.write(f"{key} = {value}\n")


def read_keyvalue(path) -> dict:
    """Parse a flat ``key = value`` file into a string-to-string dict."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


def coerce(mapping, key, kind, default=None, required=False):
    """Typed lookup into a parsed config; names the key in error messages."""
    if key not in mapping:
        if required:
            raise ConfigError(f"missing required config key: {key}")
        return default
    raw = mapping[key]
    try:
        if kind is bool:
            lowered = raw.lower()
            if lowered in ("1", "true", "yes"):
                return True
            if lowered in ("0", "false", "no"):
                return False
            raise ValueError(raw)
        return kind(raw)
    except ValueError as exc:
        raise ConfigError(f"config key {key!r} has invalid value {raw!r}") from exc


def ensure_dir(path) -> None:
    os.makedirs(path, exist_ok=True)
