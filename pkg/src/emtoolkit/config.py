"""Strict JSON run configuration for the command-line tool.

A config is one JSON object.  Every key must appear in :data:`SCHEMA`; values
are type-checked.  Command-line flags override config values.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .core import ConfigError

ENV_VAR = "EMTOOLKIT_CONFIG"

_num = (int, float)
_vec = ("vec3",)

SCHEMA: dict[str, Any] = {
    "units": str,
    "threads": int,
    "quadrature": {"n_r": int, "n_theta": int, "n_phi": int},
    "tolerances": {"continuity": _num, "decay": _num},
    "zeros": {"l": int, "count": int, "r0": _num},
    "modes": {"l": int, "m": int, "n": int, "r0": _num},
    "spectrum": {"Q": _num, "l0": list, "n": str, "r0": _num, "beta": _num},
    "jefimenko": {
        "source": {"kind": str, "strength": _num, "sigma": _num, "omega": _num,
                   "direction": _vec, "center": _vec},
        "source_grid": {"half_width": _num, "n": int},
        "grid": {"origin": _vec, "n": int, "h": _num, "dt": _num, "nt": int, "t0": _num},
    },
    "boost": {"v": _vec},
}


def _check(value: Any, schema: Any, where: str) -> None:
    if isinstance(schema, dict):
        if not isinstance(value, dict):
            raise ConfigError(f"{where or 'config'}: expected an object")
        unknown = sorted(set(value) - set(schema))
        if unknown:
            raise ConfigError(f"{where or 'config'}: unknown key(s) {unknown}")
        for key, sub in value.items():
            _check(sub, schema[key], f"{where}.{key}" if where else key)
        return
    if schema == _vec:
        ok = isinstance(value, list) and len(value) == 3 and all(
            isinstance(v, _num) and not isinstance(v, bool) for v in value)
        if not ok:
            raise ConfigError(f"{where}: expected a list of three numbers")
        return
    if isinstance(value, bool) or not isinstance(value, schema):
        raise ConfigError(f"{where}: wrong type {type(value).__name__}")


@dataclass(frozen=True)
class RunConfig:
    data: dict = field(default_factory=dict)
    source: Optional[str] = None

    def __post_init__(self) -> None:
        _check(self.data, SCHEMA, "")
        units = self.data.get("units")
        if units is not None and units not in ("natural", "si"):
            raise ConfigError(f"units: expected 'natural' or 'si', got {units!r}")

    @classmethod
    def from_json(cls, text: str, source: Optional[str] = None) -> "RunConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{source or 'config'}: invalid JSON ({exc})") from exc
        return cls(data, source)

    @classmethod
    def load(cls, path: Optional[str | Path] = None) -> "RunConfig":
        """Read ``path``, else the file named by ``EMTOOLKIT_CONFIG``, else empty."""
        path = path or os.environ.get(ENV_VAR)
        if not path:
            return cls()
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_json(text, str(path))

    def get(self, *keys: str, default: Any = None) -> Any:
        node: Any = self.data
        for k in keys:
            if not isinstance(node, dict) or k not in node:
                return default
            node = node[k]
        return node


def pick(flag: Any, config: RunConfig, *keys: str, default: Any = None) -> Any:
    """Flag value if given, else the config value, else ``default``."""
    if flag is not None:
        return flag
    return config.get(*keys, default=default)
