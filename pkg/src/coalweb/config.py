"""Experiment configuration files.

Grammar, one setting per line::

    # comment
    key = value
    section.key = value      # trailing comments allowed

Keys are dotted identifiers; values are numbers, words, ``on``/``off``, or
comma-separated lists.  Repeated keys and unknown keys are errors.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

KINDS = ("eta", "tightness", "bstats", "donsker", "dual", "census", "skeleton", "metrics")

_KEY = re.compile(r"^[a-z_][a-z0-9_]*(\.[a-z_][a-z0-9_]*)*$")

# key -> (parser, default)
_FLOAT = float
_INT = int


def _bool(v: str) -> bool:
    if v in ("on", "true", "yes", "1"):
        return True
    if v in ("off", "false", "no", "0"):
        return False
    raise ValueError(f"expected on/off, got {v!r}")


def _floats(v: str) -> tuple[float, ...]:
    return tuple(float(x) for x in v.split(",") if x.strip())


def parse_seed(v: str) -> int:
    n = int(v, 0)
    if not 0 <= n < 1 << 64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return n


def _pairs(v: str) -> tuple[tuple[float, float], ...]:
    out = []
    for item in v.split(";"):
        if item.strip():
            x, t = item.split(",")
            out.append((float(x), float(t)))
    return tuple(out)


def _choice(*opts):
    def parse(v: str) -> str:
        if v not in opts:
            raise ValueError(f"expected one of {', '.join(opts)}")
        return v

    return parse


SCHEMA: dict[str, tuple[Any, Any]] = {
    "kind": (_choice(*KINDS), None),
    "time_mode": (_choice("discrete", "continuous"), "discrete"),
    "delta": (_floats, (1.0,)),
    "seed": (parse_seed, 0),
    "n_replicas": (_INT, 1000),
    "out": (str, "results"),
    "boundary": (_choice("open", "periodic"), "open"),
    "window.i_min": (_INT, None),
    "window.i_max": (_INT, None),
    "window.t_min": (_FLOAT, None),
    "window.t_max": (_FLOAT, None),
    "query.t0": (_FLOAT, 0.0),
    "query.t": (_FLOAT, 1.0),
    "query.a": (_FLOAT, 0.0),
    "query.b": (_FLOAT, 1.0),
    "query.epsilon": (_floats, ()),
    "check.rel_tol": (_FLOAT, 0.05),
    "check.n_se": (_FLOAT, 3.0),
    "check.k_max": (_INT, 3),
    "check.ks_max": (_FLOAT, 0.02),
    "tightness.t": (_floats, (0.16, 0.08, 0.04, 0.02, 0.01)),
    "tightness.u": (_FLOAT, 1.0),
    "tightness.n_space": (_INT, 4),
    "tightness.n_time": (_INT, 2),
    "tightness.fit_t_min": (_FLOAT, 0.04),
    "bstats.t0": (_FLOAT, 0.0),
    "bstats.t": (_FLOAT, 1.0),
    "bstats.epsilon": (_floats, (0.4, 0.2, 0.1, 0.05)),
    "donsker.t_eval": (_FLOAT, 1.0),
    "donsker.dist": (_FLOAT, 1.0),
    "skeleton.seeds": (_pairs, ((0.0, 0.0), (1.0, 0.0))),
    "skeleton.dt": (_FLOAT, 0.001),
    "skeleton.t_end": (_FLOAT, 1.0),
    "skeleton.bridge_correction": (_bool, False),
    "skeleton.order": (lambda v: tuple(int(x) for x in v.split(",")), ()),
}


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if key is not None:
            loc.append(f"key {key!r}")
        super().__init__(f"{', '.join(loc)}: {message}" if loc else message)
        self.line = line
        self.key = key


@dataclass(frozen=True)
class ExperimentConfig:
    values: dict
    text: str = field(default="", repr=False)

    def __getitem__(self, key: str):
        return self.values[key]

    def get(self, key: str, default=None):
        v = self.values.get(key)
        return default if v is None else v

    @property
    def kind(self) -> str:
        return self.values["kind"]

    @property
    def seed(self) -> int:
        return self.values["seed"]

    @property
    def n_replicas(self) -> int:
        return self.values["n_replicas"]

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(canonical(self).encode()).hexdigest()[:16]

    def with_overrides(self, **kw) -> "ExperimentConfig":
        vals = dict(self.values)
        for k, v in kw.items():
            if v is not None:
                vals[k] = v
        return ExperimentConfig(vals, self.text)

    def echo(self) -> dict:
        return {k: _jsonable(v) for k, v in sorted(self.values.items())}


def _jsonable(v):
    if isinstance(v, tuple):
        return [_jsonable(x) for x in v]
    return v


def canonical(cfg: ExperimentConfig) -> str:
    """Normalised key listing; equal settings give equal text.

    The output directory is left out: it does not affect any number.
    """
    return "\n".join(f"{k}={cfg.values[k]!r}" for k in sorted(cfg.values) if k != "out")


def parse_config(text: str) -> ExperimentConfig:
    seen: dict[str, int] = {}
    vals: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", lineno)
        key, _, value = (s.strip() for s in line.partition("="))
        if not _KEY.match(key):
            raise ConfigError("malformed key", lineno, key)
        if key not in SCHEMA:
            raise ConfigError("unknown key", lineno, key)
        if key in seen:
            raise ConfigError(f"repeated key (first set on line {seen[key]})", lineno, key)
        if not value:
            raise ConfigError("missing value", lineno, key)
        try:
            vals[key] = SCHEMA[key][0](value)
        except ValueError as exc:
            raise ConfigError(f"bad value {value!r} ({exc})", lineno, key) from None
        seen[key] = lineno
    if "kind" not in vals:
        raise ConfigError("missing required key", None, "kind")
    for key, (_, default) in SCHEMA.items():
        vals.setdefault(key, default)
    if vals["n_replicas"] < 0:
        raise ConfigError("must be nonnegative", seen.get("n_replicas"), "n_replicas")
    return ExperimentConfig(vals, text)


def load_config(path: str | Path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())
