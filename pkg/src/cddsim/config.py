"""Run configuration: a small ``key = value`` grammar with sections.

Example::

    # default single-cell run
    [run]
    gate = pi8
    n_max = 5
    [model]
    J = 10kHz
    beta = 1MHz
    [sequence]
    tau0 = 1ns
    delta = 0

Keys may also appear before the first section header.  Times accept the
suffixes ``s, ms, us, ns, ps``; frequencies accept ``Hz, kHz, MHz, GHz``
and ``rad/s`` (all read as angular frequencies).  List values are comma
separated or ``decades(lo, hi)`` for ``10**lo .. 10**hi``.
"""
from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass, fields

from .dfs import CPHASE_SEED, GATE_NAMES
from .errors import ParseError, ValidationError
from .model import GEOMETRIES

STRATEGIES = ("while", "then", "free")
PRECISIONS = ("standard", "extended")
FORMATS = ("csv", "json")
MAX_QUBITS = 12
DEFAULT_DECADES = tuple(10.0 ** k for k in range(7))

TIME_UNITS = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "ns": 1e-9, "ps": 1e-12}
FREQ_UNITS = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9, "rad/s": 1.0}


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce a run or a sweep.

    ``blocks=None`` picks 2 for cphase and 1 otherwise.  ``pack`` lets
    low levels host gates with more ops than intervals.
    """

    gate: str = "pi8"
    strategy: str = "while"
    n_max: int = 5
    precision: str = "standard"
    seed: int = CPHASE_SEED
    pack: bool = True
    workers: int = 1
    J: float = 1e4
    beta: float = 1e6
    geometry: str = "linear"
    bath_count: int = 2
    blocks: int | None = None
    bath_scaling: float = 1.0
    tau0: float = 1e-9
    delta: float = 0.0
    cphase_file: str | None = None
    out: str | None = None
    format: str = "csv"
    record_timing: bool = False
    J_values: tuple[float, ...] = DEFAULT_DECADES
    beta_values: tuple[float, ...] = DEFAULT_DECADES
    budget: int = 10000

    @property
    def block_count(self) -> int:
        if self.blocks is not None:
            return self.blocks
        return 2 if self.gate == "cphase" else 1

    @property
    def system_count(self) -> int:
        return 4 * self.block_count

    @property
    def n_qubits(self) -> int:
        return self.system_count + self.bath_count

    def replace(self, **changes) -> "RunConfig":
        return validate(dataclasses.replace(self, **changes))


SECTIONS = {
    "run": ("gate", "strategy", "n_max", "precision", "seed", "pack", "workers"),
    "model": ("J", "beta", "geometry", "bath_count", "blocks", "bath_scaling"),
    "sequence": ("tau0", "delta", "cphase_file"),
    "output": ("out", "format", "record_timing"),
    "sweep": ("J_values", "beta_values", "budget"),
}
SECTION_OF = {k: s for s, keys in SECTIONS.items() for k in keys}
ALIASES = {"tau0_s": "tau0", "delta_s": "delta", "J_rads": "J", "beta_rads": "beta",
           "path": "out", "cphase_sequence": "cphase_file"}
KINDS = {
    "gate": "str", "strategy": "str", "precision": "str", "geometry": "str", "format": "str",
    "n_max": "int", "seed": "int", "workers": "int", "bath_count": "int", "blocks": "blocks",
    "budget": "int", "pack": "bool", "record_timing": "bool",
    "J": "freq", "beta": "freq", "bath_scaling": "float", "tau0": "time", "delta": "time",
    "cphase_file": "path", "out": "path", "J_values": "freqs", "beta_values": "freqs",
}

_NUM = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-zµ/]*)\s*$")
_DECADES = re.compile(r"^\s*decades\(\s*(-?\d+)\s*,\s*(-?\d+)\s*\)\s*$")


def _number(text: str, units: dict | None, what: str) -> float:
    m = _NUM.match(text)
    if not m:
        raise ValueError(f"cannot read {what} from {text.strip()!r}")
    value, unit = float(m.group(1)), m.group(2)
    if unit:
        if units is None:
            raise ValueError(f"{what} takes no unit, got {unit!r}")
        scale = units.get(unit) if unit in units else units.get(unit.lower())
        if scale is None:
            raise ValueError(f"unknown unit {unit!r} for {what}")
        value *= scale
    return value


def _convert(key: str, text: str):
    kind = KINDS[key]
    text = text.strip()
    if kind == "str":
        return text.lower() if key != "gate" else text.lower().replace("/", "").replace("π", "pi")
    if kind == "path":
        return None if text.lower() in ("", "none") else text
    if kind == "bool":
        low = text.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ValueError(f"expected a boolean, got {text!r}")
    if kind == "int":
        v = _number(text, None, key)
        if v != int(v):
            raise ValueError(f"{key} must be an integer, got {text!r}")
        return int(v)
    if kind == "blocks":
        return None if text.lower() == "auto" else _convert("n_max", text)
    if kind == "float":
        return _number(text, None, key)
    if kind == "time":
        return _number(text, TIME_UNITS, key)
    if kind == "freq":
        return _number(text, FREQ_UNITS, key)
    m = _DECADES.match(text)
    if m:
        lo, hi = int(m.group(1)), int(m.group(2))
        if hi < lo:
            raise ValueError(f"decades({lo}, {hi}) is empty")
        return tuple(10.0 ** k for k in range(lo, hi + 1))
    return tuple(_number(part, FREQ_UNITS, key) for part in text.split(","))


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    """Parse a config document; unset keys keep the defaults (or ``base``)."""
    values: dict = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        stripped = line.strip()
        if not stripped:
            continue
        col = len(line) - len(line.lstrip()) + 1
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ParseError("unterminated section header", lineno, col)
            name = stripped[1:-1].strip().lower()
            if name not in SECTIONS:
                raise ParseError(f"unknown section [{name}]", lineno, col + 1)
            section = name
            continue
        if "=" not in line:
            raise ParseError("expected 'key = value'", lineno, col)
        key_text, value_text = line.split("=", 1)
        key = ALIASES.get(key_text.strip(), key_text.strip())
        if key not in KINDS:
            raise ParseError(f"unknown key {key_text.strip()!r}", lineno, col)
        if section is not None and SECTION_OF[key] != section:
            raise ParseError(f"key {key!r} belongs in [{SECTION_OF[key]}], not [{section}]", lineno, col)
        if key in values:
            raise ParseError(f"duplicate key {key!r}", lineno, col)
        vcol = len(key_text) + 2 + (len(value_text) - len(value_text.lstrip()))
        try:
            values[key] = _convert(key, value_text)
        except ValueError as exc:
            raise ParseError(str(exc), lineno, vcol) from None
    return validate(dataclasses.replace(base or RunConfig(), **values))


def apply_overrides(config: RunConfig, overrides: dict[str, str]) -> RunConfig:
    """Apply ``key -> text`` overrides (as from the command line)."""
    values = {}
    for raw_key, text in overrides.items():
        key = ALIASES.get(raw_key, raw_key)
        if key not in KINDS:
            raise ParseError(f"unknown key {raw_key!r}")
        try:
            values[key] = _convert(key, str(text))
        except ValueError as exc:
            raise ParseError(f"{raw_key}: {exc}") from None
    return validate(dataclasses.replace(config, **values))


def validate(cfg: RunConfig) -> RunConfig:
    """Check every invariant; raises :class:`ValidationError` naming the first violation."""
    def need(cond: bool, message: str):
        if not cond:
            raise ValidationError(message)

    need(cfg.gate in GATE_NAMES, f"gate must be one of {GATE_NAMES}, got {cfg.gate!r}")
    need(cfg.strategy in STRATEGIES, f"strategy must be one of {STRATEGIES}, got {cfg.strategy!r}")
    need(cfg.precision in PRECISIONS, f"precision must be one of {PRECISIONS}, got {cfg.precision!r}")
    need(cfg.geometry in GEOMETRIES, f"geometry must be one of {GEOMETRIES}, got {cfg.geometry!r}")
    need(cfg.format in FORMATS, f"format must be one of {FORMATS}, got {cfg.format!r}")
    need(cfg.n_max >= 0, f"n_max must be >= 0, got {cfg.n_max}")
    need(math.isfinite(cfg.tau0) and cfg.tau0 > 0, f"tau0 must be > 0, got {cfg.tau0}")
    need(math.isfinite(cfg.delta) and cfg.delta >= 0, f"delta must be >= 0, got {cfg.delta}")
    need(math.isfinite(cfg.J) and cfg.J >= 0, f"J must be >= 0, got {cfg.J}")
    need(math.isfinite(cfg.beta) and cfg.beta >= 0, f"beta must be >= 0, got {cfg.beta}")
    need(math.isfinite(cfg.bath_scaling) and cfg.bath_scaling > 0,
         f"bath_scaling must be > 0, got {cfg.bath_scaling}")
    need(cfg.bath_count >= 0, f"bath_count must be >= 0, got {cfg.bath_count}")
    need(cfg.blocks in (None, 1, 2), f"blocks must be 1, 2 or auto, got {cfg.blocks}")
    need(not (cfg.gate == "cphase" and cfg.block_count != 2), "cphase needs blocks = 2")
    need(cfg.n_qubits <= MAX_QUBITS,
         f"total qubits {cfg.n_qubits} exceeds the {MAX_QUBITS}-qubit limit")
    need(cfg.workers >= 1, f"workers must be >= 1, got {cfg.workers}")
    need(cfg.budget >= 1, f"budget must be >= 1, got {cfg.budget}")
    for name in ("J_values", "beta_values"):
        vals = getattr(cfg, name)
        need(len(vals) > 0, f"{name} must not be empty")
        need(all(math.isfinite(v) and v > 0 for v in vals), f"{name} must all be > 0")
    return cfg


def _fmt(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    return str(value)


def serialize_config(cfg: RunConfig) -> str:
    """Canonical text form; ``parse_config(serialize_config(c)) == c``."""
    lines = []
    for section, keys in SECTIONS.items():
        lines.append(f"[{section}]")
        for key in keys:
            v = getattr(cfg, key)
            lines.append(f"{key} = {'auto' if key == 'blocks' and v is None else _fmt(v)}")
        lines.append("")
    return "\n".join(lines)


def config_dict(cfg: RunConfig) -> dict:
    out = {}
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        out[f.name] = list(v) if isinstance(v, tuple) else v
    return out
