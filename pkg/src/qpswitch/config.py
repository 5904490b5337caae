"""Run configuration: defaults, key=value files and grid strings.

A config file holds one ``key = value`` per line; ``#`` starts a comment.
Keys are the field names of :class:`RunConfig`. Grids are written either as
a comma list (``0,1,2,3``) or as ``start:stop:step`` with ``stop`` included.
"""

from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any

from .entdist import EntParams
from .qkd import QkdParams


class ConfigError(ValueError):
    """Bad config file, key or value."""


@dataclass(frozen=True)
class RunConfig:
    # QKD channel and switching
    alpha: float = 0.2
    eta_det: float = 0.5
    p_dark: float = 1e-6
    f: float = 1.15
    e_d: float = 0.01
    P: float = 0.5
    tq_over_tp: float = 100.0
    # entanglement distribution
    total_length: float = 0.0
    T1: float = 500_000.0
    T2: float = 500_000.0
    processing_time: int = 125_000
    emission_period: int = 5_000
    qubits_per_frame: int = 10
    p_l: float = 0.008
    # run control
    seed: int = 0
    trials: int = 100_000
    out: str = "-"
    # sweep grids
    qkd_lengths: str = "0:250:5"
    qkd_switches: str = "0,1,2,3"
    lengths: str = "0:550:10"
    hops: str = "0,1,2,3"
    t_grid: str = "1e5,2e5,5e5,1e6,2e6,5e6,1e7"
    proc_grid: str = "0,10000,25000,50000,75000,100000,125000,150000,200000"

    def qkd_params(self) -> QkdParams:
        return QkdParams(
            alpha=self.alpha,
            eta_det=self.eta_det,
            p_dark=self.p_dark,
            f=self.f,
            e_d=self.e_d,
            P=self.P,
            tq_over_tp=self.tq_over_tp,
        )

    def ent_params(self) -> EntParams:
        return EntParams(
            total_length=self.total_length,
            T1=self.T1,
            T2=self.T2,
            processing_time=self.processing_time,
            emission_period=self.emission_period,
            qubits_per_frame=self.qubits_per_frame,
            p_l=self.p_l,
        )


FIELD_TYPES: dict[str, type] = {
    f.name: {"float": float, "int": int, "str": str}[f.type] for f in fields(RunConfig)
}


def convert(key: str, raw: str) -> Any:
    if key not in FIELD_TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    kind = FIELD_TYPES[key]
    try:
        if kind is int:
            value = float(raw)
            if not value.is_integer():
                raise ValueError
            return int(value)
        return kind(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot read {raw!r} as {kind.__name__}") from None


def read_config_file(path: str | Path) -> dict[str, Any]:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    parser.optionxform = str  # keys are case sensitive (T1, P)
    try:
        text = Path(path).read_text()
        parser.read_string("[run]\n" + text, source=str(path))
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return {key: convert(key, raw) for key, raw in parser["run"].items()}


def build_config(path: str | Path | None = None, overrides: dict[str, Any] | None = None) -> RunConfig:
    """Defaults, then the file, then explicit overrides."""
    values: dict[str, Any] = {}
    if path is not None:
        values.update(read_config_file(path))
    for key, value in (overrides or {}).items():
        if key not in FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        if value is not None:
            values[key] = value
    cfg = dataclasses.replace(RunConfig(), **values)
    try:
        cfg.qkd_params()
        cfg.ent_params()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def parse_grid(text: str) -> list[float]:
    """``"0:100:10"`` (inclusive) or ``"0,5,inf"``."""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            return [start + i * step for i in range(count)]
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"bad grid {text!r}") from None
    if not values:
        raise ConfigError("empty grid")
    return values


def parse_int_grid(text: str) -> list[int]:
    values = parse_grid(text)
    if any(not v.is_integer() for v in values):
        raise ConfigError(f"grid {text!r} must hold integers")
    return [int(v) for v in values]
