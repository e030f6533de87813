"""Plain-text run configuration: ``[section]`` headers and ``key = value`` lines.

Defaults reproduce the reference scenario ``dx = x^(4/9) dt + dL``,
``x0 = 1``, ``alpha = 1.8``, ``T = 2``, step ``0.001``.
"""

from __future__ import annotations

import configparser
import dataclasses
import typing
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .errors import ValidationError

DEFAULT_DELTAS = tuple(2.0 * 2.0 ** -k for k in range(4, 10))


@dataclass
class SampleSection:
    alpha: float = 1.8
    sigma: float = 0.001 ** (1.0 / 1.8)
    n: int = 2000
    seed: int = 42
    stream: int = 0


@dataclass
class ProblemSection:
    drift: str = "odd_power:c=1,beta=4/9"
    x0: float = 1.0
    alpha: float = 1.8
    T: float = 2.0


@dataclass
class SimulateSection:
    delta: float = 0.001
    seed: int = 42
    paths: int = 1


@dataclass
class TheorySection:
    delta: float = 0.001
    p: float = 2.0
    q: Optional[float] = None


@dataclass
class StudySection:
    deltas: tuple = DEFAULT_DELTAS
    ref_ratio: int = 8
    M: int = 1000
    p: float = 2.0
    master_seed: int = 20241015
    workers: int = 1
    block_size: int = 50
    moment_q: float = 1.3
    moment_delta: float = 0.0625
    gap_q: float = 1.0


@dataclass
class RunConfig:
    stable_noise: SampleSection = field(default_factory=SampleSection)
    sde_model: ProblemSection = field(default_factory=ProblemSection)
    em_engine: SimulateSection = field(default_factory=SimulateSection)
    theory_constants: TheorySection = field(default_factory=TheorySection)
    convergence_lab: StudySection = field(default_factory=StudySection)

    def render(self) -> str:
        lines = []
        for sec in dataclasses.fields(self):
            lines.append(f"[{sec.name}]")
            obj = getattr(self, sec.name)
            for f in dataclasses.fields(obj):
                lines.append(f"{f.name} = {_fmt(getattr(obj, f.name))}")
            lines.append("")
        return "\n".join(lines)

    @classmethod
    def parse(cls, text: str) -> "RunConfig":
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ValidationError(f"malformed config: {exc}") from exc
        cfg = cls()
        known = {f.name for f in dataclasses.fields(cls)}
        for name in cp.sections():
            if name not in known:
                raise ValidationError(f"unknown config section [{name}]")
            obj = getattr(cfg, name)
            hints = typing.get_type_hints(type(obj))
            for key, raw in cp.items(name):
                if key not in hints:
                    raise ValidationError(f"unknown key {key!r} in [{name}]")
                setattr(obj, key, _coerce(hints[key], raw, f"{name}.{key}"))
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.parse(fh.read())


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, tuple):
        return ", ".join(_fmt(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def parse_number(text: str) -> float:
    """Float from decimal or fraction text (``0.25``, ``4/9``)."""
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        try:
            return float(text)
        except ValueError as exc:
            raise ValidationError(f"not a number: {text!r}") from exc


def parse_number_list(text: str) -> tuple:
    return tuple(parse_number(t) for t in text.split(",") if t.strip())


def _coerce(tp, raw: str, where: str):
    raw = raw.strip()
    if tp is Optional[float]:
        return None if raw == "" else parse_number(raw)
    if tp is float:
        return parse_number(raw)
    if tp is int:
        try:
            return int(raw)
        except ValueError as exc:
            raise ValidationError(f"{where}: expected an integer, got {raw!r}") from exc
    if tp is tuple:
        return parse_number_list(raw)
    return raw
