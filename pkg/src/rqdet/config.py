"""Run configuration shared by the CLI and the reports it writes."""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction

import numpy as np

from .dynamics import MapSpec, OdometerExtension
from .intervals import epsilon_t

ENV_PREFIX = "RQDET_"


@dataclass
class RunConfig:
    command: str
    map: str | None = None
    x0: str | None = None
    alpha: str | None = None
    eps: str | None = None
    n: int | None = None
    n_max: int = 16384
    m_cap: int = 32
    max_period: int = 1 << 16
    depth: int | None = None
    stages: int | None = None
    t_range: str | None = None
    kind: str | None = None
    transient: int = 1000
    out: str | None = None
    formats: list[str] = field(default_factory=lambda: ["json"])
    threads: int = 1
    seed: int = 0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def render(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    @classmethod
    def parse(cls, text: str) -> "RunConfig":
        return cls.from_dict(json.loads(text))

    def apply_env(self, environ=None) -> "RunConfig":
        """Override budget caps from ``RQDET_N_MAX``, ``RQDET_M_CAP``, ``RQDET_MAX_PERIOD``."""
        environ = os.environ if environ is None else environ
        for name in ("n_max", "m_cap", "max_period"):
            key = ENV_PREFIX + name.upper()
            if key in environ:
                setattr(self, name, int(environ[key]))
        return self


def parse_number(text: str):
    """``"7/2187"`` becomes an exact :class:`Fraction`, anything else a float."""
    text = text.strip()
    if "/" in text:
        return Fraction(text)
    return float(text)


def parse_range(text: str) -> list[int]:
    """``"2..8"`` (inclusive) or ``"2,3,5"``."""
    if ".." in text:
        a, b = text.split("..")
        return list(range(int(a), int(b) + 1))
    return [int(v) for v in text.split(",")]


def parse_eps(text: str, m: MapSpec | None = None) -> tuple[list, str]:
    """Resolve an eps specification into values and a provenance tag.

    Forms: ``"1e-3,7/2187"``; ``"log:HI:LO:K"`` (K log-spaced values);
    ``"eps_t:A..B"`` and ``"ladder"`` (odometer maps only).
    """
    if text.startswith("eps_t:"):
        if not isinstance(m, OdometerExtension):
            raise ValueError("eps_t grids need an odometer map")
        return [epsilon_t(m.system, t) for t in parse_range(text[6:])], "eps_t"
    if text == "ladder":
        if not isinstance(m, OdometerExtension) or m.system.ladder is None:
            raise ValueError("ladder grids need odometer:theorem3")
        lad = m.system.ladder
        vals = [e for pair in zip(lad.eps, lad.eps_prime) for e in pair]
        return vals, "ladder"
    if text.startswith("log:"):
        hi, lo, k = text[4:].split(":")
        vals = np.logspace(math.log10(float(hi)), math.log10(float(lo)), int(k))
        return [float(v) for v in vals], "generic"
    vals = [parse_number(v) for v in text.split(",") if v.strip()]
    if not vals:
        raise ValueError("empty eps list")
    return vals, "explicit"
