"""Interval maps and orbit generation.

Analytic families (logistic, tent) iterate in double precision.  The map
associated to an admissible system is built directly: it sends each
cylinder ``K_a`` onto ``K_{a+1}`` and is affine on every gap between
sibling cylinders, with gap endpoints sent to the images of the Cantor
points they represent.  Exact :class:`~fractions.Fraction` inputs give
exact outputs.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

from .intervals import IntervalSystem, RationalInterval, build_ternary, build_theorem3, frac_str
from .odometer import Word

DEFAULT_EVAL_DEPTH = 20


@dataclass(frozen=True)
class Logistic:
    r: float

    def __post_init__(self):
        if not 0 <= self.r <= 4:
            raise ValueError("logistic parameter must lie in [0, 4]")

    def __str__(self):
        return f"logistic:{self.r}"


@dataclass(frozen=True)
class Tent:
    s: float

    def __post_init__(self):
        if not 0 <= self.s <= 2:
            raise ValueError("tent slope must lie in [0, 2]")

    def __str__(self):
        return f"tent:{self.s}"


@dataclass(frozen=True, eq=False)
class OdometerExtension:
    system: IntervalSystem
    depth: int = DEFAULT_EVAL_DEPTH
    name: str = "custom"

    def __str__(self):
        return f"odometer:{self.name}"


MapSpec = Union[Logistic, Tent, OdometerExtension]


def parse_map(text: str, depth: int = DEFAULT_EVAL_DEPTH) -> MapSpec:
    """``logistic:R``, ``tent:S``, ``odometer:ternary`` or ``odometer:theorem3[:STAGES]``."""
    kind, _, rest = text.partition(":")
    if kind == "logistic":
        return Logistic(float(rest))
    if kind == "tent":
        return Tent(float(rest))
    if kind == "odometer":
        name, _, arg = rest.partition(":")
        if name == "ternary":
            return OdometerExtension(build_ternary(), depth, "ternary")
        if name == "theorem3":
            stages = int(arg) if arg else 3
            return OdometerExtension(build_theorem3(stages)[0], depth, f"theorem3:{stages}")
        raise ValueError(f"unknown odometer system {name!r}")
    raise ValueError(f"unknown map {text!r}")


def eval_map(m: MapSpec, x):
    if not 0 <= x <= 1:
        raise ValueError(f"{x} is outside [0, 1]")
    if isinstance(m, Logistic):
        r = Fraction(m.r) if isinstance(x, Fraction) else m.r
        return r * x * (1 - x)
    if isinstance(m, Tent):
        s = Fraction(m.s) if isinstance(x, Fraction) else m.s
        return s * x if x <= 0.5 else s * (1 - x)
    if isinstance(m, OdometerExtension):
        return odometer_extension_eval(m.system, x, m.depth)
    raise TypeError(f"not a map: {m!r}")


# ---------------------------------------------------------------------------
# map associated to an admissible system


def _children(sys: IntervalSystem, a: Word, lo, hi):
    t = len(a)
    if t + 1 <= sys.materialized_depth:
        lv = sys.level(t + 1)
        size = 1 << t
        return (lv.lo[a.value], lv.hi[a.value]), (lv.lo[a.value + size], lv.hi[a.value + size])
    return sys.split(lo, hi)


def cantor_image(sys: IntervalSystem, w: Word, tail: int) -> Fraction:
    """Position of ``(w tail^inf) + 1``, i.e. the image of ``y_w`` (tail 0) or ``z_w`` (tail 1)."""
    if not w.is_all_ones:
        k = sys.interval_of(w + 1)
        return k.lo if tail == 0 else k.hi
    t = len(w)
    if tail == 0:
        # 1^t 0^inf + 1 = 0^t 1 0^inf
        return sys.interval_of(Word(t + 1, 1 << t)).lo
    # 1^inf + 1 = 0^inf
    return Fraction(0)


def odometer_extension_eval(sys: IntervalSystem, x, depth: int = DEFAULT_EVAL_DEPTH):
    """Evaluate the map associated to ``sys`` at ``x``.

    Descends the cylinder tree while ``x`` stays in a cylinder.  A point in
    the gap between ``K_{a0}`` and ``K_{a1}`` is mapped affinely between the
    images of the gap endpoints; when ``a = 1^t`` those images straddle the
    gap of ``0^t`` and the piece reverses orientation.  Points still inside
    a cylinder at ``depth`` are mapped affinely ``K_a -> K_{a+1}``.
    """
    if not 0 <= x <= 1:
        raise ValueError(f"{x} is outside [0, 1]")
    exact = isinstance(x, (Fraction, int))
    conv = Fraction if exact else float
    a = Word.empty()
    lo, hi = Fraction(0), Fraction(1)
    while len(a) < depth:
        (l0, h0), (l1, h1) = _children(sys, a, lo, hi)
        if x <= conv(h0):
            a, lo, hi = a.extend(0), l0, h0
        elif x >= conv(l1):
            a, lo, hi = a.extend(1), l1, h1
        else:
            p, q = conv(h0), conv(l1)
            fp = conv(cantor_image(sys, a.extend(0), 1))
            fq = conv(cantor_image(sys, a.extend(1), 0))
            return fp + (x - p) * (fq - fp) / (q - p)
    p, q = conv(lo), conv(hi)
    fp = conv(cantor_image(sys, a, 0))
    fq = conv(cantor_image(sys, a, 1))
    return fp + (x - p) * (fq - fp) / (q - p)


# ---------------------------------------------------------------------------
# trajectories


@dataclass
class FloatTrajectory:
    values: np.ndarray
    map: MapSpec | None = None
    x0: float | None = None
    method: str = "iterate"

    def __len__(self):
        return len(self.values)

    def shifted(self, h: int) -> "FloatTrajectory":
        return FloatTrajectory(self.values[h:], self.map, None, self.method)

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "value"])
        for i, v in enumerate(self.values):
            w.writerow([i, repr(float(v))])
        return buf.getvalue()

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.csv_text())


@dataclass
class SymbolicTrajectory:
    """Orbit segment of the address ``alpha`` under the odometer.

    Step ``i`` sits in ``K_{alpha+i}``; its representative position is the
    midpoint of that depth-``T`` cylinder, which lies in the interior of
    every coarser cylinder containing it.  Positions repeat with period
    ``2**T``.
    """

    system: IntervalSystem
    alpha: Word
    length: int

    @property
    def depth(self) -> int:
        return len(self.alpha)

    @property
    def period(self) -> int:
        return 1 << self.depth

    def __len__(self):
        return self.length

    def address(self, i: int) -> Word:
        return self.alpha + i

    def enclosure(self, i: int) -> RationalInterval:
        return self.system.interval_of(self.address(i))

    def indices(self, start: int = 0, stop: int | None = None) -> np.ndarray:
        stop = self.length if stop is None else stop
        return (self.alpha.value + np.arange(start, stop)) % self.period

    def midpoints(self) -> np.ndarray:
        """Float midpoints of all ``2**T`` depth-``T`` cylinders, by word value."""
        den, lo, hi = self.system.level(self.depth).numerators()
        if lo.dtype == object:
            return np.array([float(Fraction(int(l) + int(h), 2 * den)) for l, h in zip(lo, hi)])
        return (lo.astype(np.float64) + hi.astype(np.float64)) / (2.0 * den)

    @property
    def values(self) -> np.ndarray:
        return self.midpoints()[self.indices()]

    def one_period(self) -> np.ndarray:
        return self.midpoints()[self.indices(0, self.period)]

    def shifted(self, h: int) -> "SymbolicTrajectory":
        return SymbolicTrajectory(self.system, self.alpha + h, self.length - h)

    def csv_text(self) -> str:
        lv = self.system.level(self.depth)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "address", "lo", "hi"])
        for i, v in enumerate(self.indices()):
            w.writerow([i, str(Word(self.depth, int(v))), frac_str(lv.lo[v]), frac_str(lv.hi[v])])
        return buf.getvalue()

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.csv_text())


Trajectory = Union[FloatTrajectory, SymbolicTrajectory]


def _tent2_orbit(x0: float, length: int, seed: int) -> np.ndarray:
    """Orbit of a generic point near ``x0`` under the slope-2 tent map.

    Double iteration of this map is exact dyadic arithmetic and reaches 0
    within about 55 steps.  Instead ``x0``'s binary expansion is extended by
    pseudo-random bits and the orbit is read off the expansion:
    ``x_i = 0.(b_{i+1}^b_i)(b_{i+2}^b_i)...``.
    """
    width = 60
    # exact binary expansion of the double x0 (its denominator is a power of 2)
    frac = Fraction(x0)
    nbits = frac.denominator.bit_length() - 1
    num = frac.numerator
    head = [(num >> (nbits - k)) & 1 for k in range(1, nbits + 1)]
    rng = np.random.default_rng(seed)
    total = length + width + 1
    bits = np.zeros(total, dtype=np.uint64)
    h = np.array(head[: total - 1], dtype=np.uint64)
    bits[1 : 1 + len(h)] = h
    rest = total - 1 - len(h)
    if rest > 0:
        bits[1 + len(h) :] = rng.integers(0, 2, size=rest, dtype=np.uint64)
    if x0 == 1.0:
        bits[1:] = 1
    acc = np.zeros(length, dtype=np.uint64)
    for k in range(1, width + 1):
        acc |= bits[k : k + length] << np.uint64(width - k)
    flip = bits[:length].astype(bool)
    mask = np.uint64((1 << width) - 1)
    acc = np.where(flip, ~acc & mask, acc)
    return acc.astype(np.float64) / float(1 << width)


def trajectory(m: MapSpec, x0, length: int, transient: int = 0, seed: int = 0) -> FloatTrajectory:
    """Orbit ``x_transient, ..., x_{transient+length-1}`` of ``x0``.

    A :class:`~fractions.Fraction` ``x0`` is iterated exactly.  The slope-2
    tent map with a float ``x0`` is handled by :func:`_tent2_orbit`.
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    if isinstance(m, Tent) and m.s == 2.0 and not isinstance(x0, Fraction):
        vals = _tent2_orbit(float(x0), transient + length, seed)[transient:]
        return FloatTrajectory(vals, m, float(x0), "binary-expansion")
    x = x0
    for _ in range(transient):
        x = eval_map(m, x)
    out = np.empty(length, dtype=np.float64)
    for i in range(length):
        out[i] = float(x)
        if i + 1 < length:
            x = eval_map(m, x)
    return FloatTrajectory(out, m, float(x0), "exact" if isinstance(x0, Fraction) else "iterate")


def symbolic_trajectory(sys: IntervalSystem, alpha: Word, length: int) -> SymbolicTrajectory:
    if len(alpha) < 1:
        raise ValueError("alpha must have length >= 1")
    return SymbolicTrajectory(sys, alpha, length)
