"""Admissible systems of nested intervals indexed by binary words.

Every endpoint is an exact :class:`fractions.Fraction`.  Level ``t`` of a
system holds the ``2**t`` intervals ``K_a`` ordered by word value, so the
odometer step ``a -> a + 1`` is an index shift modulo ``2**t``.

Pair counts over a whole level are evaluated on integer numerators over the
level's common denominator.  Thresholds are converted with ``floor``/``ceil``
so that ``d < eps`` and ``d <= eps`` stay exact comparisons between integers.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .odometer import Word

DEFAULT_DEPTH_CAP = 24
# full levels are materialized up to this depth; deeper cylinders are
# resolved node by node
MATERIALIZE_CAP = 20
INF = math.inf

Number = int | Fraction


def as_fraction(x) -> Fraction:
    """Exact conversion; floats keep their binary value, strings may be ``p/q``."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(x)


def frac_str(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class RationalInterval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if not 0 <= self.lo < self.hi <= 1:
            raise ValueError(f"degenerate or out-of-range interval [{self.lo}, {self.hi}]")

    @property
    def diam(self) -> Fraction:
        return self.hi - self.lo

    @property
    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def gap(self, other: "RationalInterval") -> Fraction:
        """Distance between the two intervals (0 if they intersect)."""
        return max(Fraction(0), other.lo - self.hi, self.lo - other.hi)

    def hull_diam(self, other: "RationalInterval") -> Fraction:
        return max(self.hi, other.hi) - min(self.lo, other.lo)

    def contains(self, x) -> bool:
        return self.lo <= x <= self.hi

    def __lt__(self, other: "RationalInterval") -> bool:
        return self.hi < other.lo

    def __iter__(self):
        return iter((self.lo, self.hi))


Split = Callable[[Fraction, Fraction], tuple[tuple[Fraction, Fraction], tuple[Fraction, Fraction]]]


def thirds_split(lo: Fraction, hi: Fraction):
    third = (hi - lo) / 3
    return (lo, lo + third), (hi - third, hi)


class Level:
    """The ``2**t`` intervals of one level, with cached integer numerators."""

    def __init__(self, t: int, lo: list[Fraction], hi: list[Fraction]):
        if len(lo) != 1 << t or len(hi) != 1 << t:
            raise ValueError(f"level {t} needs {1 << t} intervals")
        self.t = t
        self.lo = lo
        self.hi = hi
        self._num = None

    @property
    def size(self) -> int:
        return 1 << self.t

    def interval(self, v: int) -> RationalInterval:
        return RationalInterval(self.lo[v], self.hi[v])

    def numerators(self):
        """``(den, lo_num, hi_num)`` with ``lo[v] == lo_num[v] / den``.

        Arrays are ``int64`` when every value fits with headroom, otherwise
        ``object`` arrays of Python ints.
        """
        if self._num is None:
            den = 1
            for x in self.lo:
                den = math.lcm(den, x.denominator)
            for x in self.hi:
                den = math.lcm(den, x.denominator)
            lo = [x.numerator * (den // x.denominator) for x in self.lo]
            hi = [x.numerator * (den // x.denominator) for x in self.hi]
            dtype = np.int64 if den < (1 << 60) else object
            self._num = (den, np.array(lo, dtype=dtype), np.array(hi, dtype=dtype))
        return self._num

    def diams(self) -> list[Fraction]:
        return [h - l for l, h in zip(self.lo, self.hi)]

    def spatial_order(self) -> list[int]:
        return sorted(range(self.size), key=lambda v: self.lo[v])


@dataclass
class EpsilonLadder:
    """Stage levels and scales of the oscillating construction."""

    t: list[int] = field(default_factory=list)
    eps: list[Fraction] = field(default_factory=list)
    t_prime: list[int] = field(default_factory=list)
    eps_prime: list[Fraction] = field(default_factory=list)

    @property
    def stages(self) -> int:
        return len(self.t)

    def to_dict(self) -> dict:
        return {
            "t": list(self.t),
            "eps": [frac_str(e) for e in self.eps],
            "t_prime": list(self.t_prime),
            "eps_prime": [frac_str(e) for e in self.eps_prime],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EpsilonLadder":
        return cls(
            t=list(d["t"]),
            eps=[as_fraction(e) for e in d["eps"]],
            t_prime=list(d["t_prime"]),
            eps_prime=[as_fraction(e) for e in d["eps_prime"]],
        )


def stage_levels(stages: int) -> list[tuple[int, int]]:
    """``[(t_n, t_n'), ...]`` for ``n = 1..stages``."""
    out = []
    t = 1
    for n in range(1, stages + 1):
        tp = t + n + 1
        out.append((t, tp))
        t = tp + 1
    return out


class IntervalSystem:
    """A rule-based system ``a -> K_a``.

    ``levels`` fixes the first few levels explicitly; everything deeper is
    produced by ``split`` (thirds by default).  Level materialization is
    guarded by a lock so concurrent readers see a consistent cache.
    """

    def __init__(
        self,
        kind: str,
        levels: Sequence[Level] | None = None,
        split: Split = thirds_split,
        params: dict | None = None,
        ladder: EpsilonLadder | None = None,
        depth_cap: int = DEFAULT_DEPTH_CAP,
    ):
        self.kind = kind
        self.split = split
        self.params = dict(params or {})
        self.ladder = ladder
        self.depth_cap = depth_cap
        if levels is None:
            levels = [Level(0, [Fraction(0)], [Fraction(1)])]
        self._levels: list[Level] = list(levels)
        self.fixed_depth = len(self._levels) - 1
        self._lock = threading.Lock()

    def __repr__(self) -> str:
        return f"IntervalSystem(kind={self.kind!r}, fixed_depth={self.fixed_depth})"

    def _check_depth(self, t: int):
        if t < 0 or t > self.depth_cap:
            raise ValueError(f"depth {t} exceeds depth cap {self.depth_cap}")

    def level(self, t: int) -> Level:
        self._check_depth(t)
        if t < len(self._levels):
            return self._levels[t]
        if t > MATERIALIZE_CAP:
            raise ValueError(f"refusing to materialize level {t} (> {MATERIALIZE_CAP})")
        with self._lock:
            while len(self._levels) <= t:
                self._levels.append(self._next_level(self._levels[-1]))
        return self._levels[t]

    def _next_level(self, parent: Level) -> Level:
        size = parent.size
        lo = [Fraction(0)] * (2 * size)
        hi = [Fraction(0)] * (2 * size)
        for v in range(size):
            (l0, h0), (l1, h1) = self.split(parent.lo[v], parent.hi[v])
            lo[v], hi[v] = l0, h0
            lo[v + size], hi[v + size] = l1, h1
        return Level(parent.t + 1, lo, hi)

    @property
    def materialized_depth(self) -> int:
        return len(self._levels) - 1

    def interval_of(self, a: Word) -> RationalInterval:
        t = len(a)
        self._check_depth(t)
        k = min(t, self.materialized_depth)
        base = self._levels[k]
        mask = (1 << k) - 1
        lo, hi = base.lo[a.value & mask], base.hi[a.value & mask]
        for s in range(k, t):
            children = self.split(lo, hi)
            lo, hi = children[(a.value >> s) & 1]
        return RationalInterval(lo, hi)

    def nu(self, t: int) -> Fraction:
        """Largest diameter at level ``t``."""
        return max(self.level(t).diams())

    def to_dict(self, depth: int | None = None) -> dict:
        depth = self.materialized_depth if depth is None else depth
        return {
            "kind": self.kind,
            "parameters": self.params,
            "ladder": self.ladder.to_dict() if self.ladder else None,
            "fixed_depth": self.fixed_depth,
            "levels": [
                [[frac_str(l), frac_str(h)] for l, h in zip(lv.lo, lv.hi)]
                for lv in (self.level(t) for t in range(depth + 1))
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "IntervalSystem":
        levels = []
        for t, rows in enumerate(d["levels"]):
            levels.append(Level(t, [as_fraction(r[0]) for r in rows], [as_fraction(r[1]) for r in rows]))
        ladder = EpsilonLadder.from_dict(d["ladder"]) if d.get("ladder") else None
        return cls(d.get("kind", "custom"), levels=levels, params=d.get("parameters"), ladder=ladder)


def interval_of(sys: IntervalSystem, a: Word) -> RationalInterval:
    return sys.interval_of(a)


# ---------------------------------------------------------------------------
# constructions


def build_ternary(depth_cap: int = DEFAULT_DEPTH_CAP) -> IntervalSystem:
    """The middle-thirds Cantor system."""
    return IntervalSystem("ternary", depth_cap=depth_cap)


def build_custom(levels: Sequence[Sequence[tuple]], kind: str = "custom") -> IntervalSystem:
    """A system from explicit ``(lo, hi)`` tables, thirds rule below them.

    No admissibility is enforced here; run :func:`validate` on the result.
    """
    out = []
    for t, rows in enumerate(levels):
        out.append(Level(t, [as_fraction(r[0]) for r in rows], [as_fraction(r[1]) for r in rows]))
    return IntervalSystem(kind, levels=out)


def build_theorem3(stages: int = 3, depth_cap: int = DEFAULT_DEPTH_CAP) -> tuple[IntervalSystem, EpsilonLadder]:
    """System whose determinism oscillates between 1 and ``<= 2**(1-n)``.

    Placement per stage ``n`` (``t = t_n``, every level-``t`` cylinder has
    diameter ``eps_n``):

    * ``eps_n' = delta / (2 * 3**(n+1))`` with ``delta = diam K_{1^t}``;
    * level ``t+1``: children of width ``eps_n'/2`` flush to the parent's
      endpoints, except ``K_{1^{t+1}}`` which is the right third of
      ``K_{1^t}``;
    * levels ``t+2 .. t_n'``: thirds rule everywhere;
    * level ``t_{n+1} = t_n' + 1``: every child has width
      ``eps_{n+1} = min diam / 3`` and sits flush to its parent's endpoint.

    Levels below ``t_N'`` follow the thirds rule.
    """
    if stages < 1:
        raise ValueError("need at least one stage")
    plan = stage_levels(stages)
    if plan[-1][1] > min(depth_cap, MATERIALIZE_CAP):
        raise ValueError(
            f"{stages} stages need depth {plan[-1][1]}, above the cap {min(depth_cap, MATERIALIZE_CAP)}"
        )
    third = Fraction(1, 3)
    lo_levels = [[Fraction(0)], [Fraction(0), Fraction(2, 3)]]
    hi_levels = [[Fraction(1)], [third, Fraction(1)]]
    ladder = EpsilonLadder()

    def push(split_fn):
        lo, hi = lo_levels[-1], hi_levels[-1]
        size = len(lo)
        nlo = [Fraction(0)] * (2 * size)
        nhi = [Fraction(0)] * (2 * size)
        for v in range(size):
            (a0, b0), (a1, b1) = split_fn(v, lo[v], hi[v])
            nlo[v], nhi[v] = a0, b0
            nlo[v + size], nhi[v + size] = a1, b1
        lo_levels.append(nlo)
        hi_levels.append(nhi)

    for n, (t, tp) in enumerate(plan, start=1):
        assert len(lo_levels) == t + 1
        diams = [h - l for l, h in zip(lo_levels[t], hi_levels[t])]
        eps_n = max(diams)
        ones = (1 << t) - 1
        delta = diams[ones]
        eps_p = delta / (2 * 3 ** (n + 1))
        ladder.t.append(t)
        ladder.eps.append(eps_n)
        ladder.t_prime.append(tp)
        ladder.eps_prime.append(eps_p)
        w = eps_p / 2

        def first_split(v, y, z, ones=ones, w=w, delta=delta):
            if v == ones:
                return (y, y + w), (z - delta / 3, z)
            return (y, y + w), (z - w, z)

        push(first_split)
        for _ in range(t + 2, tp + 1):
            push(lambda v, y, z: thirds_split(y, z))
        if n < stages:
            eps_next = min(h - l for l, h in zip(lo_levels[tp], hi_levels[tp])) / 3
            push(lambda v, y, z, e=eps_next: ((y, y + e), (z - e, z)))

    levels = [Level(t, lo, hi) for t, (lo, hi) in enumerate(zip(lo_levels, hi_levels))]
    params = {"stages": stages, "plan": [list(p) for p in plan]}
    system = IntervalSystem("theorem3", levels=levels, params=params, ladder=ladder, depth_cap=depth_cap)
    return system, ladder


# ---------------------------------------------------------------------------
# single-pair geometry


def _norm_m(m, t: int) -> int:
    period = 1 << t
    if m is None or m == INF or m >= period:
        return period
    if m < 1:
        raise ValueError("m must be >= 1")
    return int(m)


def dist_m(sys: IntervalSystem, a: Word, b: Word, m=INF) -> Fraction:
    """``max_{i<m} dist(K_{a+i}, K_{b+i})``; ``m >= 2**t`` means one full period."""
    if len(a) != len(b):
        raise ValueError("words must have equal length")
    steps = _norm_m(m, len(a))
    return max(sys.interval_of(a + i).gap(sys.interval_of(b + i)) for i in range(steps))


def diam_m(sys: IntervalSystem, a: Word, b: Word, m=INF) -> Fraction:
    if len(a) != len(b):
        raise ValueError("words must have equal length")
    steps = _norm_m(m, len(a))
    return max(sys.interval_of(a + i).hull_diam(sys.interval_of(b + i)) for i in range(steps))


# ---------------------------------------------------------------------------
# pair counts over a level


def _thresholds(eps: Fraction, den: int) -> tuple[int, int]:
    """Integer thresholds: ``d/den < eps  <=>  d <= lt``; ``d/den <= eps  <=>  d <= le``."""
    scaled = eps * den
    le = math.floor(scaled)
    lt = math.ceil(scaled) - 1
    # clamp so comparisons stay inside int64 when the arrays are int64
    cap = 2 * den + 1
    return max(min(lt, cap), -1), max(min(le, cap), -1)


def _count_m1(lo, hi, lt: int, le: int) -> tuple[int, int]:
    order = np.argsort(lo, kind="stable")
    slo = lo[order]
    shi = hi[order]
    # dist < eps: lo_b <= hi_a + lt and hi_b >= lo_a - lt
    n_lt = np.searchsorted(slo, shi + lt, side="right") - np.searchsorted(shi, slo - lt, side="left")
    # hull <= eps, only for intervals that are themselves short enough
    ok = (shi - slo) <= le
    n_le = np.searchsorted(shi, slo + le, side="right") - np.searchsorted(slo, shi - le, side="left")
    n_le = np.where(ok, n_le, 0)
    return int(np.sum(n_lt)), int(np.sum(n_le))


def _block_size(period: int) -> int:
    return max(1, min(period, (1 << 21) // period))


def _gap_hull(lo, hi, h: np.ndarray):
    period = len(lo)
    c = np.arange(period)[:, None]
    b = (c + h[None, :]) % period
    lo_c, hi_c = lo[c], hi[c]
    lo_b, hi_b = lo[b], hi[b]
    gap = np.maximum(np.maximum(lo_b - hi_c, lo_c - hi_b), 0)
    hull = np.maximum(hi_b, hi_c) - np.minimum(lo_b, lo_c)
    return gap, hull


def _count_full_period(lo, hi, lt: int, le: int) -> tuple[int, int]:
    """Counts for ``m >= 2**t``: each offset ``h`` is decided by a column max."""
    period = len(lo)
    hs = np.arange(period)
    # cheap screens: a single iterate already separating the pair decides it
    alive_lt = np.ones(period, dtype=bool)
    alive_le = np.ones(period, dtype=bool)
    if np.max(hi - lo) > le:
        alive_le[:] = False
    for c in {period - 1, 0, period // 2}:
        b = (c + hs) % period
        gap = np.maximum(np.maximum(lo[b] - hi[c], lo[c] - hi[b]), 0)
        hull = np.maximum(hi[b], hi[c]) - np.minimum(lo[b], lo[c])
        alive_lt &= gap <= lt
        alive_le &= hull <= le
    n_lt = n_le = 0
    for which, alive, thr in (("gap", alive_lt, lt), ("hull", alive_le, le)):
        cand = np.nonzero(alive)[0]
        step = _block_size(period)
        count = 0
        for s in range(0, len(cand), step):
            h = cand[s : s + step]
            gap, hull = _gap_hull(lo, hi, h)
            mat = gap if which == "gap" else hull
            count += int(np.sum(np.max(mat, axis=0) <= thr))
        if which == "gap":
            n_lt = count * period
        else:
            n_le = count * period
    return n_lt, n_le


def _count_window(lo, hi, lt: int, le: int, ms: list[int]) -> dict[int, tuple[int, int]]:
    """Counts for ``1 <= m < 2**t`` by incremental sliding maxima over iterates."""
    period = len(lo)
    m_max = max(ms)
    wanted = set(ms)
    out = {m: [0, 0] for m in ms}
    step = _block_size(period)
    for s in range(0, period, step):
        h = np.arange(s, min(period, s + step))
        gap, hull = _gap_hull(lo, hi, h)
        wg, wh = gap.copy(), hull.copy()
        for m in range(1, m_max + 1):
            if m > 1:
                np.maximum(wg, np.roll(gap, -(m - 1), axis=0), out=wg)
                np.maximum(wh, np.roll(hull, -(m - 1), axis=0), out=wh)
            if m in wanted:
                out[m][0] += int(np.count_nonzero(wg <= lt))
                out[m][1] += int(np.count_nonzero(wh <= le))
    return {m: (v[0], v[1]) for m, v in out.items()}


def pair_counts(sys: IntervalSystem, t: int, eps, ms: Iterable = (1, INF)) -> dict:
    """Exact ``(N_m, N°_m)`` for each requested ``m`` at level ``t``.

    ``N_m`` counts pairs with ``dist_m < eps`` (strict), ``N°_m`` pairs with
    ``diam_m <= eps``.  Keys of the result are the requested ``m`` values
    (``math.inf`` allowed).  Intermediate ``m`` are squeezed by monotonicity
    whenever ``N_1 == N_inf`` (resp. ``N°_1 == N°_inf``).
    """
    eps = as_fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    level = sys.level(t)
    den, lo, hi = level.numerators()
    lt, le = _thresholds(eps, den)
    period = 1 << t
    ms = list(ms)
    eff = {m: _norm_m(m, t) for m in ms}
    res: dict[int, tuple[int, int]] = {}
    res[1] = _count_m1(lo, hi, lt, le)
    if period > 1:
        res[period] = _count_full_period(lo, hi, lt, le)
    inner = sorted({e for e in eff.values() if e not in res})
    if inner:
        n1, c1 = res[1]
        ni, ci = res[period]
        if n1 == ni and c1 == ci:
            for e in inner:
                res[e] = (n1, c1)
        else:
            res.update(_count_window(lo, hi, lt, le, inner))
            if n1 == ni:
                for e in inner:
                    res[e] = (n1, res[e][1])
    return {m: res[eff[m]] for m in ms}


def count_N(sys: IntervalSystem, t: int, eps, m=INF) -> int:
    return pair_counts(sys, t, eps, [m])[m][0]


def count_N_circ(sys: IntervalSystem, t: int, eps, m=INF) -> int:
    return pair_counts(sys, t, eps, [m])[m][1]


# ---------------------------------------------------------------------------
# scale quantities


@dataclass(frozen=True)
class StarLabels:
    a: Word
    low: Word  # a_*
    low_inner: Word  # a_o (lower)
    high_inner: Word  # a^o
    high: Word  # a^*


def star_labels(sys: IntervalSystem, a: Word) -> StarLabels:
    """Label the grandchildren ``a00, a01, a10, a11`` by spatial order.

    Raises ``ValueError`` if two grandchildren are not disjoint.
    """
    t = len(a)
    words = [Word(t + 2, a.value | (u << t) | (v << (t + 1))) for u in (0, 1) for v in (0, 1)]
    ivs = sorted(((sys.interval_of(w), w) for w in words), key=lambda p: p[0].lo)
    for (k1, w1), (k2, w2) in zip(ivs, ivs[1:]):
        if not k1.hi < k2.lo:
            raise ValueError(f"grandchildren {w1} and {w2} of {a} are not disjoint")
    return StarLabels(a, *(w for _, w in ivs))


def epsilon_t(sys: IntervalSystem, t: int) -> Fraction:
    """``max_a dist(K_{a_*}, K_{a^*})`` over words of length ``t``.

    Also checks that the two spatially lowest grandchildren share digit
    ``t`` and the two highest share the other value.
    """
    best = Fraction(0)
    for v in range(1 << t):
        lab = star_labels(sys, Word(t, v))
        d = [w.digits[t] for w in (lab.low, lab.low_inner, lab.high_inner, lab.high)]
        if not (d[0] == d[1] != d[2] == d[3]):
            raise ValueError(f"grandchild labels of {lab.a} violate the star identity")
        gap = sys.interval_of(lab.low).gap(sys.interval_of(lab.high))
        best = max(best, gap)
    return best


def ell_lambda(sys: IntervalSystem, t: int, eps) -> tuple[int, Fraction]:
    """``(#{a: diam K_a >= eps}, total length of those K_a)``."""
    eps = as_fraction(eps)
    long = [d for d in sys.level(t).diams() if d >= eps]
    return len(long), sum(long, Fraction(0))


# ---------------------------------------------------------------------------
# validation


def _rec(check: str, ok: bool, lhs, rel: str, rhs, **extra) -> dict:
    out = {"check": check, "ok": bool(ok), "lhs": frac_str(lhs), "relation": rel, "rhs": frac_str(rhs)}
    out.update(extra)
    return out


def _min_gap(level: Level) -> tuple[Fraction, Word, Word]:
    order = level.spatial_order()
    best = None
    for u, v in zip(order, order[1:]):
        g = level.lo[v] - level.hi[u]
        if best is None or g < best[0]:
            best = (g, Word(level.t, u), Word(level.t, v))
    return best


def validate(sys: IntervalSystem, depth: int) -> dict:
    """Check admissibility to ``depth`` and, for staged systems, every stage inequality.

    Failures are reported, never raised.  Admissibility is summarized per
    level by its tightest witness; stage inequalities get one record each.
    """
    records: list[dict] = []
    root = sys.level(0)
    records.append({
        "check": "root_is_unit_interval",
        "ok": root.lo[0] == 0 and root.hi[0] == 1,
        "lhs": f"[{frac_str(root.lo[0])}, {frac_str(root.hi[0])}]",
        "relation": "==",
        "rhs": "[0/1, 1/1]",
    })
    prev_nu = None
    for t in range(depth + 1):
        level = sys.level(t)
        diams = level.diams()
        worst = min(range(level.size), key=lambda v: diams[v])
        records.append(_rec("non_degenerate", diams[worst] > 0, diams[worst], ">", 0,
                            level=t, witness=[str(Word(t, worst))]))
        nu = max(diams)
        if prev_nu is not None:
            records.append(_rec("nu_strictly_decreasing", nu < prev_nu, nu, "<", prev_nu, level=t))
        prev_nu = nu
        if t == depth:
            break
        child = sys.level(t + 1)
        size = level.size
        bad_left = bad_right = None
        tight = None
        for v in range(size):
            y, z = level.lo[v], level.hi[v]
            y0, z0 = child.lo[v], child.hi[v]
            y1, z1 = child.lo[v + size], child.hi[v + size]
            if y0 != y and bad_left is None:
                bad_left = (v, y0, y)
            if z1 != z and bad_right is None:
                bad_right = (v, z1, z)
            margin = y1 - z0
            if tight is None or margin < tight[1]:
                tight = (v, margin, z0, y1)
        w = lambda v, d=None: str(Word(t, v)) if d is None else str(Word(t + 1, v | (d << t)))
        if bad_left:
            records.append(_rec("left_endpoint_shared", False, bad_left[1], "==", bad_left[2],
                                level=t + 1, witness=[w(bad_left[0], 0), w(bad_left[0])]))
        else:
            records.append({"check": "left_endpoint_shared", "ok": True, "level": t + 1})
        if bad_right:
            records.append(_rec("right_endpoint_shared", False, bad_right[1], "==", bad_right[2],
                                level=t + 1, witness=[w(bad_right[0], 1), w(bad_right[0])]))
        else:
            records.append({"check": "right_endpoint_shared", "ok": True, "level": t + 1})
        v = tight[0]
        records.append(_rec("siblings_disjoint", tight[2] < tight[3], tight[2], "<", tight[3],
                            level=t + 1, witness=[w(v, 0), w(v, 1)]))
    if sys.ladder is not None:
        records.extend(_stage_records(sys, sys.ladder, depth))
    return {
        "kind": sys.kind,
        "depth": depth,
        "ok": all(r["ok"] for r in records),
        "records": records,
    }


def _stage_records(sys: IntervalSystem, ladder: EpsilonLadder, depth: int) -> list[dict]:
    recs = []
    for n in range(1, ladder.stages + 1):
        t, eps = ladder.t[n - 1], ladder.eps[n - 1]
        tp, epsp = ladder.t_prime[n - 1], ladder.eps_prime[n - 1]
        if t <= depth:
            level = sys.level(t)
            diams = level.diams()
            v = max(range(level.size), key=lambda k: diams[k])
            recs.append(_rec("det1_diam", diams[v] <= eps, diams[v], "<=", eps,
                             stage=n, level=t, witness=[str(Word(t, v))]))
            if t > 0:
                g, a, b = _min_gap(level)
                recs.append(_rec("det1_dist", eps <= g, eps, "<=", g,
                                 stage=n, level=t, witness=[str(a), str(b)]))
            delta = diams[(1 << t) - 1]
            recs.append(_rec("eps_prime_below_delta_over_n", epsp < delta / n, epsp, "<", delta / n,
                             stage=n, level=t, witness=[str(Word.ones(t))]))
        if t + 1 <= depth:
            level = sys.level(t + 1)
            ones = (1 << (t + 1)) - 1
            diams = level.diams()
            rest = [v for v in range(level.size) if v != ones]
            v = max(rest, key=lambda k: diams[k])
            recs.append(_rec("det0_diam", diams[v] <= epsp, diams[v], "<=", epsp,
                             stage=n, level=t + 1, witness=[str(Word(t + 1, v))]))
            recs.append(_rec("ones_child_long", diams[ones] > n * epsp, diams[ones], ">", n * epsp,
                             stage=n, level=t + 1, witness=[str(Word.ones(t + 1))]))
        for s in range(t + 2, min(tp, depth) + 1):
            a = Word(s, (1 << (s - 1)) - 1)  # 1^{s-1} 0
            b = Word.ones(s)
            g = sys.interval_of(a).gap(sys.interval_of(b))
            check = "det0_dist" if s == tp else "ones_branch_gap"
            rel_ok = (epsp <= g) if s == tp else (g > epsp)
            recs.append(_rec(check, rel_ok, g, ">=" if s == tp else ">", epsp,
                             stage=n, level=s, witness=[str(a), str(b)]))
    for name, seq in (("eps_decreasing", ladder.eps), ("eps_prime_decreasing", ladder.eps_prime)):
        for k in range(1, len(seq)):
            recs.append(_rec(name, seq[k] < seq[k - 1], seq[k], "<", seq[k - 1], stage=k + 1))
    return recs
