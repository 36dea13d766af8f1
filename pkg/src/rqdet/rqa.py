"""Correlation sums, recurrence determinism and RQA DET.

``C_m(x, n, eps)`` is the fraction of pairs ``(i, j)`` in ``[0, n)^2`` whose
length-``m`` orbit segments stay within ``eps`` (Bowen metric, ``<=``).  It
reads orbit points up to index ``n + m - 2``.  ``rdet_m = C_m / C_1``.

The classical DET is computed from the diagonal-line histogram of the
``n x n`` plot.  It satisfies ``DET_m = m r_m - (m-1) r_{m+1}`` exactly when
``r`` is the determinism of runs confined to the plot (``rdet_window``);
both variants are reported.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Union

import numpy as np

from .dynamics import FloatTrajectory, SymbolicTrajectory
from .intervals import as_fraction
from .kernels import (
    diagonal_counts,
    naive_count,
    pack_rows,
    periodic_counts,
    periodic_lag_sup,
    recurrence_bits,
    unpack_rows,
)

DEFAULT_M_CAP = 256
DEFAULT_N_GRID = (256, 512, 1024, 2048, 4096, 8192, 16384)
DET_TOL = 1e-12


class ConsistencyError(RuntimeError):
    """A computed profile violates an invariant that holds by construction."""


TrajLike = Union[np.ndarray, FloatTrajectory, SymbolicTrajectory]


def orbit_values(traj: TrajLike, length: int | None = None) -> np.ndarray:
    if isinstance(traj, (FloatTrajectory, SymbolicTrajectory)):
        v = traj.values
    else:
        v = np.asarray(traj, dtype=np.float64)
    if length is not None:
        if len(v) < length:
            raise ValueError(f"orbit of length {len(v)} too short; need {length}")
        v = v[:length]
    return v


# ---------------------------------------------------------------------------
# recurrence matrices


@dataclass
class RecurrenceMatrix:
    n: int
    eps: float
    words: np.ndarray

    def get(self, i: int, j: int) -> bool:
        return bool((int(self.words[i, j // 64]) >> (j % 64)) & 1)

    def to_dense(self) -> np.ndarray:
        return unpack_rows(self.words, self.n)

    def count(self) -> int:
        return int(np.bitwise_count(self.words).sum())

    def pbm_bytes(self) -> bytes:
        dense = self.to_dense()
        body = np.packbits(dense, axis=1, bitorder="big").tobytes()
        return f"P4\n{self.n} {self.n}\n".encode() + body

    def to_pbm(self, path):
        with open(path, "wb") as fh:
            fh.write(self.pbm_bytes())

    def run_lengths(self) -> np.ndarray:
        """Length of the forward diagonal run through each cell, confined to the plot."""
        dense = self.to_dense()
        runs = np.zeros((self.n + 1, self.n + 1), dtype=np.int64)
        for i in range(self.n - 1, -1, -1):
            runs[i, : self.n] = dense[i] * (1 + runs[i + 1, 1 : self.n + 1])
        return runs[: self.n, : self.n]

    def pgm_bytes(self, maxval: int = 255) -> bytes:
        img = np.minimum(self.run_lengths(), maxval).astype(np.uint8)
        return f"P5\n{self.n} {self.n}\n{maxval}\n".encode() + img.tobytes()

    def to_pgm(self, path, maxval: int = 255):
        with open(path, "wb") as fh:
            fh.write(self.pgm_bytes(maxval))

    def to_rle(self) -> dict:
        rows = []
        for r in self.to_dense():
            d = np.diff(np.concatenate([[0], r.astype(np.int8), [0]]))
            starts = np.flatnonzero(d == 1)
            ends = np.flatnonzero(d == -1)
            rows.append([[int(s), int(e - s)] for s, e in zip(starts, ends)])
        return {"n": self.n, "eps": self.eps, "rows": rows}


def recurrence_matrix(traj: TrajLike, eps: float, n: int | None = None, threads: int = 1) -> RecurrenceMatrix:
    x = orbit_values(traj)
    n = len(x) if n is None else n
    x = orbit_values(x, n)
    return RecurrenceMatrix(n, float(eps), recurrence_bits(x, float(eps), threads))


@dataclass
class SymbolicRecurrence:
    """Enclosure-based recurrence: ``decided`` holds pairs certainly within ``eps``."""

    decided: RecurrenceMatrix
    undecided_count: int
    undecided: list[tuple[int, int]] = field(default_factory=list)


def symbolic_recurrence(traj: SymbolicTrajectory, eps, n: int | None = None, keep: int = 100) -> SymbolicRecurrence:
    """Decide ``|x_i - x_j| <= eps`` from the exact cylinders enclosing each step.

    A pair is in if the hull of the two enclosures has diameter ``<= eps``,
    out if their gap exceeds ``eps``; otherwise it is reported undecided.
    """
    n = traj.length if n is None else n
    e = as_fraction(eps)
    den, lo, hi = traj.system.level(traj.depth).numerators()
    idx = traj.indices(0, n)
    lo, hi = lo[idx], hi[idx]
    thr = (e.numerator * den) // e.denominator
    if lo.dtype != object:
        thr = min(thr, np.iinfo(np.int64).max)
    rows = []
    und_count = 0
    und: list[tuple[int, int]] = []
    for i in range(n):
        hull = np.maximum(hi[i], hi) - np.minimum(lo[i], lo)
        gap = np.maximum(lo[i], lo) - np.minimum(hi[i], hi)
        yes = np.asarray(hull <= thr, dtype=bool)
        no = np.asarray(gap > thr, dtype=bool)
        u = np.flatnonzero(~(yes | no))
        und_count += len(u)
        for j in u[: max(0, keep - len(und))]:
            und.append((i, int(j)))
        rows.append(yes)
    words = pack_rows(np.array(rows, dtype=bool).reshape(n, n))
    return SymbolicRecurrence(RecurrenceMatrix(n, float(e), words), und_count, und)


# ---------------------------------------------------------------------------
# single statistics


def pair_count(traj: TrajLike, n: int, eps: float, m: int, kernel: str = "bitset") -> int:
    if n < 1 or m < 1:
        raise ValueError("n and m must be >= 1")
    x = orbit_values(traj, n + m - 1)
    if kernel == "naive":
        return naive_count(x, n, eps, m)
    if kernel != "bitset":
        raise ValueError(f"unknown kernel {kernel!r}")
    return int(diagonal_counts(x, eps, [n], m).ext[m - 1, 0])


def correlation_sum(traj: TrajLike, n: int, eps: float, m: int, kernel: str = "bitset") -> float:
    return pair_count(traj, n, eps, m, kernel) / (n * n)


def rdet(traj: TrajLike, n: int, eps: float, m: int) -> float:
    if n < 1 or m < 1:
        raise ValueError("n and m must be >= 1")
    kc = diagonal_counts(orbit_values(traj, n + m - 1), eps, [n], m)
    return kc.ext[m - 1, 0] / kc.ext[0, 0]


def rqa_det(traj: TrajLike, n: int, eps: float, m: int) -> float:
    """Share of recurrent points of the ``n x n`` plot lying on diagonal lines of length ``>= m``."""
    if m < 1:
        raise ValueError("m must be >= 1")
    # only cells of the plot are read; the padding never recurs
    x = np.concatenate([orbit_values(traj, n), np.full(m - 1, np.nan)])
    kc = diagonal_counts(x, eps, [n], m, lines=True)
    return _det_from_starts(kc.starts[:, 0], kc.win[0, 0])[m - 1]


def _det_from_starts(starts: np.ndarray, total: int) -> np.ndarray:
    """``DET_m`` for ``m = 1..len(starts)`` from counts ``L_l`` of lines of length ``>= l``."""
    L = np.concatenate([np.asarray(starts, dtype=np.int64), [0]])
    l = np.arange(1, len(L))
    short = np.concatenate([[0], np.cumsum(l * (L[:-1] - L[1:]))[:-1]])
    if total == 0:
        return np.full(len(starts), np.nan)
    return 1.0 - short / total


# ---------------------------------------------------------------------------
# profiles


def _tail(values: np.ndarray) -> np.ndarray:
    k = math.ceil(values.shape[-1] / 2)
    return values[..., -k:]


@dataclass
class DeterminismReport:
    eps: float
    m_cap: int
    n_grid: list[int]
    ext: np.ndarray
    win: np.ndarray
    starts: np.ndarray
    stabilized_at: int | None
    exact_inf: list[int] | None = None
    source: str = ""

    @property
    def m_grid(self) -> list[int]:
        return list(range(1, self.m_cap + 1))

    @property
    def C(self) -> np.ndarray:
        n = np.asarray(self.n_grid, dtype=np.float64)
        return self.ext[: self.m_cap] / (n * n)

    @property
    def rdet(self) -> np.ndarray:
        return self.ext[: self.m_cap] / self.ext[0]

    @property
    def rdet_window(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return self.win / self.win[0]

    @property
    def rqa_det(self) -> np.ndarray:
        return np.stack(
            [_det_from_starts(self.starts[: self.m_cap, g], self.win[0, g]) for g in range(len(self.n_grid))],
            axis=1,
        )

    def det_identity_residual(self) -> float:
        """Largest ``|DET_m - (m r_m - (m-1) r_{m+1})|`` over the table (``r`` = ``rdet_window``)."""
        r = self.rdet_window
        m = np.arange(1, self.m_cap + 1)[:, None]
        rhs = m * r[: self.m_cap] - (m - 1) * r[1 : self.m_cap + 1]
        d = np.abs(self.rqa_det - rhs)
        return float(np.nanmax(d)) if np.isfinite(d).any() else 0.0

    @property
    def C_inf(self) -> np.ndarray:
        """Exact ``C_inf`` per ``n`` when known, else the ``m = m_cap`` upper bound."""
        n = np.asarray(self.n_grid, dtype=np.float64)
        if self.exact_inf is not None:
            return np.asarray(self.exact_inf) / (n * n)
        return self.C[-1]

    @property
    def rdet_inf(self) -> np.ndarray:
        if self.exact_inf is not None:
            return np.asarray(self.exact_inf) / self.ext[0]
        return self.rdet[-1]

    def tails(self) -> dict:
        C, r = self.C, self.rdet
        return {
            "c_lo": _tail(C).min(axis=1),
            "c_hi": _tail(C).max(axis=1),
            "rdet_lo": _tail(r).min(axis=1),
            "rdet_hi": _tail(r).max(axis=1),
            "c_inf_lo": float(_tail(self.C_inf).min()),
            "c_inf_hi": float(_tail(self.C_inf).max()),
            "rdet_inf_lo": float(_tail(self.rdet_inf).min()),
            "rdet_inf_hi": float(_tail(self.rdet_inf).max()),
        }

    def check(self) -> dict:
        """Invariant flags; raises :class:`ConsistencyError` on non-monotonicity in ``m``."""
        if np.any(np.diff(self.ext, axis=0) > 0):
            raise ConsistencyError("correlation sum increases with m")
        if np.any(self.ext[: self.m_cap] < np.asarray(self.n_grid)):
            raise ConsistencyError("diagonal pairs missing")
        t = self.tails()
        lo = t["c_lo"] / t["c_hi"][0]
        hi = t["c_hi"] / t["c_lo"][0]
        sandwich = bool(np.all(lo <= t["rdet_lo"] + 1e-12) and np.all(t["rdet_hi"] <= hi + 1e-12))
        return {
            "monotone_ok": True,
            "sandwich_ok": sandwich,
            "det_identity_residual": self.det_identity_residual(),
            "det_identity_ok": self.det_identity_residual() <= DET_TOL,
        }

    def summary(self) -> dict:
        t = self.tails()
        flags = self.check()
        return {
            "eps": self.eps,
            "m_cap": self.m_cap,
            "n_grid": list(self.n_grid),
            "source": self.source,
            "stabilized_at_m": self.stabilized_at,
            "inf_exact": self.exact_inf is not None,
            "c_inf": [float(v) for v in self.C_inf],
            "rdet_inf": [float(v) for v in self.rdet_inf],
            "tail": {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in t.items()},
            "flags": flags,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True, indent=1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["m", "n", "C", "rdet", "rqa_det"])
        C, r, d = self.C, self.rdet, self.rqa_det
        for mi, m in enumerate(self.m_grid):
            for g, n in enumerate(self.n_grid):
                w.writerow([m, n, repr(float(C[mi, g])), repr(float(r[mi, g])), repr(float(d[mi, g]))])
        return buf.getvalue()


def asymptotic_profile(
    source: Union[TrajLike, Callable[[int], TrajLike]],
    eps: float,
    m_cap: int = DEFAULT_M_CAP,
    n_grid=DEFAULT_N_GRID,
    threads: int = 1,
    exact_inf: bool = True,
) -> DeterminismReport:
    """Correlation sums for ``m = 1..m_cap`` and every ``n`` of the grid.

    ``source`` is an orbit or a callable returning one of a requested length;
    it must supply ``max(n_grid) + m_cap`` points.  For a symbolic (hence
    periodic) orbit whose period fits the budget the ``m = inf`` row is
    computed exactly as well.
    """
    n_grid = sorted(int(n) for n in n_grid)
    need = n_grid[-1] + m_cap
    traj = source(need) if callable(source) else source
    x = orbit_values(traj, need)
    kc = diagonal_counts(x, float(eps), n_grid, m_cap + 1, lines=True, threads=threads)
    inf = None
    if exact_inf and isinstance(traj, SymbolicTrajectory) and traj.period <= 1 << 16:
        per = traj.one_period()
        D = periodic_lag_sup(per)
        inf = [periodic_counts(per, n, float(eps), D)[1] for n in n_grid]
    rep = DeterminismReport(
        float(eps), m_cap, n_grid, kc.ext, kc.win, kc.starts, kc.stable_at, inf, _describe(traj)
    )
    rep.check()
    return rep


def _describe(traj) -> str:
    if isinstance(traj, SymbolicTrajectory):
        return f"symbolic:{traj.system.kind}:{traj.alpha}"
    if isinstance(traj, FloatTrajectory):
        return f"{traj.map}:{traj.x0}:{traj.method}"
    return "array"


# ---------------------------------------------------------------------------
# shift robustness


def shift_bound(x: TrajLike, h: int, n: int, eps: float, m: int) -> dict:
    """Compare ``C(f^h x, n)`` with ``((n+h)/n)^2 C(x, n+h)`` within ``(2hn + h^2)/n^2``."""
    v = orbit_values(x, n + h + m - 1)
    big = diagonal_counts(v, eps, [n + h], m).ext[m - 1, 0]
    small = diagonal_counts(v[h:], eps, [n], m).ext[m - 1, 0]
    slack = 2 * h * n + h * h
    lhs = Fraction(small, n * n)
    ref = Fraction(big, n * n)
    ok = ref - Fraction(slack, n * n) <= lhs <= ref
    return {"ok": bool(ok), "shifted": float(lhs), "reference": float(ref), "slack": slack / (n * n)}


def shift_check(x: TrajLike, n: int, eps: float, m_cap: int, h_max: int = 64) -> dict:
    """:func:`shift_bound` for every ``h <= h_max`` and ``m <= m_cap`` at once.

    Needs ``n + h_max + m_cap - 1`` orbit points.  Returns the number of
    violated ``(h, m)`` cells and the first few of them.
    """
    hs = list(range(1, h_max + 1))
    v = orbit_values(x, n + h_max + m_cap - 1)
    big = diagonal_counts(v, eps, [n + h for h in hs], m_cap).ext
    bad = []
    for k, h in enumerate(hs):
        small = diagonal_counts(v[h:], eps, [n], m_cap).ext[:, 0]
        ref = big[:, k]
        slack = 2 * h * n + h * h
        for m in np.flatnonzero((small > ref) | (small < ref - slack)):
            bad.append((h, int(m) + 1))
    return {"checked": len(hs) * m_cap, "violations": len(bad), "examples": bad[:10]}
