"""Pair-count kernels for correlation sums under the Bowen metric.

Notation: ``R[i, j] = |x_i - x_j| <= eps`` on an orbit of length ``N`` and
``S_m[i, j] = R[i, j] & R[i+1, j+1] & ... & R[i+m-1, j+m-1]`` (zero when the
run would leave the data).  ``S_{m+1}[i] = R[i] & (S_m[i+1] >> 1)``, so one
shift-and per ``m`` yields every ``S_m`` in a single pass.

Three families of integer counts come out of one pass, for every ``m`` and
every ``n`` of a grid:

``ext``     ``#S_m`` on ``[0, n)^2`` (uses orbit points up to ``n+m-2``)
``win``     ``#S_m`` on ``[0, n-m+1)^2`` (runs confined to the ``n x n`` plot)
``starts``  same as ``win`` restricted to diagonal line starts, i.e. the
            number of lines of length ``>= m`` in the ``n x n`` plot
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

_ONE = np.uint64(1)
_SH63 = np.uint64(63)


def n_words(n: int) -> int:
    return (n + 63) // 64


def pack_rows(bits: np.ndarray) -> np.ndarray:
    """Pack a boolean ``(r, c)`` array into ``(r, ceil(c/64))`` uint64, column ``j`` at bit ``j % 64``."""
    r, c = bits.shape
    w = n_words(c)
    padded = np.zeros((r, w * 64), dtype=bool)
    padded[:, :c] = bits
    return np.packbits(padded, axis=1, bitorder="little").view("<u8").astype(np.uint64, copy=False)


def unpack_rows(words: np.ndarray, c: int) -> np.ndarray:
    b = np.unpackbits(words.astype("<u8").view(np.uint8), axis=1, bitorder="little")
    return b[:, :c].astype(bool)


def recurrence_bits(x: np.ndarray, eps: float, threads: int = 1, block: int = 256) -> np.ndarray:
    """Packed ``|x_i - x_j| <= eps`` for all pairs of ``x``."""
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    out = np.empty((n, n_words(n)), dtype=np.uint64)

    def fill(start):
        stop = min(start + block, n)
        out[start:stop] = pack_rows(np.abs(x[start:stop, None] - x[None, :]) <= eps)

    starts = range(0, n, block)
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            list(ex.map(fill, starts))
    else:
        for s in starts:
            fill(s)
    return out


def shr1(rows: np.ndarray) -> np.ndarray:
    """Move every bit one column to the left (bit ``j+1`` -> ``j``) within each row."""
    out = rows >> _ONE
    out[:, :-1] |= rows[:, 1:] << _SH63
    return out


def next_stage(R: np.ndarray, S: np.ndarray) -> np.ndarray:
    out = np.zeros_like(S)
    out[:-1] = R[:-1] & shr1(S[1:])
    return out


def low_mask(k: int) -> np.uint64:
    return np.uint64((1 << k) - 1) if k < 64 else np.uint64(0xFFFFFFFFFFFFFFFF)


class SquareCounter:
    """Popcounts of a packed matrix over leading squares ``[0, k)^2``."""

    def __init__(self, S: np.ndarray):
        self.S = S
        pc = np.bitwise_count(S).astype(np.int64)
        self.cum = np.cumsum(pc, axis=1)

    def count(self, k: int) -> int:
        if k <= 0:
            return 0
        full, rem = divmod(k, 64)
        total = 0
        if full:
            total += int(self.cum[:k, full - 1].sum())
        if rem:
            total += int(np.bitwise_count(self.S[:k, full] & low_mask(rem)).sum())
        return total


def _square_count(S: np.ndarray, k: int) -> int:
    if k <= 0:
        return 0
    full, rem = divmod(k, 64)
    total = int(np.bitwise_count(S[:k, :full]).sum()) if full else 0
    if rem:
        total += int(np.bitwise_count(S[:k, full] & low_mask(rem)).sum())
    return total


def line_starts(R: np.ndarray) -> np.ndarray:
    """Bits of ``R`` whose up-left diagonal neighbour is not set."""
    prev = np.zeros_like(R)
    # shift row i-1 one column right (bit j-1 -> j)
    prev[1:] = R[:-1] << _ONE
    prev[1:, 1:] |= R[:-1, :-1] >> _SH63
    return R & ~prev


@dataclass
class KernelCounts:
    """Integer counts indexed ``[m-1, g]`` for ``m = 1..m_max`` and grid entry ``g``."""

    n_grid: list[int]
    m_max: int
    ext: np.ndarray
    win: np.ndarray | None = None
    starts: np.ndarray | None = None
    stable_at: int | None = None


def diagonal_counts(
    x, eps: float, n_grid, m_max: int, lines: bool = False, threads: int = 1
) -> KernelCounts:
    """Bit-parallel pair counts; see the module docstring for the three tables.

    ``x`` must hold at least ``max(n_grid) + m_max - 1`` points.  Once
    ``S_{m+1}`` equals ``S_m`` on its valid region all longer runs are
    unbounded, so later stages reuse the last matrix without shifting.
    """
    n_grid = [int(n) for n in n_grid]
    if m_max < 1 or min(n_grid) < 1:
        raise ValueError("need m_max >= 1 and n >= 1")
    need = max(n_grid) + m_max - 1
    x = np.asarray(x, dtype=np.float64)
    if len(x) < need:
        raise ValueError(f"orbit of length {len(x)} too short; need {need}")
    x = x[:need]
    N = need
    R = recurrence_bits(x, eps, threads)
    G = len(n_grid)
    ext = np.zeros((m_max, G), dtype=np.int64)
    win = np.zeros((m_max, G), dtype=np.int64) if lines else None
    starts = np.zeros((m_max, G), dtype=np.int64) if lines else None
    st = line_starts(R) if lines else None

    S = R
    stable_at = None
    counter = None
    for m in range(1, m_max + 1):
        if m > 1 and stable_at is None:
            nxt = next_stage(R, S)
            valid = N - m + 1
            prev = S[:valid].copy()
            full, rem = divmod(valid, 64)
            prev[:, full + (1 if rem else 0) :] = 0
            if rem:
                prev[:, full] &= low_mask(rem)
            if np.array_equal(nxt[:valid], prev):
                stable_at = m - 1
            else:
                S = nxt
                counter = None
        if counter is None:
            counter = SquareCounter(S)
        for g, n in enumerate(n_grid):
            ext[m - 1, g] = counter.count(n)
            if lines:
                k = n - m + 1
                win[m - 1, g] = counter.count(k)
                starts[m - 1, g] = _square_count(S[:max(k, 0)] & st[:max(k, 0)], k)
    return KernelCounts(n_grid, m_max, ext, win, starts, stable_at)


# ---------------------------------------------------------------------------
# oracles


def naive_count(x, n: int, eps: float, m: int) -> int:
    """Direct O(n^2 m) count of ``(i, j)`` in ``[0, n)^2`` with ``max_k |x_{i+k} - x_{j+k}| <= eps``."""
    x = np.asarray(x, dtype=np.float64)
    if len(x) < n + m - 1:
        raise ValueError("orbit too short")
    d = np.zeros((n, n))
    for k in range(m):
        seg = x[k : k + n]
        d = np.maximum(d, np.abs(seg[:, None] - seg[None, :]))
    return int((d <= eps).sum())


def diagonal_lines(R: np.ndarray) -> dict[int, int]:
    """Histogram ``{length: count}`` of maximal diagonal lines in a dense boolean matrix."""
    R = np.asarray(R, dtype=bool)
    n, c = R.shape
    hist: dict[int, int] = {}
    for off in range(-(n - 1), c):
        run = 0
        for v in list(np.diagonal(R, off)) + [False]:
            if v:
                run += 1
            elif run:
                hist[run] = hist.get(run, 0) + 1
                run = 0
    return hist


def det_from_histogram(hist: dict[int, int], m: int) -> float:
    total = sum(l * c for l, c in hist.items())
    if total == 0:
        return float("nan")
    return sum(l * c for l, c in hist.items() if l >= m) / total


# ---------------------------------------------------------------------------
# exactly periodic orbits


def periodic_lag_sup(period_values: np.ndarray, block: int = 256) -> np.ndarray:
    """``D(h) = max_k |x_k - x_{k+h}|`` over one period, for every lag ``h``."""
    v = np.asarray(period_values, dtype=np.float64)
    Q = len(v)
    ext = np.concatenate([v, v])
    D = np.empty(Q)
    for h0 in range(0, Q, block):
        hs = np.arange(h0, min(h0 + block, Q))
        idx = hs[:, None] + np.arange(Q)[None, :]
        D[hs] = np.abs(ext[idx] - v[None, :]).max(axis=1)
    return D


def periodic_counts(period_values: np.ndarray, n: int, eps: float, D: np.ndarray | None = None) -> tuple[int, int]:
    """Pair counts ``(m = 1, m = inf)`` over ``[0, n)^2`` for the orbit repeating ``period_values``.

    For ``m = inf`` a pair only depends on its lag ``d = j - i``: it counts
    iff ``D(d mod Q) <= eps``, and lag ``d`` occurs ``n - |d|`` times.
    """
    v = np.asarray(period_values, dtype=np.float64)
    Q = len(v)
    if D is None:
        D = periodic_lag_sup(v)
    mult = np.full(Q, n // Q, dtype=np.int64)
    mult[: n % Q] += 1
    order = np.argsort(v, kind="stable")
    sv, sm = v[order], mult[order]
    csum = np.concatenate([[0], np.cumsum(sm)])
    hi = np.searchsorted(sv, sv + eps, side="right")
    lo = np.searchsorted(sv, sv - eps, side="left")
    # searchsorted on shifted values may misjudge ties at +-eps; fix exactly
    for arr, sgn in ((hi, 1), (lo, -1)):
        for k in range(Q):
            j = arr[k]
            if sgn > 0:
                while j < Q and abs(sv[j] - sv[k]) <= eps:
                    j += 1
                while j > 0 and abs(sv[j - 1] - sv[k]) > eps:
                    j -= 1
            else:
                while j > 0 and abs(sv[j - 1] - sv[k]) <= eps:
                    j -= 1
                while j < Q and abs(sv[j] - sv[k]) > eps:
                    j += 1
            arr[k] = j
    c1 = int((sm * (csum[hi] - csum[lo])).sum())
    ok = D <= eps
    d = np.arange(1, n)
    lag_ok = ok[d % Q]
    cinf = n * int(ok[0]) + 2 * int(((n - d) * lag_ok).sum())
    return c1, cinf
