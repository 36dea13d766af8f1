"""Desk-scale reproductions: epsilon sweeps, the trichotomy classifier, the
oscillating construction and the four-fifths bound.

Odometer maps are sampled through symbolic orbits, so every trajectory
statistic can be compared with the exact pair counts of the interval system.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .dynamics import (
    Logistic,
    MapSpec,
    OdometerExtension,
    Tent,
    symbolic_trajectory,
    trajectory,
)
from .intervals import (
    INF,
    IntervalSystem,
    as_fraction,
    build_theorem3,
    epsilon_t,
    frac_str,
    pair_counts,
    validate,
)
from .kernels import periodic_counts, periodic_lag_sup, recurrence_bits
from .odometer import Word
from .rqa import asymptotic_profile

DEFAULT_THETA1 = 0.05
DEFAULT_THETA0 = 0.1
DEFAULT_SMALL_FRACTION = 1 / 3
FLOAT_TRANSIENT = 1000
MIN_RECURRENCES = 16


class BudgetError(RuntimeError):
    pass


@dataclass
class Budget:
    """Caps on orbit length, Bowen window and symbolic period."""

    n_max: int = 16384
    m_cap: int = 32
    max_period: int = 1 << 16

    def to_dict(self) -> dict:
        return {"n_max": self.n_max, "m_cap": self.m_cap, "max_period": self.max_period}


# ---------------------------------------------------------------------------
# exact bounds


def combinatorial_rdet_bounds(sys: IntervalSystem, t: int, eps, m=INF) -> dict:
    """``N°_m/N_1 <= rdet_m <= N_m/N°_1`` and ``N°_m/4^t <= C_m <= N_m/4^t``, exactly."""
    eps = as_fraction(eps)
    counts = pair_counts(sys, t, eps, [1, m])
    n1, c1 = counts[1]
    nm, cm = counts[m]
    total = 4**t
    out = {
        "t": t,
        "eps": eps,
        "m": "inf" if m == INF else int(m),
        "N_m": nm,
        "Nc_m": cm,
        "N_1": n1,
        "Nc_1": c1,
        "c_lower": Fraction(cm, total),
        "c_upper": Fraction(nm, total),
    }
    if c1 == 0:
        out.update(lower=Fraction(0), upper=Fraction(1), trivial=True)
    else:
        out.update(lower=Fraction(cm, n1), upper=min(Fraction(1), Fraction(nm, c1)), trivial=False)
    return out


def _fracs_to_str(d: dict) -> dict:
    return {k: (frac_str(v) if isinstance(v, Fraction) else v) for k, v in d.items()}


def symbolic_inf_stats(sys: IntervalSystem, t: int, n: int, eps, alpha_value: int = 0) -> dict:
    """Pair counts ``(m = 1, m = inf)`` of a symbolic orbit at level ``t``.

    Positions are midpoints of depth ``t+2`` cylinders (period ``4 * 2^t``).
    """
    T = t + 2
    traj = symbolic_trajectory(sys, Word(T, alpha_value % (1 << T)), n)
    per = traj.one_period()
    c1, cinf = periodic_counts(per, n, float(as_fraction(eps)), periodic_lag_sup(per))
    return {"n": n, "depth": T, "count_1": c1, "count_inf": cinf}


def _inside(count: int, n: int, lo: Fraction, hi: Fraction) -> bool:
    v = Fraction(count, n * n)
    return lo <= v <= hi


# ---------------------------------------------------------------------------
# sweeps


@dataclass
class SweepEntry:
    eps: float
    status: str
    rdet_hi: float | None = None
    rdet_lo: float | None = None
    c_hi: float | None = None
    c_lo: float | None = None
    m: str = ""
    n_max: int = 0
    note: str = ""

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class SweepResult:
    map: str
    start: str
    provenance: str
    entries: list[SweepEntry]
    budget: Budget

    def to_dict(self) -> dict:
        return {
            "map": self.map,
            "start": self.start,
            "provenance": self.provenance,
            "budget": self.budget.to_dict(),
            "entries": [e.to_dict() for e in self.entries],
        }


def _pow2_at_least(v: float) -> int:
    return 1 << max(0, math.ceil(math.log2(max(v, 1))))


def _float_entry(m: MapSpec, x0, eps: float, budget: Budget, seed: int) -> SweepEntry:
    pilot_n = 2048
    pilot = trajectory(m, x0, pilot_n, FLOAT_TRANSIENT, seed).values
    rr = (int(np.bitwise_count(recurrence_bits(pilot, eps)).sum()) - pilot_n) / pilot_n**2
    rr = max(rr, 1 / pilot_n**2)
    # the smaller tail length n/2 must already see MIN_RECURRENCES off-diagonal
    # recurrences per point, else the diagonal alone props rdet up
    need = max(4096, _pow2_at_least(2 * MIN_RECURRENCES / rr))
    if need > budget.n_max:
        return SweepEntry(eps, "budget", m=str(budget.m_cap), n_max=need,
                          note=f"recurrence rate {rr:.3g} needs n = {need} > {budget.n_max}")
    traj = trajectory(m, x0, need + budget.m_cap, FLOAT_TRANSIENT, seed)
    rep = asymptotic_profile(traj, eps, budget.m_cap, [need // 8, need // 4, need // 2, need])
    t = rep.tails()
    return SweepEntry(
        eps, "ok", float(t["rdet_hi"][-1]), float(t["rdet_lo"][-1]), float(t["c_hi"][-1]),
        float(t["c_lo"][-1]), str(budget.m_cap), need,
    )


def level_for(sys: IntervalSystem, eps) -> int:
    """Deepest level ``t`` with ``nu_t >= eps`` (capped by the materialization limit)."""
    eps = as_fraction(eps)
    t = 0
    while t + 1 <= min(sys.depth_cap, 20) - 2 and sys.nu(t + 1) >= eps:
        t += 1
    return t


def _odometer_entry(m: OdometerExtension, alpha: int, eps, budget: Budget) -> SweepEntry:
    sys = m.system
    t = level_for(sys, eps)
    n = max(4096, 8 * (1 << t))
    period = 1 << (t + 2)
    if n > budget.n_max or period > budget.max_period:
        return SweepEntry(float(as_fraction(eps)), "budget", m="inf", n_max=n,
                          note=f"level {t} needs n = {n}, period {period}")
    grid = [n // 4, n // 2, n]
    vals = [symbolic_inf_stats(sys, t, k, eps, alpha) for k in grid]
    r = [v["count_inf"] / v["count_1"] for v in vals]
    c = [v["count_inf"] / k**2 for v, k in zip(vals, grid)]
    tail = slice(1, None)
    return SweepEntry(float(as_fraction(eps)), "ok", max(r[tail]), min(r[tail]), max(c[tail]), min(c[tail]),
                      "inf", n, note=f"level {t}")


def epsilon_sweep(
    m: MapSpec,
    start,
    eps_grid: Sequence,
    budget: Budget | None = None,
    provenance: str = "generic",
    seed: int = 0,
    threads: int = 1,
) -> SweepResult:
    """One asymptotic profile per ``eps``, sorted by decreasing ``eps``.

    ``start`` is ``x0`` for analytic maps and a word value (or word string)
    for odometer maps.  Float maps get ``n`` large enough that the tail
    lengths see ``MIN_RECURRENCES`` off-diagonal recurrences per point; entries that
    would exceed the budget are reported with status ``"budget"``.  Entries
    are independent and run on ``threads`` workers; grid order is kept.
    """
    budget = budget or Budget()
    grid = sorted(eps_grid, key=lambda e: -float(as_fraction(e)))
    if isinstance(m, OdometerExtension):
        alpha = Word.from_str(start).value if isinstance(start, str) else int(start or 0)
        job = lambda e: _odometer_entry(m, alpha, e, budget)  # noqa: E731
        start_s = str(start or 0)
    else:
        job = lambda e: _float_entry(m, start, float(as_fraction(e)), budget, seed)  # noqa: E731
        start_s = repr(start)
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            entries = list(ex.map(job, grid))
    else:
        entries = [job(e) for e in grid]
    return SweepResult(str(m), start_s, provenance, entries, budget)


# ---------------------------------------------------------------------------
# classifier


@dataclass
class Classification:
    verdict: str
    theta1: float
    theta0: float
    small_eps: list[float]
    stats: dict = field(default_factory=dict)
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def classify(
    sweep: SweepResult,
    theta1: float = DEFAULT_THETA1,
    theta0: float = DEFAULT_THETA0,
    small_fraction: float = DEFAULT_SMALL_FRACTION,
) -> Classification:
    """Trichotomy verdict from the smallest ``small_fraction`` of the grid.

    ``DET_ONE`` if every small-eps lower tail is ``>= 1 - theta1``;
    ``DET_ZERO`` if every small-eps upper tail is ``<= theta0``;
    ``POSITIVE_BOUNDED`` otherwise.
    """
    ok = [e for e in sweep.entries if e.status == "ok"]
    flags = []
    for e in ok:
        vals = (e.rdet_hi, e.rdet_lo, e.c_hi, e.c_lo)
        if any(not 0 <= v <= 1 + 1e-12 for v in vals) or e.rdet_lo > e.rdet_hi or e.c_lo > e.c_hi:
            raise ValueError(f"inconsistent sweep entry at eps = {e.eps}")
    if [e.eps for e in sweep.entries] != sorted((e.eps for e in sweep.entries), reverse=True):
        raise ValueError("sweep entries are not sorted by decreasing eps")
    if len(ok) < len(sweep.entries):
        flags.append(f"{len(sweep.entries) - len(ok)} entries skipped for budget")
    if not ok:
        raise ValueError("no usable sweep entries")
    decades = math.log10(ok[0].eps / ok[-1].eps) if ok[-1].eps > 0 else math.inf
    if len(ok) < 6:
        flags.append(f"only {len(ok)} epsilons (6 expected)")
    if decades < 3:
        flags.append(f"grid spans {decades:.2f} decades (3 expected)")
    k = max(1, math.ceil(len(ok) * small_fraction))
    small = ok[-k:]
    lo = min(e.rdet_lo for e in small)
    hi = max(e.rdet_hi for e in small)
    if lo >= 1 - theta1:
        verdict = "DET_ONE"
    elif hi <= theta0:
        verdict = "DET_ZERO"
    else:
        verdict = "POSITIVE_BOUNDED"
    return Classification(
        verdict, theta1, theta0, [e.eps for e in small],
        {"min_rdet_lo": lo, "max_rdet_hi": hi, "positivity_margin": lo, "decades": decades},
        flags,
    )


# ---------------------------------------------------------------------------
# oscillating construction


def theorem_example_report(stages: int = 3, trajectory_max_period: int = 1 << 14) -> dict:
    """Certified bounds of the oscillating construction, stage by stage.

    At ``(t_n, eps_n)`` the exact bounds must pin ``rdet = 1``; at
    ``(t_n', eps_n')`` the upper bound must be ``<= 2^(1-n)``.  A symbolic
    orbit with ``n = 4 * 2^(t_n')`` is checked against both sandwiches when
    its period fits ``trajectory_max_period``.
    """
    if not 1 <= stages <= 4:
        raise ValueError("stages must lie in 1..4")
    sys, ladder = build_theorem3(stages)
    depth = ladder.t_prime[-1]
    val = validate(sys, depth)
    rows = []
    sequence = []
    ok = val["ok"]
    for i in range(stages):
        n = i + 1
        t, tp = ladder.t[i], ladder.t_prime[i]
        e, ep = ladder.eps[i], ladder.eps_prime[i]
        det1 = combinatorial_rdet_bounds(sys, t, e, INF)
        det1_m1 = combinatorial_rdet_bounds(sys, t, e, 1)
        det0 = combinatorial_rdet_bounds(sys, tp, ep, INF)
        target = Fraction(1, 2 ** (n - 1))
        pinned = det1["lower"] == det1["upper"] == 1 and det1["N_m"] == det1["Nc_m"] == 2**t
        below = det0["upper"] <= target
        row = {
            "stage": n,
            "t": t,
            "eps": frac_str(e),
            "t_prime": tp,
            "eps_prime": frac_str(ep),
            "det_one": _fracs_to_str(det1),
            "det_one_m1": _fracs_to_str(det1_m1),
            "det_small": _fracs_to_str(det0),
            "target_upper": frac_str(target),
            "pinned_to_one": pinned,
            "upper_within_target": below,
        }
        traj_ok = None
        period = 1 << (tp + 2)
        if period <= trajectory_max_period:
            nn = 4 * (1 << tp)
            checks = []
            for level, eps, b in ((t, e, det1), (tp, ep, det0)):
                s = symbolic_inf_stats(sys, tp, nn, eps)
                c_ok = _inside(s["count_inf"], nn, b["c_lower"], b["c_upper"])
                r = Fraction(s["count_inf"], s["count_1"])
                r_ok = b["lower"] <= r <= b["upper"]
                checks.append({"level": level, "rdet_inf": float(r), "c_inf": s["count_inf"] / nn**2,
                               "c_inside": c_ok, "rdet_inside": r_ok})
            traj_ok = all(c["c_inside"] and c["rdet_inside"] for c in checks)
            row["trajectory"] = {"n": nn, "checks": checks, "ok": traj_ok}
        else:
            row["trajectory"] = {"skipped": f"period {period} above {trajectory_max_period}"}
        ok = ok and pinned and below and traj_ok is not False
        rows.append(row)
        sequence += ["1", frac_str(det0["upper"])]
    return {
        "report": "theorem-example",
        "stages": stages,
        "ladder": ladder.to_dict(),
        "validator_ok": val["ok"],
        "validator": val,
        "rows": rows,
        "oscillation": sequence,
        "ok": bool(ok),
    }


# ---------------------------------------------------------------------------
# four-fifths bound


def four_fifths_report(sys: IntervalSystem, t_range: Sequence[int], eps_scale=1, tolerance: float = 0.02) -> dict:
    """Check the counting bounds behind ``rdet_inf <= 4/5`` at ``eps = eps_{t-2}``.

    ``eps_scale != 1`` evaluates at ``eps_scale * eps_{t-2}``; such rows
    are outside the bound's hypothesis and never count as failures.
    """
    scale = as_fraction(eps_scale)
    t_range = list(t_range)
    if min(t_range) < 2:
        raise ValueError("t must be >= 2")
    eps_s = [epsilon_t(sys, s) for s in range(max(t_range) - 1)]
    rows = []
    ok = True
    for t in t_range:
        e_min = eps_s[t - 2]
        minimal = e_min == min(eps_s[: t - 1])
        eps = e_min * scale
        in_hyp = minimal and scale == 1
        counts = pair_counts(sys, t, eps, [1, INF])
        n_inf = counts[INF][0]
        nc1 = counts[1][1]
        ratio = Fraction(n_inf, nc1) if nc1 else Fraction(1)
        c1 = n_inf <= 2 * 2**t
        c2 = nc1 - n_inf >= 2 ** (t - 1)
        bound_ok = ratio <= Fraction(4, 5)
        n = 8 * 2**t
        s = symbolic_inf_stats(sys, t, n, eps)
        r_traj = s["count_inf"] / s["count_1"]
        traj_ok = r_traj <= 0.8 + tolerance
        row = {
            "t": t,
            "eps": frac_str(eps),
            "eps_minimal": minimal,
            "in_hypothesis": in_hyp,
            "N_inf": n_inf,
            "Nc_1": nc1,
            "N_inf_le_2pow_t1": c1,
            "gap_ge_half": c2,
            "upper": frac_str(ratio),
            "upper_le_4_5": bound_ok,
            "trajectory_rdet_inf": r_traj,
            "trajectory_ok": traj_ok,
        }
        if not minimal:
            row["note"] = "eps_{t-2} is not the minimum of eps_0..eps_{t-2}"
        if in_hyp:
            ok = ok and c1 and c2 and bound_ok and traj_ok
        rows.append(row)
    return {"report": "four-fifths", "system": sys.kind, "eps_scale": frac_str(scale), "rows": rows, "ok": bool(ok)}
