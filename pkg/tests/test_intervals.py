import json
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_counts, brute_dist_diam, ternary_cylinder
from rqdet.intervals import (
    INF,
    IntervalSystem,
    RationalInterval,
    build_custom,
    build_ternary,
    build_theorem3,
    count_N,
    count_N_circ,
    diam_m,
    dist_m,
    ell_lambda,
    epsilon_t,
    pair_counts,
    stage_levels,
    star_labels,
    validate,
)
from rqdet.odometer import Word, all_words

W = Word.from_str


@pytest.fixture(scope="module")
def ternary():
    return build_ternary()


@pytest.fixture(scope="module")
def theorem3():
    return build_theorem3(3)


def test_ternary_examples(ternary):
    assert tuple(ternary.interval_of(Word.empty())) == (0, 1)
    assert tuple(ternary.interval_of(W("0"))) == (0, F(1, 3))
    assert tuple(ternary.interval_of(W("1"))) == (F(2, 3), 1)
    assert tuple(ternary.interval_of(W("10"))) == (F(2, 3), F(7, 9))


def test_ternary_matches_expansion(ternary):
    for t in range(8):
        for w in all_words(t):
            assert tuple(ternary.interval_of(w)) == ternary_cylinder(str(w))
    # beyond the materialized levels the node-wise descent must agree too
    w = Word(23, 0b10110011100011110000101)
    assert tuple(ternary.interval_of(w)) == ternary_cylinder(str(w))


def test_depth_cap(ternary):
    with pytest.raises(ValueError):
        ternary.interval_of(Word.zeros(25))


def test_rational_interval_rejects_degenerate():
    with pytest.raises(ValueError):
        RationalInterval(F(1, 2), F(1, 2))
    with pytest.raises(ValueError):
        RationalInterval(F(0), F(3, 2))


def test_dist_diam_examples(ternary):
    assert dist_m(ternary, W("0"), W("1"), 1) == F(1, 3)
    assert diam_m(ternary, W("0"), W("1"), 1) == 1
    assert diam_m(ternary, W("0"), W("0"), 1) == F(1, 3)
    # max over the 4-cycle: gaps 5/9, 1/3, 5/9, 7/9
    assert dist_m(ternary, W("00"), W("10"), INF) == F(7, 9)
    with pytest.raises(ValueError):
        dist_m(ternary, W("0"), W("00"), 1)


def test_dist_diam_match_oracle(theorem3):
    sys, _ = theorem3
    for t in (1, 2, 3):
        for a in all_words(t):
            for b in all_words(t):
                for m in (1, 2, 3, INF):
                    d, h = brute_dist_diam(sys, str(a), str(b), 99 if m == INF else m)
                    assert dist_m(sys, a, b, m) == d
                    assert diam_m(sys, a, b, m) == h
                    assert h >= d
                if a == b:
                    assert dist_m(sys, a, b, INF) == 0


@pytest.mark.parametrize("t, eps, m, expected", [(2, F(1, 9), INF, 4), (2, F(1, 9), 1, 4), (1, F(3, 2), 1, 4)])
def test_count_N_examples(ternary, t, eps, m, expected):
    assert count_N(ternary, t, eps, m) == expected


def test_count_N_circ_examples(ternary):
    assert count_N_circ(ternary, 1, F(1, 3), 1) == 2
    assert count_N_circ(ternary, 3, F(1), INF) == 64


def test_counts_match_oracle(ternary, theorem3):
    sys3, ladder = theorem3
    cases = [(ternary, t, e) for t in (1, 2, 3, 4) for e in (F(1, 3**t), F(7, 9 * 3**t), F(1, 3), F(1, 2))]
    cases += [(sys3, t, e) for t in (1, 2, 3, 4) for e in ladder.eps + ladder.eps_prime + [F(1, 5)]]
    for sys, t, eps in cases:
        ms = [1, 2, 3, 5, INF]
        got = pair_counts(sys, t, eps, ms)
        for m in ms:
            assert got[m] == brute_counts(sys, t, eps, 99 if m == INF else m), (sys.kind, t, eps, m)


def _eps_grid(sys, ladder=None):
    grid = {F(1, 3**k) for k in range(1, 10)} | {epsilon_t(sys, s) for s in range(7)}
    if ladder:
        grid |= set(ladder.eps) | set(ladder.eps_prime)
    return sorted(grid)


def test_count_monotonicity_and_stabilization(ternary, theorem3):
    sys3, ladder = theorem3
    for sys, grid in ((ternary, _eps_grid(ternary)), (sys3, _eps_grid(sys3, ladder))):
        for t in range(1, 9):
            ms = [1, 2, 3, 4, 6, 8, 16, 32, 64, 128, 256, INF]
            for eps in grid:
                c = pair_counts(sys, t, eps, ms)
                ns = [c[m][0] for m in ms]
                cs = [c[m][1] for m in ms]
                assert ns == sorted(ns, reverse=True)
                assert cs == sorted(cs, reverse=True)
                assert all(b <= a for a, b in zip(ns, cs))
                assert ns[-1] >= 2**t
                period = 2**t
                for m in ms:
                    if m != INF and m >= period:
                        assert c[m] == c[INF]


def test_ell_lambda(ternary):
    assert ell_lambda(ternary, 2, F(1, 9)) == (4, F(4, 9))
    assert ell_lambda(ternary, 2, F(1, 2)) == (0, 0)
    assert ell_lambda(ternary, 3, F(1, 1000)) == (8, F(8, 27))


def test_ell_lambda_trends(theorem3):
    sys, ladder = theorem3
    for eps in [F(1, 10), F(1, 100), ladder.eps_prime[1], F(1, 10**6)]:
        prev_share, prev_lam = None, None
        for t in range(11):
            ell, lam = ell_lambda(sys, t, eps)
            share = F(ell, 2**t)
            if prev_share is not None:
                assert share <= prev_share
                if ell > 0:
                    assert lam < prev_lam
            prev_share, prev_lam = share, lam


def test_epsilon_t_ternary(ternary):
    assert epsilon_t(ternary, 0) == F(7, 9)
    for t in range(7):
        assert epsilon_t(ternary, t) == F(7, 9) / 3**t


def test_star_labels(ternary):
    lab = star_labels(ternary, Word.empty())
    assert [str(w) for w in (lab.low, lab.low_inner, lab.high_inner, lab.high)] == ["00", "01", "10", "11"]


def test_star_labels_reject_overlap():
    bad = build_custom([[(0, 1)], [(0, F(2, 3)), (F(1, 3), 1)]])
    with pytest.raises(ValueError):
        star_labels(bad, Word.empty())


def test_long_range_separation(ternary):
    """dist_inf(K_b, K_{b+h}) >= eps_s when h is an odd multiple of 2^s."""
    eps = [epsilon_t(ternary, s) for s in range(5)]
    for t in range(2, 7):
        for s in range(t - 1):
            for h in range(1 << s, 1 << t, 2 << s):
                for b in all_words(t):
                    assert dist_m(ternary, b, b + h, INF) >= eps[s]
        for h in range(1 << t):
            if h % (1 << (t - 1)):
                for b in all_words(t):
                    assert dist_m(ternary, b, b + h, INF) >= min(eps[: t - 1])


def test_four_fifths_counts(ternary):
    for t in range(2, 9):
        eps = epsilon_t(ternary, t - 2)
        c = pair_counts(ternary, t, eps, [1, INF])
        n_inf, nc1 = c[INF][0], c[1][1]
        assert n_inf <= 2 * 2**t
        assert nc1 - n_inf >= 2 ** (t - 1)
        assert F(n_inf, nc1) <= F(4, 5)


def test_stage_levels():
    assert stage_levels(3) == [(1, 3), (4, 7), (8, 12)]
    flat = [x for p in stage_levels(4) for x in p]
    assert flat == [1, 3, 4, 7, 8, 12, 13, 18]


def test_theorem3_ladder(theorem3):
    sys, ladder = theorem3
    assert tuple(sys.interval_of(W("0"))) == (0, F(1, 3))
    assert tuple(sys.interval_of(W("1"))) == (F(2, 3), 1)
    assert ladder.t == [1, 4, 8] and ladder.t_prime == [3, 7, 12]
    assert ladder.eps == [F(1, 3), F(1, 972), F(1, 2834352)]
    assert ladder.eps_prime == [F(1, 54), F(1, 52488), F(1, 459165024)]
    for seq in (ladder.eps, ladder.eps_prime):
        assert all(b < a for a, b in zip(seq, seq[1:]))


def test_theorem3_stage_geometry(theorem3):
    sys, ladder = theorem3
    for t, eps in zip(ladder.t, ladder.eps):
        level = sys.level(t)
        assert max(level.diams()) <= eps
        order = level.spatial_order()
        assert min(level.lo[v] - level.hi[u] for u, v in zip(order, order[1:])) >= eps


def test_theorem3_depth_cap():
    with pytest.raises(ValueError):
        build_theorem3(99)


def test_validate_passes(ternary, theorem3):
    rep = validate(ternary, 8)
    assert rep["ok"] and rep["kind"] == "ternary"
    rep = validate(theorem3[0], 12)
    assert rep["ok"]
    names = {r["check"] for r in rep["records"]}
    assert {"det1_diam", "det1_dist", "det0_diam", "det0_dist", "ones_child_long"} <= names
    # stage witnesses are exact fraction strings
    for r in rep["records"]:
        if "stage" in r:
            assert F(r["lhs"]) >= 0 and F(r["rhs"]) >= 0
    json.dumps(rep)


def test_validate_negative_control():
    bad = build_custom([[(0, 1)], [(0, F(2, 3)), (F(1, 3), 1)]])
    rep = validate(bad, 1)
    assert not rep["ok"]
    fail = [r for r in rep["records"] if not r["ok"]]
    assert fail[0]["check"] == "siblings_disjoint"
    assert fail[0]["witness"] == ["0", "1"]
    assert fail[0]["lhs"] == "2/3" and fail[0]["rhs"] == "1/3"


def test_validate_detects_moved_endpoint():
    bad = build_custom([[(0, 1)], [(F(1, 10), F(1, 3)), (F(2, 3), 1)]])
    rep = validate(bad, 2)
    assert not rep["ok"]
    assert any(r["check"] == "left_endpoint_shared" and not r["ok"] for r in rep["records"])


def test_json_round_trip(theorem3):
    sys, ladder = theorem3
    d = sys.to_dict(8)
    text = json.dumps(d)
    back = IntervalSystem.from_dict(json.loads(text))
    assert back.ladder.eps == ladder.eps
    for t in range(9):
        for w in all_words(t):
            assert back.interval_of(w) == sys.interval_of(w)
    assert d["levels"][1] == [["0/1", "1/3"], ["2/3", "1/1"]]


def test_concurrent_materialization():
    from concurrent.futures import ThreadPoolExecutor

    sys = build_ternary()
    with ThreadPoolExecutor(4) as ex:
        levels = list(ex.map(lambda t: sys.level(t), [10, 10, 9, 10, 8, 10]))
    ref = build_ternary().level(10)
    assert levels[0].lo == ref.lo and levels[3].hi == ref.hi


@settings(max_examples=40, deadline=None)
@given(t=st.integers(1, 6), v=st.integers(0, 63), m=st.integers(1, 70))
def test_nesting_and_orbit_periodicity(t, v, m):
    sys = build_ternary()
    a = Word(t, v % (1 << t))
    k = sys.interval_of(a)
    for u in (0, 1):
        c = sys.interval_of(a.extend(u))
        assert k.lo <= c.lo < c.hi <= k.hi
    b = a + 3
    assert dist_m(sys, a, b, m) == dist_m(sys, a, b, m + (1 << t) if m >= (1 << t) else m)
