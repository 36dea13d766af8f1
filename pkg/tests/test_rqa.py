from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import det_from_lines, line_histogram, naive_pairs
from rqdet.dynamics import Logistic, Tent, symbolic_trajectory, trajectory
from rqdet.intervals import build_ternary, build_theorem3
from rqdet.kernels import (
    det_from_histogram,
    diagonal_counts,
    diagonal_lines,
    naive_count,
    pack_rows,
    periodic_counts,
    unpack_rows,
)
from rqdet.odometer import Word
from rqdet.rqa import (
    ConsistencyError,
    asymptotic_profile,
    correlation_sum,
    pair_count,
    rdet,
    recurrence_matrix,
    rqa_det,
    shift_bound,
    symbolic_recurrence,
)

TERNARY = build_ternary()


def random_orbit(rng, length):
    # coarse values so that ties and long runs actually occur
    return rng.integers(0, 6, size=length) / 10


# ---------------------------------------------------------------------------
# recurrence matrices


def test_constant_orbit_all_ones():
    R = recurrence_matrix(np.full(70, 0.4), 1e-3)
    assert R.to_dense().all() and R.count() == 70 * 70


def test_monotone_orbit_identity():
    R = recurrence_matrix(np.linspace(0, 1, 50), 1e-3)
    assert np.array_equal(R.to_dense(), np.eye(50, dtype=bool))


def test_two_periodic_checkerboard():
    R = recurrence_matrix(np.tile([0.2, 0.7], 33), 0.1).to_dense()
    i, j = np.indices(R.shape)
    assert np.array_equal(R, (i - j) % 2 == 0)


def test_matrix_symmetric_with_unit_diagonal():
    rng = np.random.default_rng(3)
    R = recurrence_matrix(rng.random(130), 0.2).to_dense()
    assert np.array_equal(R, R.T) and R.diagonal().all()


def test_predicate_is_non_strict():
    R = recurrence_matrix(np.array([0.25, 0.5]), 0.25)
    assert R.get(0, 1) and R.get(1, 0)


def test_pack_round_trip():
    rng = np.random.default_rng(1)
    bits = rng.random((9, 150)) < 0.5
    assert np.array_equal(unpack_rows(pack_rows(bits), 150), bits)


def test_matrix_thread_independent():
    x = trajectory(Logistic(3.9), 0.2, 700).values
    a = recurrence_matrix(x, 0.05, threads=1)
    b = recurrence_matrix(x, 0.05, threads=4)
    assert a.pbm_bytes() == b.pbm_bytes()


def test_pbm_bytes():
    R = recurrence_matrix(np.array([0.0, 0.5, 0.0]), 0.1)
    # rows 101, 010, 101 padded to one byte each, most significant bit first
    assert R.pbm_bytes() == b"P4\n3 3\n" + bytes([0b10100000, 0b01000000, 0b10100000])


def test_pgm_and_rle(tmp_path):
    R = recurrence_matrix(np.array([0.1, 0.1, 0.1, 0.9]), 0.01)
    data = R.pgm_bytes()
    assert data.startswith(b"P5\n4 4\n255\n")
    img = np.frombuffer(data[len(b"P5\n4 4\n255\n") :], dtype=np.uint8).reshape(4, 4)
    assert img[0, 0] == 4 and img[1, 1] == 3 and img[0, 1] == 2 and img[0, 3] == 0
    rle = R.to_rle()
    assert rle["rows"][0] == [[0, 3]] and rle["rows"][3] == [[3, 1]]
    R.to_pbm(tmp_path / "r.pbm")
    assert (tmp_path / "r.pbm").read_bytes() == R.pbm_bytes()


# ---------------------------------------------------------------------------
# correlation sums


def test_large_eps_gives_one():
    x = trajectory(Logistic(3.9), 0.2, 80).values
    for m in (1, 3, 7):
        assert correlation_sum(x, 60, 1.0, m) == 1.0


@pytest.mark.parametrize("p", [1, 2, 3, 5])
def test_periodic_orbit_one_over_p(p):
    x = np.tile(np.linspace(0.1, 0.9, p), 200)
    for m in (1, 4, 17):
        n = 30 * p
        assert pair_count(x, n, 1e-3, m) * p == n * n
        assert rdet(x, n, 1e-3, m) == 1.0


def test_single_pair():
    assert correlation_sum(np.array([0.3, 0.9, 0.1]), 1, 1e-3, 3) == 1.0


def test_rdet_examples():
    x = trajectory(Logistic(3.9), 0.2, 300).values
    assert rdet(x, 200, 0.05, 1) == 1.0
    assert rdet(np.linspace(0, 1, 90), 80, 1e-3, 10) == 1.0


def test_argument_errors():
    x = np.zeros(10)
    with pytest.raises(ValueError):
        pair_count(x, 0, 0.1, 1)
    with pytest.raises(ValueError):
        pair_count(x, 5, 0.1, 0)
    with pytest.raises(ValueError):
        pair_count(x, 8, 0.1, 4)
    with pytest.raises(ValueError):
        pair_count(x, 5, 0.1, 2, kernel="fft")


def test_kernel_matches_naive_oracle():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        n = int(rng.integers(1, 65))
        m = int(rng.integers(1, 9))
        x = random_orbit(rng, n + m - 1)
        eps = float(rng.choice([0.0, 0.1, 0.15, 0.2, 0.3]))
        ref = naive_pairs(list(x), n, eps, m)
        assert pair_count(x, n, eps, m, kernel="naive") == ref
        assert pair_count(x, n, eps, m) == ref


def test_kernel_grid_matches_naive():
    rng = np.random.default_rng(5)
    x = random_orbit(rng, 200)
    grid = [1, 17, 64, 65, 130, 190]
    kc = diagonal_counts(x, 0.1, grid, 11)
    for g, n in enumerate(grid):
        for m in range(1, 12):
            assert kc.ext[m - 1, g] == naive_count(x, n, 0.1, m)


@settings(max_examples=50, deadline=None)
@given(
    vals=st.lists(st.integers(0, 4), min_size=2, max_size=90),
    m=st.integers(1, 6),
    eps=st.sampled_from([0.0, 0.25, 0.5]),
)
def test_kernel_property(vals, m, eps):
    x = np.array(vals, dtype=float) / 4
    n = len(x) - m + 1
    if n < 1:
        return
    assert pair_count(x, n, eps, m) == naive_pairs(list(x), n, eps, m)


# ---------------------------------------------------------------------------
# DET


def test_rqa_det_examples():
    x = trajectory(Logistic(3.9), 0.2, 100).values
    assert rqa_det(x, 64, 0.05, 1) == 1.0
    # lines are confined to the plot, so the corner diagonals of an all-ones
    # plot are short: one line of length n, two of each length 1..n-1
    n, m = 40, 10
    expected = (n + 2 * sum(range(m, n))) / n**2
    assert rqa_det(np.full(n, 0.5), n, 1e-3, m) == pytest.approx(expected, abs=1e-15)
    assert rdet(np.full(n + m, 0.5), n, 1e-3, m) == 1.0


def test_det_matches_line_histogram():
    rng = np.random.default_rng(8)
    for _ in range(100):
        x = random_orbit(rng, 8)
        R = np.abs(x[:, None] - x[None, :]) <= 0.1
        hist = line_histogram(R.tolist())
        assert diagonal_lines(R) == hist
        for m in range(1, 9):
            ref = det_from_lines(hist, m)
            assert det_from_histogram(hist, m) == ref
            assert rqa_det(x, 8, 0.1, m) == pytest.approx(ref, abs=1e-12)


def test_det_identity_random():
    rng = np.random.default_rng(11)
    for _ in range(100):
        x = random_orbit(rng, 64 + 17)
        rep = asymptotic_profile(x, 0.1, m_cap=16, n_grid=[16, 32, 64])
        assert rep.det_identity_residual() <= 1e-12


def test_det_identity_float_maps():
    for m in (Logistic(3.9), Tent(2.0), Logistic(3.2)):
        x = trajectory(m, 0.3, 2200, transient=100).values
        rep = asymptotic_profile(x, 0.01, m_cap=64, n_grid=[512, 1024, 2048])
        assert rep.check()["det_identity_ok"]


# ---------------------------------------------------------------------------
# profiles and invariants


def test_periodic_profile():
    x = trajectory(Logistic(3.2), 0.3, 2200, transient=1000).values
    rep = asymptotic_profile(x, 1e-3, m_cap=32, n_grid=[512, 1024, 2048])
    assert np.all(rep.rdet == 1.0)
    assert np.all(rep.C == 0.5)
    assert rep.stabilized_at == 1
    t = rep.tails()
    assert t["rdet_lo"].min() == 1.0 and t["c_hi"].max() == 0.5


def test_profile_monotone_in_m_and_eps():
    x = trajectory(Logistic(3.9), 0.2, 1200).values
    prev = None
    for eps in (0.005, 0.01, 0.05, 0.2):
        rep = asymptotic_profile(x, eps, m_cap=24, n_grid=[256, 512, 1024])
        assert np.all(np.diff(rep.C, axis=0) <= 0)
        assert np.all(np.diff(rep.rdet, axis=0) <= 0)
        assert np.all(rep.C >= 1 / np.array(rep.n_grid))
        assert np.all((rep.C >= 0) & (rep.C <= 1) & (rep.rdet <= 1))
        if prev is not None:
            assert np.all(rep.C >= prev)
        prev = rep.C


def test_sandwich_flag():
    x = trajectory(Tent(2.0), 0.3, 4200).values
    rep = asymptotic_profile(x, 0.01, m_cap=16, n_grid=[512, 1024, 2048, 4096])
    assert rep.check()["sandwich_ok"]


def test_consistency_error():
    rep = asymptotic_profile(np.linspace(0, 1, 80), 1e-3, m_cap=4, n_grid=[32, 64])
    rep.ext[2, 0] = rep.ext[1, 0] + 1
    with pytest.raises(ConsistencyError):
        rep.check()


def test_callable_source_and_exports():
    calls = []

    def source(length):
        calls.append(length)
        return trajectory(Logistic(3.9), 0.2, length)

    rep = asymptotic_profile(source, 0.05, m_cap=8, n_grid=[64, 128])
    assert calls == [136]
    lines = rep.to_csv().splitlines()
    assert lines[0] == "m,n,C,rdet,rqa_det" and len(lines) == 1 + 8 * 2
    assert rep.to_json() == rep.to_json()
    assert '"det_identity_ok": true' in rep.to_json()


@pytest.mark.parametrize("h", [1, 7, 64])
def test_shift_bound(h):
    for m in (Logistic(3.9), Tent(2.0)):
        x = trajectory(m, 0.3, 1200).values
        for mm in (1, 5, 20):
            assert shift_bound(x, h, 512, 0.02, mm)["ok"]


# ---------------------------------------------------------------------------
# symbolic orbits


def test_periodic_counts_match_kernel():
    tr = symbolic_trajectory(TERNARY, Word.zeros(5), 300)
    per = tr.one_period()
    for eps in (1 / 243, 0.01, 0.05, 7 / 27):
        for n in (1, 31, 64, 100, 200):
            c1, cinf = periodic_counts(per, n, eps)
            kc = diagonal_counts(tr.values, eps, [n], 33)
            assert c1 == kc.ext[0, 0]
            assert cinf == kc.ext[32, 0]


def test_exact_inf_row_on_symbolic_profile():
    tr = symbolic_trajectory(TERNARY, Word.zeros(4), 2200)
    rep = asymptotic_profile(tr, 7 / 243, m_cap=32, n_grid=[512, 1024, 2048])
    assert rep.exact_inf is not None
    assert np.array_equal(rep.exact_inf, rep.ext[-1])


def test_symbolic_decisions_agree_with_floats():
    for sys, alpha in ((TERNARY, Word(6, 5)), (build_theorem3(2)[0], Word(8, 3))):
        n = 150
        tr = symbolic_trajectory(sys, alpha, n)
        x = tr.values
        for eps in (F(1, 81), F(1, 30), F(2, 9)):
            sr = symbolic_recurrence(tr, eps, keep=n * n)
            fl = np.abs(x[:, None] - x[None, :]) <= float(eps)
            yes = sr.decided.to_dense()
            und = np.zeros((n, n), dtype=bool)
            for i, j in sr.undecided:
                und[i, j] = True
            assert und.sum() == sr.undecided_count
            assert np.all(fl[yes]) and not np.any(fl[~yes & ~und])
        assert len(symbolic_recurrence(tr, F(1, 30), keep=5).undecided) <= 5
