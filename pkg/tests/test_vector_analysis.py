import numpy as np
import pytest
from hypothesis import given, strategies as st

from delay_embed.delay_solver import build_hankel, solve_time_domain
from delay_embed.errors import ValidationError
from delay_embed.signals import TimeSeries
from delay_embed.spectral import detect_sparsity, dft, filter_spectrum, synthesize
from delay_embed.vector_analysis import (delay_block, minimal_delay_vector, oc_index,
                                         rank_test_vector, ranks_by_L, row_eliminate,
                                         stack_series, stack_spectra, vector_report)


def wave_series(rows, M):
    """Each row is a list of (wavenumber, amplitude, phase) triples."""
    k = np.arange(M)
    X = np.zeros((len(rows), M))
    for j, waves in enumerate(rows):
        for i, amp, ph in waves:
            X[j] += amp * np.cos(2 * np.pi * i * k / M + ph)
    return TimeSeries(X, 1.0, M)


def lstsq_residual(ts, L):
    """Brute-force oracle: relative residual of the best real delay fit."""
    sys = build_hankel(ts, L, "all-periodic")
    W = np.linalg.lstsq(sys.regressor, sys.target, rcond=None)[0]
    return np.linalg.norm(sys.regressor @ W - sys.target) / np.linalg.norm(sys.target)


def disjoint_pair():
    return wave_series([[(1, 1.0, 0.3)], [(2, 0.7, -1.1)]], 16)


@st.composite
def multi_signals(draw):
    M = draw(st.integers(8, 24))
    J = draw(st.integers(2, 3))
    rows = []
    for _ in range(J):
        n = draw(st.integers(1, 3))
        idx = draw(st.lists(st.integers(1, (M - 1) // 2), min_size=n, max_size=n, unique=True))
        rows.append([(i, draw(st.floats(0.5, 2.0)), draw(st.floats(0, 6.28))) for i in idx])
    return wave_series(rows, M)


@pytest.fixture(scope="module")
def vdp_pair(vdp_period):
    pats = [detect_sparsity(dft(vdp_period, j), 0.01) for j in range(2)]
    rows = [synthesize(filter_spectrum(dft(vdp_period, j), pats[j]), 80) for j in range(2)]
    return stack_series(TimeSeries(np.vstack(rows), 1.0, 80))


class TestRowEliminate:
    def test_single_component(self):
        sys = row_eliminate(stack_series(wave_series([[(1, 1.0, 0), (3, 2.0, 1)]], 12)))
        assert sys.P_union == 4
        C = sys.C()
        assert np.linalg.matrix_rank(C) == 4
        # each row has exactly one nonzero entry
        assert np.all(np.count_nonzero(np.abs(C) > 1e-12, axis=1) == 1)

    def test_identical_components(self):
        ts = wave_series([[(2, 1.0, 0.4)], [(2, 1.0, 0.4)]], 10)
        sys = row_eliminate(stack_series(ts))
        assert np.linalg.matrix_rank(sys.C()) == sys.P_union == 2

    def test_zero_second_component(self):
        one = row_eliminate(stack_series(wave_series([[(2, 1.0, 0.4)]], 10)))
        two = row_eliminate(stack_series(wave_series([[(2, 1.0, 0.4)], []], 10)))
        assert np.allclose(two.C()[:, :10], one.C())
        assert np.all(two.C()[:, 10:] == 0)

    def test_all_rows_eliminated(self):
        with pytest.raises(ValidationError):
            row_eliminate(stack_series(TimeSeries(np.zeros((2, 8)), 1.0, 8)))

    def test_mismatched_M(self):
        a = dft(wave_series([[(1, 1.0, 0)]], 8))
        b = dft(wave_series([[(1, 1.0, 0)]], 10))
        with pytest.raises(ValidationError):
            stack_spectra([a, b])


class TestRankTest:
    @pytest.mark.parametrize("L", range(8))
    def test_scalar_reduces_to_pattern_count(self, L):
        st_ = stack_series(wave_series([[(1, 1.0, 0), (2, 0.5, 1), (5, 0.3, 2)]], 16))
        assert st_.P_union == 6
        assert rank_test_vector(st_, L) == (L >= 5)

    def test_disjoint_pair(self):
        st_ = stack_series(disjoint_pair())
        assert not rank_test_vector(st_, 0)
        assert rank_test_vector(st_, 1)
        # oracle
        assert lstsq_residual(disjoint_pair(), 0) > 1e-3
        assert lstsq_residual(disjoint_pair(), 1) < 1e-10

    def test_vdp_pair(self, vdp_pair):
        assert not rank_test_vector(vdp_pair, 7)
        assert rank_test_vector(vdp_pair, 8)

    def test_ranks_by_L_layout(self):
        rows = ranks_by_L(stack_series(disjoint_pair()), 2)
        assert [r["L"] for r in rows] == [0, 1, 2]
        assert rows[1]["rank"] == rows[1]["rank_aug"] == 4


class TestMinimalDelay:
    def test_five_mode(self):
        ts = wave_series([[(1, .3, 0), (2, .5, -np.pi / 2), (4, .9, 0), (8, 1.6, -np.pi / 2),
                           (12, 1.2, 0)]], 100)
        assert minimal_delay_vector(stack_series(ts)) == 9

    def test_vdp_pair(self, vdp_pair):
        assert minimal_delay_vector(vdp_pair) == 8

    def test_disjoint_pair(self):
        assert minimal_delay_vector(stack_series(disjoint_pair())) == 1

    def test_empty(self):
        with pytest.raises(ValidationError):
            minimal_delay_vector(stack_series(TimeSeries(np.zeros((2, 8)), 1.0, 8)))


class TestOcIndex:
    @pytest.mark.parametrize("waves", [[(1, 1.0, 0)], [(1, 1.0, 0), (4, 2.0, 1)],
                                       [(0, 1.0, 0), (2, 1.0, 0), (3, 1.0, 0)]])
    def test_scalar_equals_P(self, waves):
        st_ = stack_series(wave_series([waves], 12))
        assert oc_index(row_eliminate(st_)) == st_.P_union

    def test_disjoint_pair(self):
        assert oc_index(row_eliminate(stack_series(disjoint_pair()))) == 2

    def test_vdp_bound(self, vdp_pair):
        mu = oc_index(row_eliminate(vdp_pair))
        assert mu - 1 >= minimal_delay_vector(vdp_pair)

    def test_lazy_blocks_match_dense(self):
        sys = row_eliminate(stack_series(disjoint_pair()))
        C = sys.C()
        lam_inv = np.exp(2j * np.pi * np.arange(sys.M) / sys.M)
        for k in range(3):
            # C A^k B with A = diag(lam^-1) per component and B = blockdiag of ones
            dense = np.column_stack([C[:, j * sys.M:(j + 1) * sys.M] @ lam_inv ** k
                                     for j in range(sys.J)])
            assert np.allclose(delay_block(sys.coeffs, sys.rows, sys.M, k), dense)


def test_report_keys():
    rep = vector_report(stack_series(disjoint_pair()))
    assert set(rep) == {"P_union", "minimal_L", "oc_index", "ranks_by_L"}
    assert rep["minimal_L"] == 1 and rep["oc_index"] == 2


# ---------------------------------------------------------------- properties

@given(multi_signals())
def test_oc_bound_property(ts):
    st_ = stack_series(ts)
    mu = oc_index(row_eliminate(st_))
    assert rank_test_vector(st_, mu - 1)
    assert minimal_delay_vector(st_) <= mu - 1


@given(multi_signals())
def test_monotone_in_L(ts):
    st_ = stack_series(ts)
    passed = [rank_test_vector(st_, L) for L in range(st_.P_union + 1)]
    first = passed.index(True)
    assert all(passed[first:])


@given(multi_signals())
def test_consistent_with_solver(ts):
    st_ = stack_series(ts)
    for L in range(min(st_.P_union, ts.N - 1)):
        sys = build_hankel(ts, L, "all-periodic")
        W = solve_time_domain(sys).weights
        resid = np.linalg.norm(sys.regressor @ W - sys.target) / np.linalg.norm(sys.target)
        if rank_test_vector(st_, L):
            assert resid < 1e-8
        else:
            assert resid > 1e-8


@given(multi_signals())
def test_geometric_containment(ts):
    """Right-hand sides lie in the delay column space exactly when the test passes."""
    st_ = stack_series(ts)
    a = st_.restricted()
    rows = st_.union_pattern.indices
    b = np.exp(-2j * np.pi * st_.union_pattern.array / st_.M)
    rhs = (a * b[None, :]).T
    for L in range(st_.P_union):
        G = np.hstack([delay_block(a, rows, st_.M, c) for c in range(L + 1)])
        Q = np.linalg.svd(G, full_matrices=False)[0]
        s = np.linalg.svd(G, compute_uv=False)
        Q = Q[:, s > 1e-10 * s[0]]
        proj = rhs - Q @ (Q.conj().T @ rhs)
        contained = np.linalg.norm(proj) <= 1e-8 * np.linalg.norm(rhs)
        assert contained == rank_test_vector(st_, L)
