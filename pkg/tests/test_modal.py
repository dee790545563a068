import numpy as np
import pytest
from hypothesis import given, strategies as st

from delay_embed.delay_solver import DelayModel, exact_K, predict_rollout
from delay_embed.errors import NumericalError, ValidationError
from delay_embed.experiments import noisy_pseudospectra
from delay_embed.modal import (GridSpec, companion, companion_rollout, eigendecompose, hodmd,
                               hodmd_reconstruct, modal_report, optimal_delay, pseudospectrum,
                               sort_eigenvalues)
from delay_embed.signals import TimeSeries, gen_latent_surrogate
from delay_embed.spectral import SparsityPattern


def shift_model(M):
    return DelayModel(np.eye(M)[-1], M - 1)


def linear_trajectory(A, x0, n):
    X = np.empty((A.shape[0], n))
    X[:, 0] = x0
    for k in range(1, n):
        X[:, k] = A @ X[:, k - 1]
    return TimeSeries(X)


class TestCompanion:
    def test_one_by_one(self):
        cm = companion(DelayModel(np.array([0.5]), 0))
        assert cm.matrix.tolist() == [[0.5]]
        assert eigendecompose(cm).eigenvalues == pytest.approx([0.5])

    def test_scalar_structure(self):
        cm = companion(DelayModel(np.array([1.0, 2.0, 3.0]), 2))
        assert cm.matrix.tolist() == [[1, 1, 0], [2, 0, 1], [3, 0, 0]]

    def test_block_structure(self):
        W = np.arange(1.0, 9.0).reshape(4, 2)      # J=2, L=1
        m = DelayModel(W, 1, 2)
        A = companion(m).matrix
        assert A[:2].tolist() == [[0, 0, 1, 0], [0, 0, 0, 1]]
        assert np.array_equal(A[2:, 2:], m.block(0))
        assert np.array_equal(A[2:, :2], m.block(1))

    def test_quadratic_roots(self):
        lam = eigendecompose(companion(DelayModel(np.array([np.sqrt(2), -1.0]), 1))).eigenvalues
        oracle = np.roots([1, -np.sqrt(2), 1])
        assert np.sort_complex(lam) == pytest.approx(np.sort_complex(oracle), abs=1e-12)
        assert np.abs(lam) == pytest.approx([1, 1], abs=1e-12)

    @pytest.mark.parametrize("M", [4, 8, 16, 32])
    def test_circulant_eigenpairs(self, M):
        md = eigendecompose(companion(shift_model(M)))
        w = np.exp(2j * np.pi / M)
        expected = w ** np.arange(M)
        dist = np.abs(md.eigenvalues[:, None] - expected[None, :]).min(axis=1)
        assert dist.max() < 1e-10
        assert np.abs(np.abs(md.eigenvalues) - 1).max() < 1e-10
        # each eigenvector is a unit-norm geometric sequence of the eigenvalue
        V = md.delay_modes / np.linalg.norm(md.delay_modes, axis=0)
        for i, lam in enumerate(md.eigenvalues):
            ref = lam ** np.arange(M)[::-1] / np.sqrt(M)
            assert abs(abs(np.vdot(ref, V[:, i])) - 1) < 1e-10
        assert md.diagnostics["vandermonde_ok"]

    def test_five_mode_phases(self, five_mode_pattern):
        md = eigendecompose(companion(exact_K(five_mode_pattern)))
        expected = np.sort(2 * np.pi * np.array([1, 2, 4, 8, 12, -1, -2, -4, -8, -12]) / 100)
        assert np.abs(np.sort(np.angle(md.eigenvalues)) - expected).max() < 1e-8
        assert np.abs(np.abs(md.eigenvalues) - 1).max() < 1e-8

    def test_sort_order(self):
        lam = np.array([0.5, 1j, -1j, 2.0, 1.0])
        assert lam[sort_eigenvalues(lam)].tolist() == [2.0, -1j, 1.0, 1j, 0.5]

    def test_unknown_kind(self):
        with pytest.raises(ValidationError):
            companion(DelayModel(np.array([1.0]), 0), "tridiagonal")

    def test_report(self):
        rep = modal_report(eigendecompose(companion(shift_model(4))))
        assert rep["r_prime"] == 4 and len(rep["eigenvalues"]) == 4


class TestRolloutEquivalence:
    @given(st.integers(0, 6), st.integers(0, 10 ** 6))
    def test_scalar(self, L, seed):
        rng = np.random.default_rng(seed)
        m = DelayModel(rng.standard_normal(L + 1), L)
        s = rng.standard_normal((1, L + 1))
        a = predict_rollout(m, s, 50).data
        b = companion_rollout(companion(m), s, 50)
        assert np.abs(a - b).max() <= 1e-10 * max(1.0, np.abs(a).max())

    @given(st.integers(1, 3), st.integers(0, 3), st.integers(0, 10 ** 6))
    def test_block(self, J, L, seed):
        rng = np.random.default_rng(seed)
        m = DelayModel(0.3 * rng.standard_normal((J * (L + 1), J)) / (L + 1), L, J)
        s = rng.standard_normal((J, L + 1))
        a = predict_rollout(m, s, 30).data
        b = companion_rollout(companion(m, "block"), s, 30)
        assert np.abs(a - b).max() < 1e-10


class TestHodmd:
    def test_zero_delay_is_plain_dmd(self):
        rng = np.random.default_rng(3)
        c, s = 0.9 * np.cos(0.4), 0.9 * np.sin(0.4)
        B = np.array([[0.95, 0, 0, 0], [0, c, -s, 0], [0, s, c, 0], [0, 0, 0, 0.5]])
        S = rng.standard_normal((4, 4))
        A = S @ B @ np.linalg.inv(S)
        data = linear_trajectory(A, rng.standard_normal(4), 30)
        md = hodmd(data, 4, 0)
        assert md.r_prime == 4
        oracle = np.linalg.eigvals(data.data[:, 1:] @ np.linalg.pinv(data.data[:, :-1]))
        for v in oracle:
            assert np.abs(md.eigenvalues - v).min() < 1e-8

    def test_latent_recovery(self):
        sur = gen_latent_surrogate(J=200, M=400, n_broadband=0, seed=1)
        md = hodmd(sur.series, 10, 39)
        assert md.diagnostics["r_prime_cap"] == 360
        assert md.r_prime == 20
        err = max(np.abs(md.eigenvalues - t).min() for t in sur.eigenvalues)
        assert err < 1e-6

    def test_reconstruction_matches_training(self):
        sur = gen_latent_surrogate(J=60, M=200, n_waves=4, n_broadband=0, seed=2)
        X = sur.series.data
        # 8 latent eigenvalues in 4 spatial dimensions need at least one delay
        for L in (1, 3):
            md = hodmd(sur.series, 4, L)
            rec = hodmd_reconstruct(md, 200 - L)
            assert np.abs(rec - X[:, L:]).max() < 1e-8 * np.abs(X).max()

    @pytest.mark.parametrize("r,L,name", [(5, 0, "r <= J"), (3, 9, "L <= M-2"), (11, 0, "r <= M")])
    def test_constraint_errors(self, r, L, name):
        J = 4 if name != "r <= M" else 20
        data = TimeSeries(np.random.default_rng(0).standard_normal((J, 10)))
        with pytest.raises(ValidationError, match=name):
            hodmd(data, r, L)

    def test_binding_constraint(self):
        data = TimeSeries(np.random.default_rng(0).standard_normal((6, 40)))
        assert hodmd(data, 2, 3).diagnostics["binding_constraint"] == "r(L+1)"
        assert hodmd(data, 6, 10).diagnostics["binding_constraint"] == "M-1-L"

    def test_nonfinite_input(self):
        X = np.ones((3, 10))
        X[1, 4] = np.nan
        with pytest.raises(NumericalError):
            hodmd(TimeSeries(X), 2, 1)


@given(J=st.integers(2, 8), M=st.integers(4, 30), data=st.data())
def test_hodmd_shape_law(J, M, data):
    r = data.draw(st.integers(1, min(J, M)))
    L = data.draw(st.integers(0, M - 2))
    X = np.random.default_rng(J * 100 + M).standard_normal((J, M))
    md = hodmd(TimeSeries(X), r, L)
    assert md.r_prime <= min(r * (L + 1), M - 1 - L)
    assert md.eigenvalues.shape == (md.r_prime,)
    assert md.spatial_modes.shape == (J, md.r_prime)


class TestOptimalDelay:
    def test_formula_as_written(self):
        L, r_star = optimal_delay(900, 800)
        assert L == 2 and r_star == pytest.approx(800 * 900 / 801)

    def test_intersection(self):
        L, r_star = optimal_delay(100, 4)
        assert (L, r_star) == (20, 80.0)
        # the two caps r(L+1) and M-1-L meet at L = M/(r+1) - 1
        Ls = 100 / 5 - 1
        assert 4 * (Ls + 1) == pytest.approx(100 - 1 - Ls)

    @pytest.mark.parametrize("M,r", [(10, 10), (10, 50), (2, 1)])
    def test_large_r(self, M, r):
        assert optimal_delay(M, r)[0] == 1

    def test_invalid(self):
        with pytest.raises(ValidationError):
            optimal_delay(1, 1)


class TestPseudospectrum:
    def test_normal_matrix_distance(self):
        cm = companion(shift_model(8))
        g = pseudospectrum(cm, GridSpec(n_re=31, n_im=31))
        z = g.re[None, :] + 1j * g.im[:, None]
        lam = np.exp(2j * np.pi * np.arange(8) / 8)
        dist = np.abs(z[..., None] - lam).min(axis=-1)
        assert np.abs(g.sigma_min - dist).max() < 1e-8

    def test_on_eigenvalue(self):
        cm = companion(shift_model(4))
        g = pseudospectrum(cm, GridSpec((-1, 1), (-1, 1), 3, 3))
        assert g.sigma_min[1, 2] < 1e-10       # z = 1

    def test_nonnegative_and_nested(self):
        cm = companion(DelayModel(np.array([1.2, -0.5, 0.3]), 2))
        g = pseudospectrum(cm, GridSpec(n_re=41, n_im=41))
        assert np.all(g.sigma_min >= 0)
        eps = [1e-6, 1e-5, 1e-4, 1e-3, 1e-2]
        for a, b in zip(eps, eps[1:]):
            assert np.all(g.mask(b)[g.mask(a)])

    def test_grid_validation(self):
        with pytest.raises(ValidationError):
            GridSpec(n_re=1)

    def test_noisy_area_ordering(self):
        res = noisy_pseudospectra([9, 20, 39], seed=0, grid=GridSpec(n_re=61, n_im=61),
                                  eps_levels=(1e-2,))
        area = {r["L"]: r["area_fraction"] for r in res["rows"]}
        assert area[9] > area[20] and area[9] > area[39]

    def test_csv(self, tmp_path):
        g = pseudospectrum(companion(shift_model(4)), GridSpec(n_re=3, n_im=2))
        lines = g.write_csv(tmp_path / "p.csv").read_text().splitlines()
        assert lines[0] == "re,im,sigma_min" and len(lines) == 7
