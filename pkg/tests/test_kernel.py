import numpy as np
import pytest
from mfou import (
    bracket_identity_residual,
    inverse_kernel,
    make_kernel,
    martingale_transform,
    nystrom_kernel,
    path_rng,
    simulate_noise,
)


class TestDegenerateMode:
    """h = 1/2 has closed forms: g = 1/2, <M> = t/2, psi = 2."""

    def test_bracket_and_slope_exact(self, kernel_factory):
        ck = kernel_factory(4.0, 64, 0.5)
        assert np.abs(ck.bracket - ck.grid.times / 2).max() < 1e-12
        assert np.abs(ck.bracket_slope - 0.5).max() < 1e-10
        assert np.abs(ck.inv_bracket_slope - 2.0).max() < 1e-10

    def test_weights_are_half(self, kernel_factory):
        ck = kernel_factory(4.0, 64, 0.5)
        w = ck.weights
        tri = np.tril_indices(64)
        assert np.abs(w[tri] - 0.5).max() < 1e-12
        assert np.all(np.triu(w, 1) == 0.0)


class TestProjectionKernel:
    def test_first_weight_closed_form(self, kernel_factory):
        # one-step projection: w_1 = dt / (dt + dt^2h)
        for h in (0.3, 0.7):
            ck = kernel_factory(1.0, 8, h)
            dt = ck.grid.dt
            assert ck.weights[0, 0] == pytest.approx(dt / (dt + dt ** (2 * h)), rel=1e-12)

    def test_bracket_strictly_increasing(self, kernel_factory):
        for h in (0.2, 0.5, 0.8):
            ck = kernel_factory(1.0, 64, h)
            assert np.all(np.diff(ck.bracket) > 0)
            assert ck.bracket[0] == 0.0

    def test_bracket_equals_weight_quadratic_form(self, kernel_factory):
        # <M>_k = w^T C[:k,:k] w for the row weights
        ck = kernel_factory(1.0, 32, 0.7)
        c = ck.cov.matrix
        for k in (1, 7, 32):
            w = ck.weights[k - 1, :k]
            assert ck.bracket[k] == pytest.approx(w @ c[:k, :k] @ w, rel=1e-11)

    def test_bracket_refinement_is_cauchy(self, kernel_factory):
        # self-convergence of <M>_T under grid refinement, first order
        values = [kernel_factory(1.0, n, 0.7).bracket[-1] for n in (64, 128, 256)]
        gap_coarse = abs(values[1] - values[0])
        gap_fine = abs(values[2] - values[1])
        assert gap_fine < gap_coarse

    def test_psi_slope_product_is_one(self, kernel_factory):
        for h in (0.3, 0.7):
            ck = kernel_factory(1.0, 64, h)
            assert np.abs(ck.inv_bracket_slope * ck.bracket_slope - 1.0).max() < 1e-12

    def test_weight_rows_are_reversal_symmetric(self, kernel_factory):
        # g(s, t) = g(t - s, t): rows of the weight array read the same reversed
        ck = kernel_factory(1.0, 32, 0.7)
        for k in (4, 17, 32):
            row = ck.weights[k - 1, :k]
            assert np.abs(row - row[::-1]).max() < 1e-12

    def test_martingale_variance_matches_bracket(self, kernel_factory):
        # Var M_T = <M>_T, Monte Carlo over seeded noise paths
        ck = kernel_factory(1.0, 64, 0.7)
        cov = ck.cov
        reps = 3000
        finals = np.empty(reps)
        for r in range(reps):
            v = simulate_noise(cov, path_rng(17, r))
            finals[r] = martingale_transform(ck, v)[-1]
        target = ck.bracket[-1]
        assert abs(finals.var(ddof=1) - target) < 5 * target * np.sqrt(2.0 / reps)

    def test_rejects_tiny_grids(self):
        with pytest.raises(ValueError):
            make_kernel(1.0, 3, 0.7)

    def test_interpolant_rejects_out_of_range(self, kernel_factory):
        ck = kernel_factory(1.0, 16, 0.7)
        interp = ck.inv_slope_interpolant()
        assert interp(0.5) == pytest.approx(np.interp(0.5, ck.grid.times, ck.inv_bracket_slope))
        with pytest.raises(ValueError):
            interp(1.5)


class TestBracketIdentity:
    """<M>_t + 2h <N>_t = t; exact for the discrete projection."""

    def test_brownian_case_exact(self, kernel_factory):
        res = bracket_identity_residual(kernel_factory(1.0, 32, 0.5))
        assert np.abs(res).max() < 1e-12

    @pytest.mark.parametrize("h", [0.3, 0.7])
    def test_residual_at_machine_precision(self, kernel_factory, h):
        for n in (64, 256):
            res = bracket_identity_residual(kernel_factory(1.0, n, h))
            assert res[0] == 0.0
            assert np.abs(res).max() < 1e-10


class TestNystromKernel:
    def test_near_brownian_limit(self):
        nk = nystrom_kernel(1.0, 0.501, 256)
        assert np.abs(nk.values - 0.5).max() / 0.5 < 0.01

    def test_solution_symmetric_about_midpoint(self):
        nk = nystrom_kernel(1.0, 0.7, 256)
        assert np.abs(nk.values - nk.values[::-1]).max() < 1e-12

    def test_diagonal_positive_and_interpolation_consistent(self):
        nk = nystrom_kernel(2.0, 0.7, 128)
        assert np.all(nk.values > 0)
        # Nystrom interpolation reproduces the nodal values
        assert np.allclose(nk.interpolate(nk.nodes), nk.values, atol=1e-10)

    def test_rejects_low_hurst(self):
        with pytest.raises(ValueError):
            nystrom_kernel(1.0, 0.5, 64)
        with pytest.raises(ValueError):
            nystrom_kernel(1.0, 0.3, 64)

    @pytest.mark.parametrize("h", [0.6, 0.7, 0.8])
    def test_cross_method_diagonal_agreement(self, kernel_factory, h):
        # projection w_n vs Nystrom value at the same cell midpoint: <= 5% at
        # n = 512 and shrinking monotonically under refinement
        gaps = []
        for n in (128, 256, 512):
            ck = kernel_factory(1.0, n, h)
            nk = nystrom_kernel(1.0, h, n)
            gaps.append(abs(ck.weights[-1, -1] - nk.values[-1]) / nk.values[-1])
        assert gaps[2] < 0.05
        assert gaps[0] > gaps[1] > gaps[2]

    def test_cross_method_whole_curve(self, kernel_factory):
        ck = kernel_factory(1.0, 256, 0.7)
        nk = nystrom_kernel(1.0, 0.7, 256)
        rel = np.abs(ck.weights[-1] - nk.values) / nk.values
        assert np.median(rel) < 1e-3
        assert rel.max() < 0.05


class TestInverseKernel:
    def test_brownian_reconstruction_is_doubling(self, kernel_factory):
        ck = kernel_factory(1.0, 32, 0.5)
        ik = inverse_kernel(ck)
        tri = np.tril_indices(32)
        assert np.abs(ik.weights[tri] - 2.0).max() < 1e-10
        v = simulate_noise(ck.cov, path_rng(2, 0))
        m = martingale_transform(ck, v)
        assert np.abs(2.0 * m - v).max() < 1e-12

    @pytest.mark.parametrize("h", [0.3, 0.7])
    def test_roundtrip_reconstruction(self, kernel_factory, h):
        # spec bound is 1e-2 * max |V|; the discrete inverse is exact, so the
        # error sits at roundoff
        ck = kernel_factory(1.0, 256, h)
        ik = inverse_kernel(ck)
        v = simulate_noise(ck.cov, path_rng(5, 0))
        m = martingale_transform(ck, v)
        err = np.abs(ik.reconstruct(np.diff(m)) - v).max()
        assert err <= 1e-2 * np.abs(v).max()
        assert err <= 1e-9 * np.abs(v).max()

    def test_matches_conditional_expectation_inverse(self, kernel_factory):
        # independent oracle: gtilde[k, j] = Cov(V_k, dM_j) / Var(dM_j)
        ck = kernel_factory(1.0, 64, 0.7)
        n = ck.grid.n
        ik = inverse_kernel(ck)
        w = ck.weights
        dw = np.vstack([w[0], np.diff(w, axis=0)])
        cov_v = np.cumsum(ck.cov.matrix, axis=0)
        beta = (cov_v @ dw.T) / np.diff(ck.bracket)[None, :]
        tri = np.tril_indices(n)
        assert np.abs(ik.weights[tri] - beta[tri]).max() < 1e-9

    def test_reconstruct_validates_length(self, kernel_factory):
        ck = kernel_factory(1.0, 16, 0.7)
        with pytest.raises(ValueError):
            inverse_kernel(ck).reconstruct(np.zeros(15))


class TestPsiAsymptotics:
    def test_growth_for_long_memory(self, kernel_factory):
        # psi(T, T) ~ T^(2h-1) for h > 1/2: increasing at long horizons
        ck = kernel_factory(50.0, 400, 0.7)
        psi = ck.inv_bracket_slope
        k10 = int(round(10.0 / ck.grid.dt))
        assert psi[-1] > psi[k10] > psi[0]

    def test_flattening_for_short_memory(self, kernel_factory):
        # psi(T, T) -> const for h < 1/2
        ck = kernel_factory(50.0, 400, 0.3)
        psi = ck.inv_bracket_slope
        k10 = int(round(10.0 / ck.grid.dt))
        k25 = int(round(25.0 / ck.grid.dt))
        late_drift = abs(psi[-1] - psi[k25]) / psi[-1]
        early_drift = abs(psi[k25] - psi[k10]) / psi[-1]
        assert late_drift < early_drift
        assert late_drift < 0.05
