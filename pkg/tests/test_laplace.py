import numpy as np
import pytest

from mfou import (
    NumericalError,
    condition_diagnostics,
    logdet_laplace,
    montecarlo_laplace,
    riccati_laplace,
)
from mfou.laplace import _phi_pair_direct, _upsilon_pair_direct


class TestRiccatiLaplace:
    def test_mu_zero_is_exactly_one(self):
        report = riccati_laplace(0.0, -1.0, 2.0, 10.0, steps=500)
        assert report.l_numeric == 1.0

    def test_monotone_in_mu(self):
        values = [
            riccati_laplace(mu, -1.0, 2.0, 10.0, steps=2000).l_numeric
            for mu in (0.0, 0.5, 1.0, 2.0)
        ]
        assert all(a > b for a, b in zip(values, values[1:]))
        assert all(0.0 < v <= 1.0 for v in values)

    def test_approaches_stable_limit(self):
        # brownian-check mode, psi = 2: |L_T - e^{-mu/(2|theta|)}| shrinks in T
        limit = np.exp(-0.5)
        gaps = [
            abs(riccati_laplace(1.0, -1.0, 2.0, T, steps=int(200 * T)).l_numeric - limit)
            for T in (10.0, 25.0, 50.0)
        ]
        assert gaps[0] > gaps[1] > gaps[2]
        assert gaps[2] < 0.01

    def test_gamma_stays_symmetric(self):
        report = riccati_laplace(1.0, -1.0, 2.0, 25.0, steps=5000)
        assert report.max_asymmetry < 1e-9

    def test_gamma_positive_semidefinite(self):
        report = riccati_laplace(1.0, -1.0, 2.0, 25.0, steps=5000)
        sym = 0.5 * (report.gamma_final + report.gamma_final.T)
        assert np.linalg.eigvalsh(sym).min() > -1e-12

    def test_limit_gap_shrinks_like_one_over_horizon(self):
        # log L_T + mu/(2|theta|) -> 0 at rate O(1/T): halving ratios near 2
        limit = -0.5
        gaps = [
            abs(np.log(riccati_laplace(1.0, -1.0, 2.0, T, steps=int(200 * T)).l_numeric)
                - limit)
            for T in (25.0, 50.0, 100.0)
        ]
        for coarse, fine in zip(gaps, gaps[1:]):
            assert 1.6 < coarse / fine < 2.5

    def test_kernel_sourced_psi(self, kernel_factory):
        ck = kernel_factory(10.0, 400, 0.7)
        report = riccati_laplace(1.0, -1.0, ck, 10.0)
        assert 0.0 < report.l_numeric < 1.0
        # horizon beyond the kernel grid must be rejected
        with pytest.raises(ValueError):
            riccati_laplace(1.0, -1.0, ck, 20.0)

    def test_validation(self):
        with pytest.raises(ValueError):
            riccati_laplace(-1.0, -1.0, 2.0, 10.0)
        with pytest.raises(ValueError):
            riccati_laplace(1.0, 0.5, 2.0, 10.0)
        with pytest.raises(NumericalError):
            riccati_laplace(1.0, -1.0, lambda t: -1.0, 10.0, steps=100)


class TestLogdetRoute:
    def test_two_route_identity_brownian(self):
        for horizon in (5.0, 10.0, 20.0):
            ric = riccati_laplace(1.0, -1.0, 2.0, horizon, steps=int(400 * horizon))
            log_det = logdet_laplace(1.0, -1.0, 2.0, horizon, steps=int(400 * horizon))
            assert abs(log_det.log_l - np.log(ric.l_numeric)) < 1e-6

    def test_two_route_identity_fractional(self, kernel_factory):
        ck = kernel_factory(20.0, 800, 0.7)
        for horizon in (10.0, 20.0):
            ric = riccati_laplace(1.0, -1.0, ck, horizon)
            log_det = logdet_laplace(1.0, -1.0, ck, horizon)
            assert abs(log_det.log_l - np.log(ric.l_numeric)) < 1e-6

    def test_stable_at_long_horizons(self):
        # the raw fundamental-matrix route dies around T ~ 35 in fp64; the
        # diagonalized form must keep matching the Riccati route
        ric = riccati_laplace(1.0, -1.0, 2.0, 100.0, steps=20000)
        log_det = logdet_laplace(1.0, -1.0, 2.0, 100.0, steps=20000)
        assert abs(log_det.log_l - np.log(ric.l_numeric)) < 1e-8

    def test_mu_zero_closed_form(self):
        # mu = 0: log det Phi_1(T) = |theta| T exactly, so log L = 0
        report = logdet_laplace(0.0, -1.0, 2.0, 10.0, steps=500)
        assert abs(report.log_l) < 1e-12

    def test_upsilon_ratio_decays(self, kernel_factory):
        ck = kernel_factory(40.0, 1600, 0.7)
        norms = [
            logdet_laplace(1.0, -1.0, ck, T).upsilon_ratio_norm / T
            for T in (10.0, 20.0, 40.0)
        ]
        assert norms[0] > norms[1] > norms[2]

    def test_recombination_consistency(self):
        # Phi1 integrated directly must equal a+ Ups1 + a- Ups2; checks the
        # diagonalized initial conditions against Phi1(0) = I
        mu, theta, horizon, steps = 1.0, -1.0, 5.0, 4000
        lam = np.sqrt(0.25 * theta ** 2 + mu / (2 * horizon))
        a_plus, a_minus = 0.5 + lam, 0.5 - lam
        u1_0 = 0.5 / lam * np.eye(2)
        assert np.allclose(a_plus * u1_0 - a_minus * u1_0, np.eye(2), atol=1e-14)
        p1, _ = _phi_pair_direct(mu, theta, 2.0, horizon, steps)
        u1, u2 = _upsilon_pair_direct(mu, theta, 2.0, horizon, steps)
        recombined = a_plus * u1 + a_minus * u2
        assert np.abs(p1 - recombined).max() / np.abs(p1).max() < 1e-9


class TestMonteCarloLaplace:
    def test_mu_zero_exactly_one(self):
        mc = montecarlo_laplace(0.0, -1.0, 0.7, 5.0, 128, 16, seed=3)
        assert mc.mean == 1.0
        assert mc.standard_error == 0.0

    def test_matches_riccati_brownian(self):
        mc = montecarlo_laplace(1.0, -1.0, 0.5, 25.0, 1024, 200, seed=4)
        ric = riccati_laplace(1.0, -1.0, 2.0, 25.0, steps=10000)
        assert abs(mc.mean - ric.l_numeric) < 3 * mc.standard_error

    def test_parallel_matches_serial(self):
        serial = montecarlo_laplace(1.0, -1.0, 0.7, 5.0, 128, 16, seed=3)
        parallel = montecarlo_laplace(1.0, -1.0, 0.7, 5.0, 128, 16, seed=3, jobs=2)
        assert serial.mean == parallel.mean
        assert serial.standard_error == parallel.standard_error

    def test_validation(self):
        with pytest.raises(ValueError):
            montecarlo_laplace(-1.0, -1.0, 0.5, 5.0, 64, 10, seed=1)
        with pytest.raises(ValueError):
            montecarlo_laplace(1.0, -1.0, 0.5, 5.0, 64, 1, seed=1)


class TestConditionDiagnostics:
    def test_brownian_case_closed_forms(self, kernel_factory):
        # slope = 1/2 everywhere: integrand = 0, ratio = 2/t
        ck = kernel_factory(50.0, 200, 0.5)
        diag = condition_diagnostics(ck)
        assert np.abs(diag.integrand).max() < 1e-12
        assert diag.partial_integral[-1] < 1e-12
        assert np.allclose(diag.growth_ratio, 2.0 / diag.times, rtol=1e-8)

    @pytest.mark.parametrize("h", [0.3, 0.7])
    def test_ratio_decreases(self, kernel_factory, h):
        ck = kernel_factory(50.0, 200, h)
        diag = condition_diagnostics(ck)
        assert np.all(np.diff(diag.growth_ratio) < 1e-12)

    def test_partial_integral_flattens(self, kernel_factory):
        ck = kernel_factory(50.0, 200, 0.7)
        diag = condition_diagnostics(ck)
        mid = np.searchsorted(diag.times, 25.0)
        early = diag.partial_integral[mid] - diag.partial_integral[0]
        late = diag.partial_integral[-1] - diag.partial_integral[mid]
        assert late < 0.1 * early

    def test_requires_long_horizon(self, kernel_factory):
        with pytest.raises(ValueError):
            condition_diagnostics(kernel_factory(1.0, 16, 0.7), t_min=1.0)
