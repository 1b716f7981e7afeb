"""Tests for partition-function estimation and RLCT regression."""

import math

import numpy as np
import pytest

from singular_bound.errors import ConstraintError, DiagnosticError
from singular_bound.partition import (PartitionEstimate, fit_rlct_from_partition,
                                      monomial_risk, neg_log_z_quadrature,
                                      quadratic_schedule, state_density_lower_bound,
                                      thermo_integration_neg_log_z,
                                      write_partition_csv)

E = math.e


class TestQuadrature:
    def test_unit_integrand(self):
        est = neg_log_z_quadrature(lambda p: np.zeros(len(p)), (0, 0), beta=1.0, n=7.0)
        assert est.neg_log_z == pytest.approx(0.0, abs=1e-12)
        assert est.method == "quadrature" and est.std_err == 0.0

    def test_gaussian_erf_oracle(self):
        # integral of exp(-4 x^2) on [0, 1] is (sqrt(pi)/4) erf(2)
        est = neg_log_z_quadrature(monomial_risk([1]), (0,), beta=1.0, n=4.0)
        expected = -math.log(math.sqrt(math.pi) / 4 * math.erf(2.0))
        assert est.neg_log_z == pytest.approx(expected, abs=1e-9)
        assert expected == pytest.approx(0.8186181280168195, abs=1e-12)

    def test_weighted_substitution_oracle(self):
        # integral of exp(-n x^2) x dx = (1 - exp(-n)) / (2 n) at n = e
        est = neg_log_z_quadrature(monomial_risk([1]), (1,), beta=1.0, n=E)
        z = (1 - math.exp(-E)) / (2 * E)
        assert z == pytest.approx(0.1718018997103338, abs=1e-12)
        assert est.neg_log_z == pytest.approx(-math.log(z), abs=1e-9)

    def test_two_dimensional_factorizes(self):
        # exp(-n (x^2 + y^2)) factorizes into two 1-d Gaussian integrals
        est = neg_log_z_quadrature(lambda p: p[:, 0] ** 2 + p[:, 1] ** 2, (0, 0),
                                   beta=1.0, n=4.0)
        one_dim = math.sqrt(math.pi) / 4 * math.erf(2.0)
        assert est.neg_log_z == pytest.approx(-2 * math.log(one_dim), abs=1e-8)

    def test_three_dimensional_cross_terms(self):
        est = neg_log_z_quadrature(monomial_risk([1, 1, 0]), (0, 0, 1), beta=1.0,
                                   n=3.0, points_per_axis=64)
        # weight z integrates to 1/2; exp(-3 x^2 y^2) needs the grid
        est2 = neg_log_z_quadrature(monomial_risk([1, 1]), (0, 0), beta=1.0, n=3.0)
        assert est.neg_log_z == pytest.approx(est2.neg_log_z + math.log(2.0), abs=1e-6)

    def test_dimension_cap(self):
        with pytest.raises(ConstraintError):
            neg_log_z_quadrature(lambda p: np.zeros(len(p)), (0, 0, 0, 0), beta=1.0, n=2.0)

    def test_points_floor(self):
        with pytest.raises(ConstraintError):
            neg_log_z_quadrature(monomial_risk([1]), (0,), beta=1.0, n=2.0,
                                 points_per_axis=32)

    def test_nonfinite_integrand(self):
        def bad(p):
            v = np.zeros(len(p))
            v[0] = np.inf
            return v

        with pytest.raises(DiagnosticError):
            neg_log_z_quadrature(bad, (0,), beta=1.0, n=2.0)


class TestStateDensityLowerBound:
    def test_linear_weight_case(self):
        # k=1, h=1 (lambda = 1, m = 1), beta = 1, n = e
        bound = state_density_lower_bound((1,), (1,), beta=1.0, n=E)
        assert bound == pytest.approx(1 / (2 * E * E), rel=1e-12)
        z = (1 - math.exp(-E)) / (2 * E)
        assert bound <= z

    def test_flat_weight_case(self):
        bound = state_density_lower_bound((1,), (0,), beta=1.0, n=4.0)
        assert bound == pytest.approx(1 / (2 * E), rel=1e-12)
        z = math.sqrt(math.pi) / 4 * math.erf(2.0)
        assert bound <= z

    def test_multiplicity_two(self):
        bound = state_density_lower_bound((1, 1), (0, 0), beta=1.0, n=E ** 2)
        assert bound == pytest.approx(1 / E ** 2, rel=1e-12)
        est = neg_log_z_quadrature(monomial_risk([1, 1]), (0, 0), beta=1.0, n=E ** 2)
        assert bound <= math.exp(-est.neg_log_z)

    def test_extra_block_factor(self):
        base = state_density_lower_bound((1,), (0,), beta=1.0, n=4.0)
        with_extra = state_density_lower_bound((1,), (0,), (1,), (3,), beta=1.0, n=4.0)
        assert with_extra == pytest.approx(base / 4.0, rel=1e-12)

    def test_unequal_ratios_rejected(self):
        with pytest.raises(ConstraintError):
            state_density_lower_bound((1, 1), (0, 1), beta=1.0, n=4.0)

    def test_extra_not_above_rejected(self):
        # (h'+1)/(2k') = 1/2 equals lambda, not strictly above
        with pytest.raises(ConstraintError):
            state_density_lower_bound((1,), (0,), (1,), (0,), beta=1.0, n=4.0)

    def test_small_n_rejected(self):
        with pytest.raises(ConstraintError):
            state_density_lower_bound((1,), (0,), beta=1.0, n=1.0)


class TestThermoIntegration:
    def test_zero_risk(self):
        est = thermo_integration_neg_log_z(lambda th: 0.0, [0.0], [1.0],
                                           beta=1.0, n=10.0, seed=2)
        assert est.neg_log_z == 0.0 and est.std_err == 0.0
        assert est.method == "thermo"

    def test_matches_quadrature_one_dim(self):
        quad = neg_log_z_quadrature(monomial_risk([1]), (0,), beta=1.0, n=4.0)
        ti = thermo_integration_neg_log_z(lambda th: float(th[0] ** 2), [0.0], [1.0],
                                          beta=1.0, n=4.0, seed=11)
        assert abs(ti.neg_log_z - quad.neg_log_z) <= 3 * ti.std_err

    def test_matches_quadrature_two_dim(self):
        quad = neg_log_z_quadrature(monomial_risk([1, 1]), (0, 0), beta=1.0, n=9.0)
        ti = thermo_integration_neg_log_z(
            lambda th: float(th[0] ** 2 * th[1] ** 2), [0.0, 0.0], [1.0, 1.0],
            beta=1.0, n=9.0, seed=13)
        assert abs(ti.neg_log_z - quad.neg_log_z) <= 3 * ti.std_err

    def test_monotone_in_n(self):
        a = thermo_integration_neg_log_z(lambda th: float(th[0] ** 2), [0.0], [1.0],
                                         beta=1.0, n=100.0, seed=4)
        b = thermo_integration_neg_log_z(lambda th: float(th[0] ** 2), [0.0], [1.0],
                                         beta=1.0, n=1000.0, seed=4)
        assert a.neg_log_z < b.neg_log_z

    def test_schedule_validation(self):
        with pytest.raises(ConstraintError):
            thermo_integration_neg_log_z(lambda th: 0.0, [0.0], [1.0], beta=1.0,
                                         n=10.0, schedule=[0.0, 0.5, 1.0], seed=0)
        with pytest.raises(ConstraintError):
            quadratic_schedule(4)

    def test_small_steps_high_acceptance_is_flagged(self):
        # a microscopic proposal scale cannot be rescued by burn-in adaptation;
        # the resulting accept-everything crawl is a diagnostic failure
        with pytest.raises(DiagnosticError, match="acceptance"):
            thermo_integration_neg_log_z(
                lambda th: float(th[0] ** 2), [0.0], [1.0], beta=1.0, n=50.0,
                seed=3, base_scale=1e-8)

    def test_chain_floor_validation(self):
        with pytest.raises(ConstraintError):
            thermo_integration_neg_log_z(lambda th: 0.0, [0.0], [1.0], beta=1.0,
                                         n=10.0, chain_length=900, burn_in=100, seed=0)


class TestRlctFit:
    def test_exact_linear_recovery(self):
        ests = [PartitionEstimate(n, 1.0, 2.0 * math.log(n) + 5.0, 0.0, "quadrature")
                for n in (10.0, 100.0, 1000.0)]
        fit = fit_rlct_from_partition(ests)
        assert fit.lambda_hat == pytest.approx(2.0, abs=1e-10)
        assert fit.intercept == pytest.approx(5.0, abs=1e-9)
        assert fit.residual_rms == pytest.approx(0.0, abs=1e-10)

    def test_exact_loglog_recovery(self):
        ests = [PartitionEstimate(n, 1.0,
                                  1.5 * math.log(n) - math.log(math.log(n)) + 3.0,
                                  0.0, "quadrature")
                for n in (10.0, 50.0, 400.0, 3000.0)]
        fit = fit_rlct_from_partition(ests, include_loglog=True)
        assert fit.lambda_hat == pytest.approx(1.5, abs=1e-9)
        assert fit.loglog_coef == pytest.approx(1.0, abs=1e-8)
        assert fit.intercept == pytest.approx(3.0, abs=1e-8)

    def test_quadrature_slope_linear_weight(self):
        # risk x^2 with weight x has lambda = (1+1)/2 = 1
        ests = [neg_log_z_quadrature(monomial_risk([1]), (1,), beta=1.0, n=E ** k)
                for k in range(2, 9)]
        fit = fit_rlct_from_partition(ests)
        assert abs(fit.lambda_hat - 1.0) <= 0.03

    def test_order_invariance(self):
        ests = [PartitionEstimate(n, 1.0, 1.2 * math.log(n) + 0.3, 0.1, "thermo")
                for n in (10.0, 100.0, 1000.0, 5000.0)]
        a = fit_rlct_from_partition(ests)
        b = fit_rlct_from_partition(list(reversed(ests)))
        assert a.lambda_hat == pytest.approx(b.lambda_hat, rel=1e-12)

    def test_duplicate_n_rejected(self):
        ests = [PartitionEstimate(10.0, 1.0, 1.0, 0.0, "quadrature")] * 3
        with pytest.raises(ConstraintError):
            fit_rlct_from_partition(ests)

    def test_small_n_rejected(self):
        ests = [PartitionEstimate(n, 1.0, 1.0, 0.0, "quadrature")
                for n in (2.0, 10.0, 100.0)]
        with pytest.raises(ConstraintError):
            fit_rlct_from_partition(ests)

    def test_one_dim_drift_is_bounded(self):
        # for simple poles, -log Z minus lambda log n settles to a constant;
        # over the grid the excursion around the midpoint stays within 0.2
        for k, h in ((1, 0), (1, 1), (2, 1)):
            lam = (h + 1) / (2 * k)
            drift = []
            for j in range(2, 9):
                est = neg_log_z_quadrature(monomial_risk((k,)), (h,), beta=1.0,
                                           n=E ** j)
                drift.append(est.neg_log_z - lam * j)
            mid = (max(drift) + min(drift)) / 2
            assert max(abs(d - mid) for d in drift) <= 0.2

    def test_weighted_fit_uses_errors(self):
        # one wild low-precision point should barely move a weighted fit
        good = [PartitionEstimate(n, 1.0, 2.0 * math.log(n), 0.01, "thermo")
                for n in (10.0, 100.0, 1000.0)]
        wild = [PartitionEstimate(5000.0, 1.0, 2.0 * math.log(5000.0) + 3.0, 10.0,
                                  "thermo")]
        fit = fit_rlct_from_partition(good + wild)
        assert abs(fit.lambda_hat - 2.0) < 0.05


class TestSerialization:
    def test_partition_csv(self, tmp_path):
        ests = [PartitionEstimate(10.0, 1.0, 2.5, 0.0, "quadrature"),
                PartitionEstimate(100.0, 0.5, 5.0, 0.25, "thermo")]
        path = tmp_path / "z.csv"
        write_partition_csv(ests, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "n,beta,neg_log_z,std_err,method"
        assert lines[1].split(",")[-1] == "quadrature"

    def test_estimate_validation(self):
        with pytest.raises(ConstraintError):
            PartitionEstimate(10.0, 1.0, 1.0, 0.5, "quadrature")
        with pytest.raises(ConstraintError):
            PartitionEstimate(10.0, 1.0, math.nan, 0.0, "thermo")
