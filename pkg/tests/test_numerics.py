"""Special-function kernel tests.

Independent oracles: scipy.special.hyp2f1 and scipy.integrate.quad check the
hand-rolled hypergeometric series and the panel quadrature; a direct sampling
experiment checks the received-power Pareto law.
"""

import math

import numpy as np
import pytest
import scipy.integrate
import scipy.special

from sicnet.errors import DomainError, NumericsError
from sicnet.numerics import (
    DEFAULT_QUADRATURE,
    QuadratureSettings,
    adaptive_gauss,
    c_integral,
    c_integral_quadrature,
    gauss_2f1,
    pareto_received_power_cdf,
)

B_GRID = (0.0, 0.01, 0.1, 1.0, 10.0, 100.0)
ALPHA_GRID = (2.5, 3.0, 3.5, 4.0, 5.0, 6.0)
TIGHT = QuadratureSettings(rel_tol=1e-12, abs_tol=1e-15, max_subdivisions=4000)


class TestQuadratureSettings:
    def test_defaults(self):
        assert DEFAULT_QUADRATURE.rel_tol == 1e-10
        assert DEFAULT_QUADRATURE.abs_tol == 1e-12

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"rel_tol": 0.0},
            {"rel_tol": -1e-3},
            {"abs_tol": 0.0},
            {"abs_tol": math.nan},
            {"max_subdivisions": 0},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(DomainError):
            QuadratureSettings(**kwargs)


class TestAdaptiveGauss:
    def test_sine(self):
        assert adaptive_gauss(np.sin, 0.0, math.pi) == pytest.approx(2.0, abs=1e-12)

    def test_empty_interval(self):
        assert adaptive_gauss(np.sin, 1.0, 1.0) == 0.0

    def test_budget_exhaustion(self):
        starved = QuadratureSettings(rel_tol=1e-14, abs_tol=1e-16, max_subdivisions=3)
        with pytest.raises(NumericsError):
            adaptive_gauss(lambda x: 1.0 / (1e-6 + x**2), 0.0, 100.0, starved)

    def test_nonfinite_bounds(self):
        with pytest.raises(DomainError):
            adaptive_gauss(np.sin, 0.0, math.inf)


class TestGauss2F1:
    def test_z_zero_is_one(self):
        assert gauss_2f1(0.7, 1.3, 2.1, 0.0) == 1.0

    def test_arctan_identity(self):
        # 2F1(1, 1/2; 3/2; -x^2) = arctan(x)/x at x = 1
        assert gauss_2f1(1.0, 0.5, 1.5, -1.0) == pytest.approx(math.pi / 4, rel=1e-13)

    def test_against_scipy_grid(self):
        for a in (0.3, 1.0, 2.25):
            for b in (0.4, 0.9, 1.7):
                for c in (1.2, 2.8):
                    for z in (-0.25, -1.0, -7.0, -300.0, -1e4):
                        ref = float(scipy.special.hyp2f1(a, b, c, z))
                        assert gauss_2f1(a, b, c, z) == pytest.approx(ref, rel=5e-13)

    def test_degenerate_connection_parameters(self):
        # c - a a non-positive integer breaks the 1/z connection formula
        # (scipy returns +-inf here); the slow Pfaff fallback must cover it
        mpmath = pytest.importorskip("mpmath")
        for z in (-7.0, -300.0):
            ref = float(mpmath.hyp2f1(2.2, 0.4, 1.2, z))
            assert gauss_2f1(2.2, 0.4, 1.2, z) == pytest.approx(ref, rel=1e-10)

    def test_c_family_large_z(self):
        # the parameters the interference integral uses, out to |z| = 1e6
        for alpha in ALPHA_GRID:
            a, b, c = 1.0, 2.0 / alpha, (2.0 + alpha) / alpha
            for z in (-1.0, -100.0, -1e6):
                ref = float(scipy.special.hyp2f1(a, b, c, z))
                assert gauss_2f1(a, b, c, z) == pytest.approx(ref, rel=1e-12)

    def test_terminating_series(self):
        # a = -2 terminates: 2F1(-2, b; c; z) is a quadratic polynomial
        b, c, z = 0.7, 1.9, -5.0
        expected = 1.0 + (-2 * b / c) * z + ((-2) * (-1) * b * (b + 1)) / (
            c * (c + 1) * 2
        ) * z**2
        assert gauss_2f1(-2.0, b, c, z) == pytest.approx(expected, rel=1e-13)

    @pytest.mark.parametrize(
        "args",
        [
            (1.0, 0.5, 0.0, -1.0),    # c is a non-positive integer
            (1.0, 0.5, -3.0, -1.0),
            (1.0, 0.5, 1.5, 0.5),     # z > 0 unsupported
            (math.nan, 0.5, 1.5, -1.0),
        ],
    )
    def test_domain_errors(self, args):
        with pytest.raises(DomainError):
            gauss_2f1(*args)


class TestCIntegral:
    def test_b_zero_closed_form(self):
        for alpha in ALPHA_GRID:
            x = 2.0 * math.pi / alpha
            assert c_integral(0.0, alpha) == pytest.approx(x / math.sin(x), rel=1e-14)

    def test_alpha_four_is_arctan(self):
        assert c_integral(0.0, 4.0) == pytest.approx(math.pi / 2, rel=1e-14)
        assert c_integral(1.0, 4.0) == pytest.approx(math.pi / 4, rel=1e-12)
        for b in (0.01, 0.1, 1.0, 10.0, 100.0, 1e6):
            assert c_integral(b, 4.0) == pytest.approx(math.atan(1.0 / b), abs=1e-12)

    def test_scipy_quadrature_oracle(self):
        # independent oracle: QUADPACK on the raw integrand
        for b, alpha in ((2.0, 3.0), (0.5, 2.5), (10.0, 5.0)):
            ref, err = scipy.integrate.quad(
                lambda w: 1.0 / (1.0 + w ** (alpha / 2.0)), b, np.inf,
                epsabs=1e-13, epsrel=1e-12,
            )
            assert err < 1e-9
            assert c_integral(b, alpha) == pytest.approx(ref, rel=1e-9)

    def test_closed_form_vs_own_quadrature_grid(self):
        for b in B_GRID:
            for alpha in ALPHA_GRID:
                cf = c_integral(b, alpha)
                qd = c_integral_quadrature(b, alpha, TIGHT)
                assert cf == pytest.approx(qd, rel=1e-9), (b, alpha)

    def test_strictly_decreasing_in_b(self):
        delta = 1e-4
        for b in B_GRID:
            for alpha in ALPHA_GRID:
                assert c_integral(b + delta, alpha) < c_integral(b, alpha)

    def test_positive_and_vanishing(self):
        assert all(
            c_integral(b, a) > 0.0 for b in B_GRID for a in ALPHA_GRID
        )
        assert c_integral(1e6, 4.0) < 1e-5

    @pytest.mark.parametrize(
        "args", [(1.0, 2.0), (1.0, 1.5), (-0.5, 4.0), (math.inf, 4.0), (1.0, math.nan)]
    )
    def test_domain_errors(self, args):
        with pytest.raises(DomainError):
            c_integral(*args)
        with pytest.raises(DomainError):
            c_integral_quadrature(*args)


class TestParetoReceivedPowerCdf:
    def test_limits(self):
        assert pareto_received_power_cdf(math.inf, 4.0, 10.0) == 1.0
        assert pareto_received_power_cdf(1e12, 4.0, 10.0) == pytest.approx(1.0, abs=1e-5)

    def test_root(self):
        # the expression crosses zero at y* = (Gamma(2/a+1)/R^2)^(a/2)
        y_star = (math.gamma(1.5) / 1.0) ** 2.0
        assert pareto_received_power_cdf(y_star, 4.0, 1.0) == pytest.approx(0.0, abs=1e-12)
        assert pareto_received_power_cdf(y_star / 2.0, 4.0, 1.0) == 0.0

    def test_monotone(self):
        ys = np.logspace(-4, 4, 200)
        cdf = pareto_received_power_cdf(ys, 4.0, 10.0)
        assert np.all(np.diff(cdf) >= 0.0)

    def test_sampling_oracle(self):
        # Y = h X^-4 with X uniform-in-disk (R = 10) and h ~ Exp(1); the
        # closed form should match the empirical CDF in the tail region
        rng = np.random.default_rng(1234)
        n = 1_000_000
        x = 10.0 * np.sqrt(rng.random(n))
        y = rng.exponential(size=n) * x**-4.0
        y_grid = np.logspace(-2, 2, 60)
        emp = np.searchsorted(np.sort(y), y_grid, side="right") / n
        ana = pareto_received_power_cdf(y_grid, 4.0, 10.0)
        assert float(np.max(np.abs(emp - ana))) <= 0.01

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            pareto_received_power_cdf(1.0, 2.0, 10.0)
        with pytest.raises(DomainError):
            pareto_received_power_cdf(1.0, 4.0, 0.0)
