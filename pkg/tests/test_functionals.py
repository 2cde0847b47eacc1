import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from flradapt import functionals
from flradapt.functionals import (
    Custom,
    DerivativeEval,
    LocalAverage,
    PointEval,
    basis_values,
    coefficients,
    gram,
)

SQRT2 = math.sqrt(2.0)


def psi(j, t):
    """Independent scalar evaluation of the j-th basis function."""
    if j == 1:
        return 1.0
    k = j // 2
    if j % 2 == 0:
        return SQRT2 * math.cos(2 * math.pi * k * t)
    return SQRT2 * math.sin(2 * math.pi * k * t)


class TestCoefficientValues:
    def test_point_eval_at_zero(self):
        np.testing.assert_allclose(
            coefficients(PointEval(t0=0.0), 5),
            [1.0, SQRT2, 0.0, SQRT2, 0.0],
            atol=1e-15,
        )

    def test_point_eval_matches_basis(self):
        np.testing.assert_array_equal(
            coefficients(PointEval(t0=0.37), 9), basis_values(0.37, 9)
        )

    def test_full_interval_average_first_coefficient(self):
        assert coefficients(LocalAverage(b=1.0), 1)[0] == 1.0

    def test_full_interval_average_kills_oscillations(self):
        np.testing.assert_allclose(
            coefficients(LocalAverage(b=1.0), 3), [1.0, 0.0, 0.0], atol=1e-15
        )

    def test_first_derivative_at_zero(self):
        np.testing.assert_allclose(
            coefficients(DerivativeEval(t0=0.0, q=1), 5),
            [0.0, 0.0, 2 * SQRT2 * math.pi, 0.0, 4 * SQRT2 * math.pi],
            atol=1e-13,
        )

    def test_zeroth_derivative_is_point_eval(self):
        np.testing.assert_array_equal(
            coefficients(DerivativeEval(t0=0.42, q=0), 7),
            coefficients(PointEval(t0=0.42), 7),
        )

    def test_custom_padding_and_truncation(self):
        spec = Custom(coeffs=(1.0, -2.0, 3.0))
        np.testing.assert_array_equal(coefficients(spec, 2), [1.0, -2.0])
        np.testing.assert_array_equal(coefficients(spec, 5), [1.0, -2.0, 3.0, 0.0, 0.0])

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            coefficients(PointEval(t0=0.5), 0)
        with pytest.raises(ValueError):
            PointEval(t0=1.5)
        with pytest.raises(ValueError):
            PointEval(t0=float("nan"))
        with pytest.raises(ValueError):
            LocalAverage(b=0.0)
        with pytest.raises(ValueError):
            LocalAverage(b=float("nan"))
        with pytest.raises(ValueError):
            DerivativeEval(t0=0.5, q=-1)
        with pytest.raises(ValueError):
            Custom(coeffs=(1.0, float("inf")))


class TestGram:
    def test_point_eval_at_zero(self):
        assert gram(PointEval(t0=0.0), 2) == pytest.approx(3.0, rel=1e-15)

    def test_full_interval_average(self):
        assert gram(LocalAverage(b=1.0), 3) == pytest.approx(1.0, rel=1e-15)

    @given(st.integers(min_value=1, max_value=60),
           st.floats(min_value=0.0, max_value=1.0))
    @settings(max_examples=50, deadline=None)
    def test_monotone_in_dimension(self, m, t0):
        spec = PointEval(t0=t0)
        assert gram(spec, m + 1) >= gram(spec, m)

    def test_prefix_matches_scalar(self):
        spec = LocalAverage(b=0.3)
        prefix = functionals.gram_prefix(spec, 12)
        assert prefix[11] == pytest.approx(gram(spec, 12), rel=1e-14)
        assert np.all(np.diff(prefix) >= 0)


class TestQuadratureCrossCheck:
    # full-depth check (j <= 200, all four window widths) lives in acceptance
    @pytest.mark.parametrize("b", [0.25, 1.0])
    def test_local_average_against_quadrature(self, b):
        spec = LocalAverage(b=b)
        coeff = coefficients(spec, 40)
        for j in range(1, 41):
            val, _ = quad(lambda t: psi(j, t), 0.0, b,
                          epsabs=1e-13, epsrel=1e-13, limit=400)
            assert abs(coeff[j - 1] - val / b) < 1e-10


class TestFiniteDifferenceCrossCheck:
    @pytest.mark.parametrize("q", [1, 2])
    def test_derivative_against_central_differences(self, q):
        t0, h = 1 / math.pi, 1e-5
        spec = DerivativeEval(t0=t0, q=q)
        coeff = coefficients(spec, 30)
        for j in range(1, 31):
            if q == 1:
                fd = (psi(j, t0 + h) - psi(j, t0 - h)) / (2 * h)
            else:
                fd = (psi(j, t0 + h) - 2 * psi(j, t0) + psi(j, t0 - h)) / h ** 2
            denom = max(abs(coeff[j - 1]), abs(fd))
            if denom > 0:
                assert abs(coeff[j - 1] - fd) <= 1e-4 * denom


class TestReconstruction:
    """coefficients(spec, m) . c must equal the functional applied to the
    finite expansion sum_j c_j psi_j, evaluated by independent means."""

    def setup_method(self):
        rng = np.random.default_rng(99)
        self.m = 17
        self.c = rng.uniform(-2, 2, self.m)

    def h(self, t):
        return sum(self.c[j - 1] * psi(j, t) for j in range(1, self.m + 1))

    def test_point_value(self):
        spec = PointEval(t0=0.61)
        lhs = float(coefficients(spec, self.m) @ self.c)
        assert abs(lhs - self.h(0.61)) < 1e-10

    def test_average_value(self):
        spec = LocalAverage(b=0.45)
        lhs = float(coefficients(spec, self.m) @ self.c)
        val, _ = quad(self.h, 0.0, 0.45, epsabs=1e-13, epsrel=1e-13, limit=400)
        assert abs(lhs - val / 0.45) < 1e-10

    def test_derivative_value(self):
        spec = DerivativeEval(t0=0.61, q=1)
        lhs = float(coefficients(spec, self.m) @ self.c)
        h = 1e-6
        fd = (self.h(0.61 + h) - self.h(0.61 - h)) / (2 * h)
        assert abs(lhs - fd) < 1e-4 * max(1.0, abs(fd))


@pytest.mark.parametrize(
    "spec", [PointEval(t0=0.3), DerivativeEval(t0=0.3, q=1), LocalAverage(b=0.4)]
)
def test_mean_square_density_tracks_average_mass(spec):
    # the density describes oscillation-averaged squared coefficients; its
    # windowed mean must track the actual windowed mean closely
    amp, power = functionals.mean_square_density(spec)
    coeff = coefficients(spec, 4001)
    j = np.arange(1, 4002)
    window = slice(2000, 4001)
    actual = float(np.mean(coeff[window] ** 2))
    predicted = float(np.mean(amp * j[window] ** (2 * power)))
    assert 0.7 * predicted <= actual <= 1.4 * predicted
