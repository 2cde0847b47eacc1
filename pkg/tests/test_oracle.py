import math

import numpy as np
import pytest

from flradapt import oracle, sequences, simulate
from flradapt.functionals import Custom, DerivativeEval, LocalAverage, PointEval
from flradapt.oracle import (
    RateDescriptor,
    check_link_bounds,
    minimax_dimension,
    rate_exponent,
    risk_curve,
    risk_term,
    theoretical_penalty,
)
from flradapt.sequences import Regime, SequenceModel
from flradapt.simulate import Covariance

PP = SequenceModel(regime=Regime.PP, p=1.0, a=1.0)
PE = SequenceModel(regime=Regime.PE, p=1.0, a=0.5)
EP = SequenceModel(regime=Regime.EP, p=0.5, a=1.0)

E1 = Custom(coeffs=(1.0,))


def brute_force_risk(model, spec, m, x, horizon=2_000_000):
    """Independent direct-summation evaluation of the risk functional."""
    from flradapt.functionals import coefficients

    ell = coefficients(spec, horizon)
    lb = sequences.log_beta_array(model, horizon)
    lg = sequences.log_gamma_array(model, horizon)
    with np.errstate(under="ignore", over="ignore", invalid="ignore"):
        tail = float(np.sum(np.where(ell == 0, 0, ell ** 2 * np.exp(-lb))[m:]))
        head = float(np.sum(np.where(ell == 0, 0, ell ** 2 * np.exp(-lg))[:m]))
    ratio = math.exp(lg[m - 1] - lb[m - 1])
    return max(tail, max(ratio, x) * head)


class TestRiskTerm:
    def test_unit_coordinate_at_full_accuracy(self):
        assert risk_term(PP, E1, 1, 1.0) == 1.0

    def test_supported_functional_has_zero_tail(self):
        spec = Custom(coeffs=(0.5, -0.5))
        x = 0.9
        got = risk_term(PP, spec, 2, x)
        head = 0.25 / 1.0 + 0.25 / 0.25
        ratio = (2.0 ** -2.0) / (2.0 ** 2.0)
        assert got == pytest.approx(max(ratio, x) * head, rel=1e-14)

    def test_tail_term_nonincreasing_in_m(self):
        spec = PointEval(t0=0.3)
        tails = [oracle.ell_weight_tail(PP, spec, m) for m in range(1, 30)]
        assert all(b <= a for a, b in zip(tails, tails[1:]))

    def test_matches_brute_force_summation(self):
        spec = PointEval(t0=0.3)
        for m in (1, 3, 7, 15):
            for x in (1e-4, 1e-2, 1.0):
                got = risk_term(PP, spec, m, x)
                want = brute_force_risk(PP, spec, m, x)
                assert got == pytest.approx(want, rel=2e-5)

    def test_out_of_range_x_rejected(self):
        with pytest.raises(ValueError):
            risk_term(PP, E1, 1, 0.0)
        with pytest.raises(ValueError):
            risk_term(PP, E1, 1, 1.5)

    def test_divergent_tail_reported(self):
        with pytest.raises(oracle.DivergentTailError):
            risk_term(PP, DerivativeEval(t0=0.3, q=1), 3, 0.5)

    def test_floor_invariant(self):
        spec = PointEval(t0=0.3)
        for x in (1e-3, 0.1):
            curve = risk_curve(PP, spec, x, 20)
            assert np.all(curve >= x * 1.0 - 1e-15)


class TestMinimaxDimension:
    def test_unit_coordinate_curve(self):
        # for mass on the first coordinate the head sum is constant, so the
        # curve is max(m^(-2p-2a), x): flat minimizer 1 at x = 1, and the
        # first m with m^(-4) <= x otherwise (direct-evaluation oracle)
        m_star, r_star = minimax_dimension(PP, E1, 1.0, m_search=32)
        assert m_star == 1 and r_star == 1.0
        m_star, r_star = minimax_dimension(PP, E1, 1e-3, m_search=32)
        assert m_star == 6
        assert r_star == pytest.approx(1e-3, rel=1e-12)

    def test_enumeration_against_brute_force(self):
        spec = PointEval(t0=0.3)
        risks = [brute_force_risk(PP, spec, m, 1.0) for m in range(1, 33)]
        want = int(np.argmin(risks)) + 1
        got, _ = minimax_dimension(PP, spec, 1.0, m_search=32)
        assert got == want

    def test_pp_point_eval_order(self):
        n = 10 ** 4
        m_star, _ = minimax_dimension(PP, PointEval(t0=0.3), 1.0 / n)
        target = n ** 0.25
        assert target / 2 <= m_star <= target * 2

    def test_boundary_minimizer_warns(self):
        with pytest.warns(RuntimeWarning):
            minimax_dimension(PP, PointEval(t0=0.3), 1e-4, m_search=3)

    def test_risk_level_monotone_in_x(self):
        spec = PointEval(t0=0.3)
        _, r1 = minimax_dimension(PP, spec, 1e-4, m_search=64)
        _, r2 = minimax_dimension(PP, spec, 1e-3, m_search=64)
        _, r3 = minimax_dimension(PP, spec, 1e-2, m_search=64)
        assert r1 <= r2 <= r3


class TestTheoreticalPenalty:
    def test_zero_slope(self):
        slope = simulate.SlopeSpec(coeffs=np.zeros(16),
                                   true_norm_beta_sq=0.0, model=PP)
        pen = theoretical_penalty(PP, E1, slope, sigma=1.3, n=100, m=4)
        assert pen.sigma_m_sq == pytest.approx(2 * 1.3 ** 2, rel=1e-14)
        assert pen.rho_m_sq == pytest.approx(1.3 ** 2, rel=1e-14)

    def test_diagonal_quadratic_form_identity(self):
        slope = simulate.make_slope(PP, 32)
        spec = PointEval(t0=0.3)
        gam = sequences.gamma_array(PP, 32)
        for m in (1, 5, 12):
            pen = theoretical_penalty(PP, spec, slope, sigma=1.0, n=500, m=m)
            direct = float(np.sum(gam[:m] * slope.coeffs[:m] ** 2))
            sig_y2 = 1.0 + float(np.sum(gam * slope.coeffs ** 2))
            assert pen.sigma_m_sq == pytest.approx(2 * (sig_y2 + direct), rel=1e-12)

    def test_unit_coordinate_v_term(self):
        slope = simulate.make_slope(PP, 16)
        for m in (1, 4, 9):
            pen = theoretical_penalty(PP, E1, slope, sigma=1.0, n=200, m=m)
            assert pen.v_m == 1.0

    def test_residual_variance_below_sigma_m(self):
        slope = simulate.make_slope(PP, 32)
        for m in (1, 3, 8):
            pen = theoretical_penalty(PP, PointEval(t0=0.3), slope,
                                      sigma=1.0, n=500, m=m)
            assert pen.rho_m_sq <= pen.sigma_m_sq

    def test_penalty_curve_nondecreasing(self):
        slope = simulate.make_slope(PP, 32)
        curve = oracle.theoretical_penalty_curve(
            PP, PointEval(t0=0.3), slope, sigma=1.0, n=500, m_max=12
        )
        assert np.all(np.diff(curve) >= 0)

    def test_rotated_construction_matches_direct_algebra(self):
        cov = Covariance(PP, 16, theta=0.5)
        slope = simulate.make_slope(PP, 16)
        spec = PointEval(t0=0.3)
        pen = theoretical_penalty(PP, spec, slope, sigma=1.0, n=300, m=4, cov=cov)
        mat = cov.matrix()
        g = mat @ slope.coeffs
        quad = float(g[:4] @ np.linalg.solve(mat[:4, :4], g[:4]))
        sig_y2 = 1.0 + float(slope.coeffs @ g)
        assert pen.sigma_m_sq == pytest.approx(2 * (sig_y2 + quad), rel=1e-12)

    def test_mismatched_covariance_rejected(self):
        slope = simulate.make_slope(PP, 16)
        with pytest.raises(ValueError):
            theoretical_penalty(PP, E1, slope, sigma=1.0, n=100, m=2,
                                cov=Covariance(PP, 8, 0.0))


class TestRateExponent:
    def test_pp_point_minimax(self):
        desc = rate_exponent(PP, PointEval(t0=0.3), "minimax")
        assert desc == RateDescriptor(-0.25, 0.0, 0.0)

    def test_pp_point_adaptive(self):
        desc = rate_exponent(PP, PointEval(t0=0.3), "adaptive")
        assert desc == RateDescriptor(-0.25, 0.25, 0.0)

    def test_pe_point_same_in_both_modes(self):
        want = RateDescriptor(0.0, -(2 * 1.0 - 1) / (2 * 0.5), 0.0)
        assert rate_exponent(PE, PointEval(t0=0.3), "minimax") == want
        assert rate_exponent(PE, PointEval(t0=0.3), "adaptive") == want

    def test_pp_local_average(self):
        desc = rate_exponent(PP, LocalAverage(b=0.5), "minimax")
        assert desc == RateDescriptor(-(2 + 1) / 4, 0.0, 0.0)
        desc = rate_exponent(PP, LocalAverage(b=0.5), "adaptive")
        assert desc == RateDescriptor(-0.75, 0.75, 0.0)

    def test_pp_derivative(self):
        model = SequenceModel(regime=Regime.PP, p=2.0, a=1.0)
        desc = rate_exponent(model, DerivativeEval(t0=0.3, q=1), "minimax")
        assert desc == RateDescriptor(-(4 - 2 - 1) / 6, 0.0, 0.0)

    def test_ep_point_eval(self):
        desc = rate_exponent(EP, PointEval(t0=0.3), "minimax")
        assert desc == RateDescriptor(-1.0, (2 * 1.0 + 1) / (2 * 0.5), 0.0)
        desc = rate_exponent(EP, PointEval(t0=0.3), "adaptive")
        assert desc == RateDescriptor(-1.0, (2 * 0.5 + 2 * 1.0 + 1) / (2 * 0.5), 0.0)

    def test_boundary_branches_on_decay_exponent(self):
        # the named families only reach s - a < 1/2 under their conditions;
        # the boundary and fast branches are exposed through the raw order
        boundary = oracle.rate_order(PP, s=1.5, mode="minimax")  # s - a = 1/2
        assert boundary == RateDescriptor(-1.0, 1.0, 0.0)
        assert oracle.rate_order(PP, s=1.5, mode="adaptive") == RateDescriptor(-1.0, 2.0, 0.0)
        fast = oracle.rate_order(PP, s=3.0, mode="minimax")  # s - a > 1/2
        assert fast == RateDescriptor(-1.0, 0.0, 0.0)
        assert oracle.rate_order(PP, s=3.0, mode="adaptive") == RateDescriptor(-1.0, 1.0, 0.0)
        assert oracle.rate_order(EP, s=1.5, mode="minimax") == RateDescriptor(-1.0, 0.0, 1.0)
        assert oracle.rate_order(EP, s=1.5, mode="adaptive") == RateDescriptor(-1.0, 1.0, 1.0)
        assert oracle.rate_order(EP, s=3.0, mode="adaptive") == RateDescriptor(-1.0, 1.0, 0.0)

    def test_out_of_regime_rejected_with_named_condition(self):
        small_p = SequenceModel(regime=Regime.PP, p=0.4, a=1.5)
        with pytest.raises(oracle.RegimeConditionError, match="p > 1/2"):
            rate_exponent(small_p, PointEval(t0=0.3), "minimax")
        with pytest.raises(oracle.RegimeConditionError, match="q < p - 1/2"):
            rate_exponent(PP, DerivativeEval(t0=0.3, q=1), "minimax")
        tight = SequenceModel(regime=Regime.PP, p=0.6, a=0.6)
        with pytest.raises(oracle.RegimeConditionError, match="p \\+ a"):
            rate_exponent(tight, PointEval(t0=0.3), "minimax")

    def test_custom_functional_has_no_closed_form(self):
        with pytest.raises(oracle.RegimeConditionError):
            rate_exponent(PP, E1, "minimax")

    def test_descriptor_evaluation(self):
        desc = RateDescriptor(-0.25, 0.25, 0.0)
        n = 10 ** 4
        assert desc.evaluate(n) == pytest.approx(
            (math.log(n) / n) ** 0.25, rel=1e-12
        )
        assert "n^(-0.25)" in desc.label()


class TestSideCondition:
    def test_ratio_is_small_in_regime(self):
        ratio = oracle.side_condition_ratio(PP, PointEval(t0=0.3), 10 ** 4)
        assert 0.0 < ratio < 1.0

    def test_ratio_at_explicit_dimension(self):
        n, m = 10 ** 4, 5
        got = oracle.side_condition_ratio(PP, PointEval(t0=0.3), n, m)
        from flradapt.functionals import gram
        want = gram(PointEval(t0=0.3), m) * m ** 2 / (n / (1 + math.log(n)))
        assert got == pytest.approx(want, rel=1e-12)


class TestLinkBounds:
    def test_diagonal_products_exactly_one(self):
        report = check_link_bounds(PP, PointEval(t0=0.3), 32)
        assert np.all(report.gamma_inv_norm == 1.0)
        assert np.all(report.v_ratio == 1.0)
        assert report.d == 1.0 and report.ok

    def test_unit_coordinate_diagonal(self):
        report = check_link_bounds(PP, E1, 8)
        assert np.all(report.v_ratio == 1.0)

    def test_rotated_construction_within_bounds(self):
        cov = Covariance(PP, 32, theta=0.6)
        report = check_link_bounds(PP, PointEval(t0=0.3), 32, cov=cov)
        assert report.d > 1.0
        assert report.ok

    def test_quarter_turn_within_bounds(self):
        cov = Covariance(PP, 16, theta=math.pi / 2)
        report = check_link_bounds(PP, PointEval(t0=0.3), 16, cov=cov)
        assert report.ok
