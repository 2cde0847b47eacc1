import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from flradapt import sequences
from flradapt.sequences import Regime, SequenceModel, beta, gamma


PP = SequenceModel(regime=Regime.PP, p=1.0, a=1.0)
PE = SequenceModel(regime=Regime.PE, p=1.0, a=0.5)
EP = SequenceModel(regime=Regime.EP, p=0.5, a=1.0)


class TestWeightFormulas:
    def test_pp_beta_is_polynomial(self):
        assert beta(PP, 3) == 9.0

    def test_ep_beta_exponential(self):
        assert beta(EP, 4) == pytest.approx(math.exp(3.0), rel=1e-15)

    def test_pp_gamma_is_polynomial(self):
        assert gamma(PP, 4) == 1.0 / 16.0

    def test_pe_gamma_exponential(self):
        assert gamma(PE, 3) == pytest.approx(math.exp(-2.0), rel=1e-15)

    @pytest.mark.parametrize("model", [PP, PE, EP])
    def test_first_weights_are_one(self, model):
        assert beta(model, 1) == 1.0
        assert gamma(model, 1) == 1.0

    @pytest.mark.parametrize("model", [PP, PE, EP])
    def test_monotonicity_on_window(self, model):
        lb = sequences.log_beta_array(model, 1000)
        lg = sequences.log_gamma_array(model, 1000)
        assert np.all(np.diff(lb) >= 0)
        assert np.all(np.diff(lg) <= 0)

    def test_deterministic(self):
        vals = [beta(PE, 17) for _ in range(5)] + [gamma(PE, 17) for _ in range(5)]
        assert len({v for v in vals[:5]}) == 1
        assert len({v for v in vals[5:]}) == 1

    def test_pp_product_cancels_when_p_equals_a(self):
        # pow is not guaranteed correctly rounded, so allow one ulp
        for j in range(1, 200):
            assert abs(beta(PP, j) * gamma(PP, j) - 1.0) <= 2.0 ** -52

    @given(st.integers(min_value=1, max_value=10 ** 6),
           st.sampled_from([PP, PE, EP]))
    def test_bounds(self, j, model):
        try:
            b = beta(model, j)
        except sequences.SaturationError:
            b = None
        if b is not None:
            assert b >= 1.0
        with np.errstate(all="ignore"):
            import warnings
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", sequences.UnderflowWarning)
                g = gamma(model, j)
        assert 0.0 < g <= 1.0

    def test_bad_index_rejected(self):
        with pytest.raises(ValueError):
            beta(PP, 0)
        with pytest.raises(ValueError):
            gamma(PP, -3)


class TestSaturationAndUnderflow:
    def test_ep_overflow_is_reported(self):
        with pytest.raises(sequences.SaturationError):
            beta(EP, 10 ** 6)
        # log-space access still works
        assert sequences.log_beta(EP, 10 ** 6) == 10 ** 6 - 1.0

    def test_polynomial_overflow_is_reported(self):
        with pytest.raises(sequences.SaturationError):
            beta(PP, 10 ** 160)
        with pytest.raises(sequences.SaturationError):
            sequences.beta_array(EP, 10 ** 4)

    def test_pe_underflow_flagged_and_clamped(self):
        with pytest.warns(sequences.UnderflowWarning):
            g = gamma(PE, 1000)
        assert g == sequences.MIN_NORMAL

    def test_array_variants_match_scalars(self):
        lb = sequences.log_beta_array(EP, 50)
        assert lb[3] == sequences.log_beta(EP, 4)
        ga = sequences.gamma_array(PP, 50)
        assert ga[7] == gamma(PP, 8)


class TestModelValidation:
    def test_pp_needs_a_above_half(self):
        with pytest.raises(ValueError):
            SequenceModel(regime=Regime.PP, p=1.0, a=0.5)

    def test_pe_accepts_small_a(self):
        SequenceModel(regime=Regime.PE, p=1.0, a=0.25)

    def test_ep_needs_a_above_half_and_positive_p(self):
        with pytest.raises(ValueError):
            SequenceModel(regime=Regime.EP, p=0.5, a=0.4)
        with pytest.raises(ValueError):
            SequenceModel(regime=Regime.EP, p=0.0, a=1.0)

    def test_radius_and_link_constant(self):
        with pytest.raises(ValueError):
            SequenceModel(regime=Regime.PP, p=1.0, a=1.0, r=0.0)
        with pytest.raises(ValueError):
            SequenceModel(regime=Regime.PP, p=1.0, a=1.0, d=0.9)

    def test_regime_coercion_from_string(self):
        m = SequenceModel(regime="pp", p=1.0, a=1.0)
        assert m.regime is Regime.PP


class TestAssumptionChecks:
    def test_constant_coefficients_converge_under_pp(self):
        rep = sequences.check_assumption(PP, np.ones(10 ** 4), 10 ** 4)
        assert rep.functional_sum_convergent
        assert rep.beta_nondecreasing and rep.gamma_nonincreasing
        assert rep.ok

    def test_eigenvalue_sum_converges_under_pp(self):
        rep = sequences.check_assumption(PP, np.ones(10 ** 4), 10 ** 4)
        assert rep.eigenvalue_sum_convergent
        # partial sum of j^-2 approaches pi^2/6
        assert rep.eigenvalue_partial_sum == pytest.approx(math.pi ** 2 / 6, abs=2e-4)

    def test_growing_coefficients_flagged_divergent(self):
        model = SequenceModel(regime=Regime.PP, p=0.1, a=1.0)
        j = np.arange(1, 10 ** 4 + 1)
        ell = np.sqrt(j ** 0.9)
        rep = sequences.check_assumption(model, ell, 10 ** 4)
        assert not rep.functional_sum_convergent
        assert not rep.ok

    def test_boundary_harmonic_case_not_certified(self):
        # terms ~ 1/j: divergent, block sums do not decay geometrically
        model = SequenceModel(regime=Regime.PP, p=0.51, a=1.0)
        j = np.arange(1, 10 ** 4 + 1)
        ell = np.sqrt(j ** 0.02)  # ell^2/beta = j^0.02 / j^1.02 = 1/j
        rep = sequences.check_assumption(model, ell, 10 ** 4)
        assert not rep.functional_sum_convergent

    def test_exponential_terms_hit_cauchy_cut(self):
        rep = sequences.check_assumption(PE, np.ones(2000), 2000)
        assert rep.eigenvalue_sum_convergent

    def test_short_coefficient_vector_rejected(self):
        with pytest.raises(ValueError):
            sequences.check_assumption(PP, np.ones(10), 100)
