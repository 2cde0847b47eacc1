"""Fully data-driven dimension selection by penalized contrast.

The candidate dimensions run from 1 up to a random bound derived from the
data.  Each candidate carries a stochastic penalty; the contrast of a
candidate m is the largest penalized squared difference between its estimate
and the estimates at dimensions above it.  The selected dimension minimizes
contrast plus penalty, ties resolving to the smallest index.  A deterministic
inequality bounds the error of the selected estimate in terms of any single
candidate's penalty, approximation error, and excess fluctuation; the checker
at the bottom verifies it by brute force on arbitrary inputs.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import estimator, functionals
from ._util import floor_fourth_root

# multiplicative constant of the stochastic penalty; exposed as a knob, the
# deliberately conservative default is the one the theory prescribes
PENALTY_CONSTANT = 700.0


class DegenerateFunctionalWarning(RuntimeWarning):
    """Even the one-dimensional coefficient mass exceeds the sample size."""


class AdaptiveEstimationError(RuntimeError):
    """Estimation could not produce a usable candidate set."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass(eq=False)
class AdaptiveResult:
    """Everything the selection produced, plus diagnostics for studies."""

    m_ell_cap: int
    m_hat_cap: int
    penalties: np.ndarray
    contrasts: np.ndarray
    selected: int
    estimates: np.ndarray
    value: float
    diagnostics: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        """JSON-ready dictionary (arrays become lists)."""
        diag = {}
        for key, val in self.diagnostics.items():
            if isinstance(val, np.ndarray):
                diag[key] = [float(v) for v in val]
            elif isinstance(val, (np.floating, np.integer)):
                diag[key] = val.item()
            else:
                diag[key] = val
        return {
            "m_ell_cap": int(self.m_ell_cap),
            "m_hat_cap": int(self.m_hat_cap),
            "selected": int(self.selected),
            "value": float(self.value),
            "estimates": [float(v) for v in self.estimates],
            "penalties": [float(v) for v in self.penalties],
            "contrasts": [float(v) for v in self.contrasts],
            "diagnostics": diag,
        }


def cap_m_ell(spec, n: int) -> int:
    """Deterministic dimension cap: the largest m <= floor(n^(1/4)) whose
    cumulative squared coefficient mass stays within the sample size.

    Falls back to 1 (with :class:`DegenerateFunctionalWarning`) when even the
    first coefficient violates the mass constraint.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    m4 = floor_fourth_root(n)
    prefix = functionals.gram_prefix(spec, m4)
    admissible = np.nonzero(prefix <= n)[0]
    if len(admissible) == 0:
        warnings.warn(
            "functional coefficient mass exceeds n already at m = 1",
            DegenerateFunctionalWarning,
            stacklevel=2,
        )
        return 1
    return int(admissible[-1]) + 1


def _cap_m_hat_from_norms(inv_norms, gram_prefix, n, m_ell):
    threshold = n / (1.0 + math.log(n))
    for m in range(2, m_ell + 1):
        if inv_norms[m - 1] * gram_prefix[m - 1] > threshold:
            return m - 1
    return m_ell


def cap_m_hat(mom: estimator.Moments, spec, n: int) -> int:
    """Random dimension bound: one below the first m >= 2 at which the
    inverse-norm times coefficient-mass product exceeds n / (1 + log n);
    equal to the deterministic cap when no such m exists.  A singular moment
    block counts as an infinite inverse norm.
    """
    m_ell = min(cap_m_ell(spec, n), mom.dim)
    inv_norms = np.array(
        [estimator.galerkin_estimate(mom, m).inv_spectral_norm
         for m in range(1, m_ell + 1)]
    )
    prefix = functionals.gram_prefix(spec, m_ell)
    return _cap_m_hat_from_norms(inv_norms, prefix, n, m_ell)


def penalties(mom: estimator.Moments, spec, n, m_max: int,
              constant: float = PENALTY_CONSTANT) -> np.ndarray:
    """Stochastic penalties p_1..p_{m_max}.

    p_m = constant * (2 mean(y^2) + 2 g_hat_m' Gamma_hat_m^-1 g_hat_m)
                   * max_{k <= m} l_k' Gamma_hat_k^-1 l_k * (1 + log n) / n

    Both bracketed factors are accumulated as running maxima over k <= m, so
    the sequence is non-decreasing by construction (the quadratic form in
    g_hat is non-decreasing already whenever the blocks are definite; the
    running maximum makes that exact in floating point).
    """
    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    ell = functionals.coefficients(spec, m_max)
    quad_g = np.empty(m_max)
    quad_ell = np.empty(m_max)
    for m in range(1, m_max + 1):
        sol_g = estimator.solve_block(mom, m, mom.ghat)
        if sol_g is None:
            raise AdaptiveEstimationError(
                f"moment block at dimension {m} is numerically singular; "
                f"penalties are unavailable past {m - 1}",
                diagnostics={"last_invertible": m - 1},
            )
        sol_ell = estimator.solve_block(mom, m, ell)
        quad_g[m - 1] = float(mom.ghat[:m] @ sol_g)
        quad_ell[m - 1] = float(ell[:m] @ sol_ell)
    quad_g = np.maximum.accumulate(quad_g)
    quad_ell = np.maximum.accumulate(quad_ell)
    factor = constant * (1.0 + math.log(n)) / n
    return factor * (2.0 * mom.sigma2_y_hat + 2.0 * quad_g) * quad_ell


def contrasts(estimates, penalties) -> np.ndarray:
    """kappa_m = max over k in [m, M] of (estimate_k - estimate_m)^2 - p_k."""
    est = np.asarray(estimates, dtype=np.float64)
    pen = np.asarray(penalties, dtype=np.float64)
    if est.shape != pen.shape or est.ndim != 1 or len(est) == 0:
        raise ValueError("estimates and penalties must be equal-length 1-d")
    out = np.empty(len(est))
    for m in range(len(est)):
        out[m] = np.max((est[m:] - est[m]) ** 2 - pen[m:])
    return out


def select(contrasts, penalties) -> int:
    """Smallest index (1-based) minimizing contrast plus penalty."""
    kap = np.asarray(contrasts, dtype=np.float64)
    pen = np.asarray(penalties, dtype=np.float64)
    if kap.shape != pen.shape or kap.ndim != 1 or len(kap) == 0:
        raise ValueError("contrasts and penalties must be equal-length 1-d")
    return int(np.argmin(kap + pen)) + 1


def adaptive_estimate(data, spec,
                      penalty_constant: float = PENALTY_CONSTANT) -> AdaptiveResult:
    """Run the full data-driven pipeline on one dataset.

    Deterministic given the data: moments up to the deterministic cap, the
    random bound, penalties, per-dimension thresholded estimates, contrasts,
    and the selected value.  Failures below dimension one surface as
    :class:`AdaptiveEstimationError` carrying partial diagnostics.
    """
    n = data.n
    if n < 2:
        raise ValueError("need at least two observations")
    diagnostics: dict = {}
    m_ell = cap_m_ell(spec, n)
    if m_ell > data.dim:
        diagnostics["m_ell_clipped_to_data"] = data.dim
        m_ell = data.dim
    mom = estimator.empirical_moments(data, m_ell)
    inv_norms = np.empty(m_ell)
    est_all = np.empty(m_ell)
    for m in range(1, m_ell + 1):
        fit = estimator.galerkin_estimate(mom, m)
        inv_norms[m - 1] = fit.inv_spectral_norm
        est_all[m - 1] = estimator.plug_in(spec, fit)
    prefix = functionals.gram_prefix(spec, m_ell)
    m_hat = _cap_m_hat_from_norms(inv_norms, prefix, n, m_ell)
    try:
        pen = penalties(mom, spec, n, m_hat, constant=penalty_constant)
    except AdaptiveEstimationError as err:
        last_ok = err.diagnostics.get("last_invertible", 0)
        if last_ok < 1:
            raise AdaptiveEstimationError(
                "no invertible moment block at any dimension",
                diagnostics={"inv_spectral_norms": inv_norms, **diagnostics},
            ) from err
        diagnostics["penalty_truncated_at"] = last_ok
        m_hat = last_ok
        pen = penalties(mom, spec, n, m_hat, constant=penalty_constant)
    est = est_all[:m_hat]
    kap = contrasts(est, pen)
    chosen = select(kap, pen)
    diagnostics["estimates_all"] = est_all
    diagnostics["inv_spectral_norms"] = inv_norms
    diagnostics["sigma2_y_hat"] = mom.sigma2_y_hat
    return AdaptiveResult(
        m_ell_cap=m_ell,
        m_hat_cap=m_hat,
        penalties=pen,
        contrasts=kap,
        selected=chosen,
        estimates=est,
        value=float(est[chosen - 1]),
        diagnostics=diagnostics,
    )


@dataclass(frozen=True)
class SelectionBoundCheck:
    """Outcome of the deterministic selection error bound on one instance."""

    passed: bool
    selected: int
    witness: Optional[int]
    lhs: float
    rhs_at_witness: Optional[float]


def check_selection_bound(estimates, penalties, approx_values, target) -> SelectionBoundCheck:
    """Verify the deterministic error bound of the selection rule.

    Given estimates, non-decreasing penalties, the functional values of the
    approximating sequence, and the target value, the selected estimate must
    satisfy, for every m,

        (selected_estimate - target)^2
            <= 7 p_m + 78 b_m^2
               + 42 max_{k >= m} ((estimate_k - approx_k)^2 - p_k / 6)_+

    with b_m the largest approximation error at dimensions >= m.  Both sides
    are evaluated by direct enumeration; the first violating m is reported.
    """
    est = np.asarray(estimates, dtype=np.float64)
    pen = np.asarray(penalties, dtype=np.float64)
    approx = np.asarray(approx_values, dtype=np.float64)
    if not (est.shape == pen.shape == approx.shape) or est.ndim != 1 or not len(est):
        raise ValueError("inputs must be equal-length 1-d arrays")
    if np.any(np.diff(pen) < 0):
        raise ValueError("penalties must be non-decreasing")
    target = float(target)
    kap = contrasts(est, pen)
    chosen = select(kap, pen)
    lhs = (est[chosen - 1] - target) ** 2
    # suffix maxima, trailing window [m, M]
    b = np.maximum.accumulate(np.abs(approx - target)[::-1])[::-1]
    excess = np.maximum((est - approx) ** 2 - pen / 6.0, 0.0)
    excess = np.maximum.accumulate(excess[::-1])[::-1]
    rhs = 7.0 * pen + 78.0 * b ** 2 + 42.0 * excess
    violations = np.nonzero(lhs > rhs)[0]
    if len(violations):
        w = int(violations[0])
        return SelectionBoundCheck(False, chosen, w + 1, float(lhs), float(rhs[w]))
    return SelectionBoundCheck(True, chosen, None, float(lhs), None)


@dataclass(frozen=True)
class SelectionBoundSuite:
    instances: int
    violations: int
    first_violation: Optional[SelectionBoundCheck]

    @property
    def passed(self) -> bool:
        return self.violations == 0


def selection_bound_suite(instances: int, seed: int,
                          max_models: int = 20, span: float = 10.0) -> SelectionBoundSuite:
    """Randomized stress suite for the selection error bound.

    Each instance draws up to ``max_models`` estimates, approximation values
    and a target uniformly on [-span, span], and sorted uniform penalties.
    """
    rng = np.random.default_rng(seed)
    violations = 0
    first = None
    for _ in range(instances):
        m = int(rng.integers(1, max_models + 1))
        est = rng.uniform(-span, span, m)
        approx = rng.uniform(-span, span, m)
        target = float(rng.uniform(-span, span))
        pen = np.sort(rng.uniform(0.0, 1.0, m))
        check = check_selection_bound(est, pen, approx, target)
        if not check.passed:
            violations += 1
            if first is None:
                first = check
    return SelectionBoundSuite(instances=instances, violations=violations,
                               first_violation=first)
