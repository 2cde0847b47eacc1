"""Theoretical quantities: risk curves, optimal dimensions, closed-form rate
orders, theoretical penalties, and bound checks for the population covariance.

The central object is the risk functional

    R_m[x] = max( sum_{j>m} l_j^2 / beta_j,
                  max(gamma_m / beta_m, x) * sum_{j<=m} l_j^2 / gamma_j )

whose minimum over m describes the attainable mean squared error order at
accuracy level x (x = 1/n for the best non-adaptive dimension, and
x = (1+log n)/n for the data-driven one).
"""
from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import functionals, sequences, simulate

THEORETICAL_PENALTY_CONSTANT = 100.0

# default horizons for explicit tail summation; exponential regularity
# weights terminate by underflow long before the cap
TAIL_HORIZON_POLY = 1_000_000
TAIL_HORIZON_EXP = 65_536


class DivergentTailError(ValueError):
    """The coefficient tail sum diverges for the regime in force."""


class RegimeConditionError(ValueError):
    """Rate formulas require a parameter condition that does not hold."""


def _default_horizon(model) -> int:
    if isinstance(model, sequences.TabulatedSequenceModel):
        raise RegimeConditionError(
            "tabulated weight sequences are not supported by the rate oracle"
        )
    if model.regime is sequences.Regime.EP:
        return TAIL_HORIZON_EXP
    return TAIL_HORIZON_POLY


@functools.lru_cache(maxsize=32)
def _tail_data(model, spec, j_tail: int):
    """Cumulative sums of l_j^2 / beta_j and the completed total.

    For polynomial regularity weights the total adds a midpoint-rule integral
    of the mean-square envelope past the horizon, accurate to a relative
    O(1/j_tail); exponential weights make the remainder vanish by underflow
    (a crude doubled-last-term bound covers the cut).
    """
    support = functionals.coefficient_support(spec)
    if support is not None:
        ell2 = functionals.coefficients(spec, support) ** 2
        with np.errstate(under="ignore"):
            terms = np.where(
                ell2 == 0.0, 0.0,
                ell2 * np.exp(-sequences.log_beta_array(model, support)),
            )
        cum = np.cumsum(terms)
        return cum, float(cum[-1])
    ell2 = functionals.coefficients(spec, j_tail) ** 2
    log_beta = sequences.log_beta_array(model, j_tail)
    with np.errstate(under="ignore", invalid="ignore"):
        terms = np.where(ell2 == 0.0, 0.0, ell2 * np.exp(-log_beta))
    cum = np.cumsum(terms)
    if model.regime is sequences.Regime.EP:
        remainder = 2.0 * float(terms[-1])
    else:
        amp, power = functionals.mean_square_density(spec)
        decay = 2.0 * model.p - 2.0 * power
        if decay <= 1.0:
            raise DivergentTailError(
                f"tail sum of l_j^2/beta_j diverges: needs p - s > 1/2, "
                f"got p = {model.p}, coefficient growth power s = {power}"
            )
        edge = j_tail + 0.5
        remainder = amp * edge ** (1.0 - decay) / (decay - 1.0)
    return cum, float(cum[-1] + remainder)


def ell_weight_tail(model, spec, m: int, j_tail: Optional[int] = None) -> float:
    """sum_{j > m} l_j^2 / beta_j, to about 1e-6 relative accuracy."""
    if m < 0:
        raise ValueError("m must be >= 0")
    cum, total = _tail_data(model, spec, j_tail or _default_horizon(model))
    if m == 0:
        return total
    if m >= len(cum):
        return max(total - float(cum[-1]), 0.0)
    return max(total - float(cum[m - 1]), 0.0)


def risk_curve(model, spec, x: float, m_max: int,
               j_tail: Optional[int] = None) -> np.ndarray:
    """R_1[x]..R_{m_max}[x]; entries overflow to +inf where the head sum
    exceeds the double range (such dimensions can never be minimizers)."""
    if not (0.0 < x <= 1.0):
        raise ValueError(f"x must lie in (0, 1], got {x}")
    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    cum, total = _tail_data(model, spec, j_tail or _default_horizon(model))
    if functionals.coefficient_support(spec) is None and m_max > len(cum):
        raise ValueError(f"m_max = {m_max} exceeds the tail horizon {len(cum)}")
    # finitely supported functionals have zero tail past their support
    idx = np.minimum(np.arange(1, m_max + 1), len(cum)) - 1
    tail = np.maximum(total - cum[idx], 0.0)
    ell2 = functionals.coefficients(spec, m_max) ** 2
    log_gamma = sequences.log_gamma_array(model, m_max)
    log_beta = sequences.log_beta_array(model, m_max)
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        inv_gamma = np.exp(-log_gamma)
        head = np.cumsum(np.where(ell2 == 0.0, 0.0, ell2 * inv_gamma))
        ratio = np.exp(log_gamma - log_beta)
    return np.maximum(tail, np.maximum(ratio, x) * head)


def risk_term(model, spec, m: int, x: float,
              j_tail: Optional[int] = None) -> float:
    """R_m[x] for a single dimension m."""
    return float(risk_curve(model, spec, x, m, j_tail=j_tail)[-1])


@dataclass(frozen=True, eq=False)
class OracleRisk:
    """Risk curve over 1..M with its smallest minimizer."""

    x: float
    risks: np.ndarray
    minimizer: int
    minimum: float
    on_boundary: bool


def risk_profile(model, spec, x: float, m_max: int,
                 j_tail: Optional[int] = None) -> OracleRisk:
    risks = risk_curve(model, spec, x, m_max, j_tail=j_tail)
    idx = int(np.argmin(risks))
    on_boundary = idx == m_max - 1 and m_max > 1
    if on_boundary:
        warnings.warn(
            f"risk minimizer sits on the search boundary m = {m_max}",
            RuntimeWarning,
            stacklevel=2,
        )
    return OracleRisk(x=x, risks=risks, minimizer=idx + 1,
                      minimum=float(risks[idx]), on_boundary=on_boundary)


def default_search_bound(model, n: float) -> int:
    """Search range bracketing the optimal dimension with margin."""
    log_n = max(math.log(max(n, 2.0)), 1.0)
    if model.regime is sequences.Regime.PP:
        return max(64, math.ceil(4.0 * n ** (1.0 / (2.0 * model.p + 2.0 * model.a))))
    if model.regime is sequences.Regime.PE:
        return math.ceil(log_n ** (1.0 / (2.0 * model.a))) + 16
    return math.ceil(log_n ** (1.0 / (2.0 * model.p))) + 16


def minimax_dimension(model, spec, x: float,
                      m_search: Optional[int] = None,
                      j_tail: Optional[int] = None) -> tuple[int, float]:
    """Smallest minimizer of R_m[x] over 1..m_search and its value."""
    if m_search is None:
        m_search = default_search_bound(model, 1.0 / x)
    prof = risk_profile(model, spec, x, m_search, j_tail=j_tail)
    return prof.minimizer, prof.minimum


def side_condition_ratio(model, spec, n: int, m: Optional[int] = None) -> float:
    """Finite-n diagnostic for the asymptotic negligibility condition on the
    coefficient mass: gamma_m^-1 * sum_{j<=m} l_j^2 relative to n/(1+log n),
    evaluated at the adaptive dimension by default.

    The condition itself is asymptotic (the ratio should vanish as n grows)
    and cannot be verified at a single n; small values are consistent with it.
    """
    if m is None:
        m, _ = minimax_dimension(model, spec, (1.0 + math.log(n)) / n)
    mass = functionals.gram(spec, m)
    inv_gamma = math.exp(-sequences.log_gamma(model, m))
    return (mass * inv_gamma) / (n / (1.0 + math.log(n)))


@dataclass(frozen=True)
class TheoreticalPenalty:
    """Population counterparts of the stochastic penalty ingredients."""

    m: int
    n: int
    sigma_m_sq: float
    v_m: float
    p_m: float
    rho_m_sq: float


def _population_quantities(model, spec, slope, sigma, m_max, cov):
    """Per-dimension population quadratic forms up to m_max."""
    J = slope.dim
    if m_max > J:
        raise ValueError(f"m_max = {m_max} exceeds slope truncation {J}")
    if cov is None:
        cov = simulate.Covariance(model, J, 0.0)
    if cov.dim != J or cov.model != model:
        raise ValueError("covariance construction does not match model/slope")
    phi = slope.coeffs
    ell = functionals.coefficients(spec, m_max)
    if cov.is_diagonal:
        gam = cov.eigenvalues()
        gphi2 = gam * phi ** 2
        sig_y2 = sigma ** 2 + math.fsum(gphi2.tolist())
        quad = np.cumsum(gphi2)[:m_max]
        with np.errstate(over="ignore", invalid="ignore"):
            v = np.cumsum(np.where(ell == 0.0, 0.0, ell ** 2 / gam[:m_max]))
        rho2 = sigma ** 2 + (math.fsum(gphi2.tolist()) - quad)
        return sig_y2, quad, v, rho2
    mat = cov.matrix()
    g = mat @ phi
    sig_y2 = sigma ** 2 + float(phi @ g)
    quad = np.empty(m_max)
    v = np.empty(m_max)
    rho2 = np.empty(m_max)
    running_v = -math.inf
    for m in range(1, m_max + 1):
        block = mat[:m, :m]
        sol_g = np.linalg.solve(block, g[:m])
        quad[m - 1] = float(g[:m] @ sol_g)
        running_v = max(running_v, float(ell[:m] @ np.linalg.solve(block, ell[:m])))
        v[m - 1] = running_v
        resid = phi.copy()
        resid[:m] -= sol_g
        rho2[m - 1] = sigma ** 2 + float(resid @ (mat @ resid))
    return sig_y2, quad, v, rho2


def theoretical_penalty(model, spec, slope, sigma: float, n: int, m: int,
                        cov: Optional[simulate.Covariance] = None) -> TheoreticalPenalty:
    """Population penalty p_m = 100 sigma_m^2 V_m (1 + log n) / n together
    with its ingredients, for the diagonal or rotated-diagonal covariance."""
    if m < 1:
        raise ValueError("m must be >= 1")
    sig_y2, quad, v, rho2 = _population_quantities(model, spec, slope, sigma, m, cov)
    sigma_m_sq = 2.0 * (sig_y2 + float(quad[m - 1]))
    v_m = float(v[m - 1])
    p_m = (THEORETICAL_PENALTY_CONSTANT * sigma_m_sq * v_m
           * (1.0 + math.log(n)) / n)
    return TheoreticalPenalty(m=m, n=n, sigma_m_sq=sigma_m_sq, v_m=v_m,
                              p_m=p_m, rho_m_sq=float(rho2[m - 1]))


def theoretical_penalty_curve(model, spec, slope, sigma: float, n: int,
                              m_max: int,
                              cov: Optional[simulate.Covariance] = None) -> np.ndarray:
    """p_1..p_{m_max} in one pass."""
    sig_y2, quad, v, _ = _population_quantities(model, spec, slope, sigma, m_max, cov)
    factor = THEORETICAL_PENALTY_CONSTANT * (1.0 + math.log(n)) / n
    return factor * 2.0 * (sig_y2 + quad) * v


@dataclass(frozen=True)
class RateDescriptor:
    """Closed-form order n^e * (log n)^f * (log log n)^g."""

    n_exponent: float
    log_exponent: float = 0.0
    loglog_exponent: float = 0.0

    def evaluate(self, n: float) -> float:
        log_n = math.log(n)
        out = n ** self.n_exponent * log_n ** self.log_exponent
        if self.loglog_exponent:
            out *= math.log(log_n) ** self.loglog_exponent
        return out

    def label(self) -> str:
        parts = []
        if self.n_exponent:
            parts.append(f"n^({self.n_exponent:g})")
        if self.log_exponent:
            parts.append(f"(log n)^({self.log_exponent:g})")
        if self.loglog_exponent:
            parts.append(f"(log log n)^({self.loglog_exponent:g})")
        return " * ".join(parts) if parts else "1"


def _coefficient_decay_exponent(spec) -> float:
    """Exponent s with l_j^2 of order j^(-2s) for the closed-form families."""
    if isinstance(spec, functionals.PointEval):
        return 0.0
    if isinstance(spec, functionals.DerivativeEval):
        return -float(spec.q)
    if isinstance(spec, functionals.LocalAverage):
        return 1.0
    raise RegimeConditionError(
        "closed-form rate orders exist only for point evaluation, "
        "derivative evaluation, and local averages"
    )


def _require(condition: bool, description: str) -> None:
    if not condition:
        raise RegimeConditionError(f"rate formula requires {description}")


def rate_order(model, s: float, mode: str) -> RateDescriptor:
    """Closed-form risk order for squared coefficients of order j^(-2s).

    Implements every branch of the comparison between s - a and 1/2; the
    three named functional families reach only the first branch under their
    own parameter conditions, but the descriptor is defined for all s.
    """
    if mode not in ("minimax", "adaptive"):
        raise ValueError(f"mode must be 'minimax' or 'adaptive', got {mode!r}")
    p, a = model.p, model.a
    regime = model.regime
    delta = s - a
    if regime is sequences.Regime.PE:
        return RateDescriptor(0.0, -(2 * p + 2 * s - 1) / (2 * a), 0.0)
    if regime is sequences.Regime.PP:
        if delta < 0.5:
            e = (2 * p + 2 * s - 1) / (2 * p + 2 * a)
            if mode == "minimax":
                return RateDescriptor(-e, 0.0, 0.0)
            return RateDescriptor(-e, e, 0.0)
        if delta == 0.5:
            return RateDescriptor(-1.0, 1.0 if mode == "minimax" else 2.0, 0.0)
        return RateDescriptor(-1.0, 0.0 if mode == "minimax" else 1.0, 0.0)
    # exponential regularity weights
    if delta < 0.5:
        if mode == "minimax":
            return RateDescriptor(-1.0, (2 * a - 2 * s + 1) / (2 * p), 0.0)
        return RateDescriptor(-1.0, (2 * p + 2 * a - 2 * s + 1) / (2 * p), 0.0)
    if delta == 0.5:
        if mode == "minimax":
            return RateDescriptor(-1.0, 0.0, 1.0)
        return RateDescriptor(-1.0, 1.0, 1.0)
    return RateDescriptor(-1.0, 0.0 if mode == "minimax" else 1.0, 0.0)


def rate_exponent(model, spec, mode: str) -> RateDescriptor:
    """Closed-form order of the attainable risk for one functional family.

    ``mode`` is "minimax" (best non-adaptive dimension, accuracy level 1/n)
    or "adaptive" (data-driven dimension, accuracy level (1+log n)/n).
    """
    s = _coefficient_decay_exponent(spec)
    p, a = model.p, model.a
    regime = model.regime
    if isinstance(spec, functionals.PointEval):
        if regime in (sequences.Regime.PP, sequences.Regime.PE):
            _require(p > 0.5, "p > 1/2 (point evaluation, polynomial regularity)")
        if regime is sequences.Regime.PP:
            _require(p + a >= 1.5, "p + a >= 3/2 (point evaluation, pp)")
    elif isinstance(spec, functionals.DerivativeEval):
        if regime in (sequences.Regime.PP, sequences.Regime.PE):
            _require(spec.q < p - 0.5, "q < p - 1/2 (derivative, polynomial regularity)")
        if regime is sequences.Regime.PP:
            _require(p + a >= 1.5, "p + a >= 3/2 (derivative, pp)")
    elif isinstance(spec, functionals.LocalAverage):
        if regime is sequences.Regime.PP:
            _require(p + a > 1.5, "p + a > 3/2 (local average, pp)")
    return rate_order(model, s, mode)


@dataclass(frozen=True, eq=False)
class LinkBoundsReport:
    """Sanity bounds tying covariance blocks to the eigenvalue weights.

    For any covariance in the class with link constant d, the products
    gamma_m * ||Gamma_m^-1|| and the ratios V_m / V_m^gamma must lie in
    [1/d, 4 d^3]; the diagonal construction gives exactly 1.
    """

    d: float
    lower: float
    upper: float
    gamma_inv_norm: np.ndarray
    v_ratio: np.ndarray

    @property
    def ok(self) -> bool:
        vals = np.concatenate([self.gamma_inv_norm, self.v_ratio])
        return bool(np.all(vals >= self.lower) and np.all(vals <= self.upper))


def check_link_bounds(model, spec, m_max: int,
                      cov: Optional[simulate.Covariance] = None) -> LinkBoundsReport:
    """Verify the weight/inverse-norm link bounds for m = 1..m_max."""
    if cov is None:
        cov = simulate.Covariance(model, m_max, 0.0)
    if cov.dim < m_max:
        raise ValueError("covariance dimension below m_max")
    gam = sequences.gamma_array(model, m_max)
    ell = functionals.coefficients(spec, m_max)
    with np.errstate(over="ignore", invalid="ignore"):
        v_gamma = np.cumsum(np.where(ell == 0.0, 0.0, ell ** 2 / gam))
    gamma_inv_norm = np.empty(m_max)
    v_ratio = np.empty(m_max)
    mat = cov.matrix()
    running_v = -math.inf
    for m in range(1, m_max + 1):
        block = mat[:m, :m]
        lam_min = float(np.linalg.eigvalsh(block)[0])
        gamma_inv_norm[m - 1] = gam[m - 1] / lam_min
        if cov.is_diagonal:
            # diagonal blocks: the quadratic form equals the weighted prefix
            # sum term for term, so the ratio is one identically
            v_ratio[m - 1] = 1.0
        else:
            running_v = max(running_v,
                            float(ell[:m] @ np.linalg.solve(block, ell[:m])))
            v_ratio[m - 1] = running_v / v_gamma[m - 1] if v_gamma[m - 1] > 0 else 1.0
    d = cov.effective_d()
    return LinkBoundsReport(d=d, lower=1.0 / d, upper=4.0 * d ** 3,
                            gamma_inv_norm=gamma_inv_norm, v_ratio=v_ratio)
