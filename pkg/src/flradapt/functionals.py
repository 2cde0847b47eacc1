"""Linear functionals on [0, 1] expressed in the trigonometric basis.

The fixed orthonormal basis is psi_1 = 1, psi_{2k}(s) = sqrt(2) cos(2 pi k s),
psi_{2k+1}(s) = sqrt(2) sin(2 pi k s).  Each functional is represented by the
vector of its values on the basis functions; everything downstream works with
those coefficient vectors only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SQRT2 = math.sqrt(2.0)


def _finite_unit(value: float, name: str, low: float, high: float, strict_low=False):
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    if strict_low:
        if not (low < value <= high):
            raise ValueError(f"{name} must lie in ({low}, {high}], got {value}")
    elif not (low <= value <= high):
        raise ValueError(f"{name} must lie in [{low}, {high}], got {value}")


@dataclass(frozen=True)
class PointEval:
    """h -> h(t0)."""

    t0: float

    def __post_init__(self):
        _finite_unit(self.t0, "t0", 0.0, 1.0)


@dataclass(frozen=True)
class DerivativeEval:
    """h -> h^(q)(t0), the q-th derivative at t0 (q = 0 is point evaluation)."""

    t0: float
    q: int

    def __post_init__(self):
        _finite_unit(self.t0, "t0", 0.0, 1.0)
        if not (isinstance(self.q, int) and self.q >= 0):
            raise ValueError(f"q must be a non-negative integer, got {self.q!r}")


@dataclass(frozen=True)
class LocalAverage:
    """h -> (1/b) * integral of h over [0, b]."""

    b: float

    def __post_init__(self):
        _finite_unit(self.b, "b", 0.0, 1.0, strict_low=True)


@dataclass(frozen=True)
class Custom:
    """Functional given directly by finitely many basis coefficients."""

    coeffs: tuple

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coeffs)
        if len(coeffs) == 0:
            raise ValueError("Custom needs at least one coefficient")
        if not all(math.isfinite(c) for c in coeffs):
            raise ValueError("Custom coefficients must all be finite")
        object.__setattr__(self, "coeffs", coeffs)


FunctionalSpec = PointEval | DerivativeEval | LocalAverage | Custom


def basis_values(t: float, m: int) -> np.ndarray:
    """Values (psi_1(t), ..., psi_m(t))."""
    if m < 1:
        raise ValueError("m must be >= 1")
    out = np.empty(m)
    out[0] = 1.0
    j = np.arange(2, m + 1)
    k = j // 2
    arg = 2.0 * np.pi * k * t
    out[1:] = np.where(j % 2 == 0, SQRT2 * np.cos(arg), SQRT2 * np.sin(arg))
    return out


def coefficients(spec: FunctionalSpec, m: int) -> np.ndarray:
    """Coefficient vector ([l]_1, ..., [l]_m) of the functional.

    Point evaluation returns the basis values at t0.  Derivatives use the
    phase-shift identities
    (d/ds)^q cos(w s) = w^q cos(w s + q pi/2),
    (d/ds)^q sin(w s) = w^q sin(w s + q pi/2).
    Local averages integrate each basis function over [0, b] in closed form
    and divide by b.
    """
    if not (isinstance(m, (int, np.integer)) and m >= 1):
        raise ValueError(f"m must be a positive integer, got {m!r}")
    if isinstance(spec, PointEval):
        return basis_values(spec.t0, m)
    if isinstance(spec, DerivativeEval):
        if spec.q == 0:
            return basis_values(spec.t0, m)
        out = np.zeros(m)
        if m == 1:
            return out
        j = np.arange(2, m + 1)
        k = j // 2
        w = 2.0 * np.pi * k
        arg = w * spec.t0 + spec.q * np.pi / 2.0
        amp = SQRT2 * w ** spec.q
        out[1:] = np.where(j % 2 == 0, amp * np.cos(arg), amp * np.sin(arg))
        return out
    if isinstance(spec, LocalAverage):
        out = np.empty(m)
        out[0] = 1.0
        if m == 1:
            return out
        j = np.arange(2, m + 1)
        k = j // 2
        wb = 2.0 * np.pi * k * spec.b
        out[1:] = np.where(
            j % 2 == 0,
            SQRT2 * np.sin(wb) / wb,
            SQRT2 * (1.0 - np.cos(wb)) / wb,
        )
        return out
    if isinstance(spec, Custom):
        out = np.zeros(m)
        upto = min(m, len(spec.coeffs))
        out[:upto] = spec.coeffs[:upto]
        return out
    raise TypeError(f"unknown functional spec {spec!r}")


def gram(spec: FunctionalSpec, m: int) -> float:
    """Sum of the first m squared coefficients; non-decreasing in m.

    Computed with exact summation so that monotonicity in m holds exactly.
    """
    c = coefficients(spec, m)
    return math.fsum(float(v) * float(v) for v in c)


def gram_prefix(spec: FunctionalSpec, m: int) -> np.ndarray:
    """Cumulative sums of squared coefficients for dimensions 1..m."""
    c = coefficients(spec, m)
    return np.cumsum(c * c)


def coefficient_support(spec: FunctionalSpec):
    """Index past which all coefficients vanish, or None if unbounded."""
    if isinstance(spec, Custom):
        return len(spec.coeffs)
    return None


def mean_square_density(spec: FunctionalSpec) -> tuple[float, float]:
    """Envelope (amplitude A, power s) with mean [l]_j^2 <= A * j^(2 s).

    Used for integral remainder bounds of coefficient tail sums.  The values
    average the squared cos/sin pair at each frequency:

    * point evaluation: pairs sum to exactly 2 per two indices, so (1, 0);
    * q-th derivative: pair sum 2 (2 pi k)^(2q) at index ~2k, so (pi^(2q), q);
    * local average over [0, b]: pair sum 2 (2 - 2 cos(wb)) / (wb)^2 with
      w = 2 pi k, mean 4 / (wb)^2, giving (2 / (pi b)^2, -1).
    """
    if isinstance(spec, PointEval):
        return 1.0, 0.0
    if isinstance(spec, DerivativeEval):
        return math.pi ** (2 * spec.q), float(spec.q)
    if isinstance(spec, LocalAverage):
        return 2.0 / (math.pi * spec.b) ** 2, -1.0
    if isinstance(spec, Custom):
        return 0.0, 0.0
    raise TypeError(f"unknown functional spec {spec!r}")


def evaluate(spec: FunctionalSpec, coeff_vector: np.ndarray) -> float:
    """Apply the functional to an element given by basis coefficients."""
    v = np.asarray(coeff_vector, dtype=np.float64)
    return float(coefficients(spec, len(v)) @ v)
