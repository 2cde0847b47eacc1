"""Empirical moments and the thresholded projection estimator.

For a fixed dimension m the slope estimate solves the m x m empirical normal
equations; the solve is abandoned (coefficients set to zero) when the moment
matrix is numerically singular or the spectral norm of its inverse exceeds
the sample size.  One symmetric eigendecomposition per dimension supplies the
singularity test, the inverse norm, and the solve, so the threshold decision
and the solution can never disagree.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import functionals

# numerically singular iff lambda_min <= SINGULARITY_RTOL * trace / m
SINGULARITY_RTOL = 1e-12

SYMMETRY_RTOL = 1e-8


@dataclass(eq=False)
class Moments:
    """Sample moments of (y, x) up to a maximal dimension M."""

    ghat: np.ndarray
    gammahat: np.ndarray
    sigma2_y_hat: float
    n: int

    def __post_init__(self):
        self.ghat = np.asarray(self.ghat, dtype=np.float64)
        self.gammahat = np.asarray(self.gammahat, dtype=np.float64)
        m = len(self.ghat)
        if self.gammahat.shape != (m, m):
            raise ValueError("gammahat must be square and match ghat")
        asym = np.max(np.abs(self.gammahat - self.gammahat.T))
        scale = max(np.max(np.abs(self.gammahat)), 1e-300)
        if asym > 1e-12 * scale:
            raise ValueError(f"gammahat asymmetric beyond tolerance ({asym:.3g})")
        if m:
            w = np.linalg.eigvalsh(self.gammahat)
            if w[0] < -1e-10 * max(np.trace(self.gammahat), 0.0):
                raise ValueError("gammahat is not positive semi-definite")
        if self.sigma2_y_hat < 0:
            raise ValueError("sigma2_y_hat must be non-negative")

    @property
    def dim(self) -> int:
        return len(self.ghat)


@dataclass(eq=False)
class GalerkinFit:
    """Projection solve at one dimension, or the zero fallback."""

    m: int
    coeffs: np.ndarray
    thresholded: bool
    inv_spectral_norm: float


def empirical_moments(data, M: int) -> Moments:
    """Sample averages g_hat = mean(y_i x_i), Gamma_hat = mean(x_i x_i^t),
    restricted to the first M coefficients, plus mean(y_i^2).

    Moments at M restrict to moments at any m < M by truncation.
    """
    if not (1 <= M <= data.dim):
        raise ValueError(f"M must lie in 1..{data.dim}, got {M}")
    xm = data.x[:, :M]
    gam = xm.T @ xm / data.n
    gam = (gam + gam.T) / 2.0
    ghat = xm.T @ data.y / data.n
    s2 = float(np.mean(data.y ** 2))
    return Moments(ghat=ghat, gammahat=gam, sigma2_y_hat=s2, n=data.n)


def _is_singular(eigenvalues: np.ndarray, trace: float, m: int) -> bool:
    return not eigenvalues[0] > SINGULARITY_RTOL * max(trace, 0.0) / m


def block_spectrum(mom: Moments, m: int):
    """Eigendecomposition of the leading m x m moment block."""
    a = mom.gammahat[:m, :m]
    w, v = np.linalg.eigh(a)
    return w, v


def spectral_norm_inverse(mat: np.ndarray) -> float:
    """Spectral norm of the inverse of a symmetric PSD matrix.

    Returns 1 / lambda_min, or +inf when the matrix is numerically singular.
    Asymmetry beyond SYMMETRY_RTOL times the matrix scale is rejected.
    """
    mat = np.asarray(mat, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError("matrix must be square")
    scale = max(np.max(np.abs(mat)), 1e-300)
    if np.max(np.abs(mat - mat.T)) > SYMMETRY_RTOL * scale:
        raise ValueError("matrix is not symmetric within tolerance")
    w = np.linalg.eigvalsh((mat + mat.T) / 2.0)
    m = mat.shape[0]
    if _is_singular(w, float(np.trace(mat)), m):
        return math.inf
    return 1.0 / float(w[0])


def galerkin_estimate(mom: Moments, m: int) -> GalerkinFit:
    """Thresholded projection solve at dimension m.

    Solves Gamma_hat_m c = g_hat_m when the block is non-singular and the
    spectral norm of its inverse is at most n; otherwise returns the zero
    vector with ``thresholded=True``.
    """
    if not (1 <= m <= mom.dim):
        raise ValueError(f"m must lie in 1..{mom.dim}, got {m}")
    w, v = block_spectrum(mom, m)
    trace = float(np.trace(mom.gammahat[:m, :m]))
    if _is_singular(w, trace, m):
        return GalerkinFit(m=m, coeffs=np.zeros(m), thresholded=True,
                           inv_spectral_norm=math.inf)
    inv_norm = 1.0 / float(w[0])
    if inv_norm > mom.n:
        return GalerkinFit(m=m, coeffs=np.zeros(m), thresholded=True,
                           inv_spectral_norm=inv_norm)
    coeffs = v @ ((v.T @ mom.ghat[:m]) / w)
    return GalerkinFit(m=m, coeffs=coeffs, thresholded=False,
                       inv_spectral_norm=inv_norm)


def solve_block(mom: Moments, m: int, rhs: np.ndarray):
    """Solve the leading m x m moment block against ``rhs`` without the
    sample-size threshold; returns None when numerically singular.

    Penalty terms need these raw inverses even where the estimator itself
    would have been thresholded.
    """
    if not (1 <= m <= mom.dim):
        raise ValueError(f"m must lie in 1..{mom.dim}, got {m}")
    w, v = block_spectrum(mom, m)
    if _is_singular(w, float(np.trace(mom.gammahat[:m, :m])), m):
        return None
    return v @ ((v.T @ np.asarray(rhs, dtype=np.float64)[:m]) / w)


def plug_in(spec, fit: GalerkinFit) -> float:
    """Functional value of the fitted slope; exactly zero when thresholded."""
    if fit.thresholded:
        return 0.0
    return float(functionals.coefficients(spec, fit.m) @ fit.coeffs)
