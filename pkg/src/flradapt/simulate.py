"""Sampling from the Gaussian scalar-on-function regression model.

Regressors are generated directly as truncated coefficient vectors: the j-th
coefficient is sqrt(lambda_j) times a standard normal, with lambda_j equal to
the eigenvalue weight gamma_j.  An optional Givens rotation of adjacent
coefficient pairs produces a non-diagonal covariance with the same spectrum.
Responses follow y_i = <slope, x_i> + sigma * eps_i with independent standard
normal noise.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import functionals, sequences
from ._util import floor_fourth_root, fmt

DEFAULT_SLOPE_SCALE = 0.9


def default_truncation(n: int) -> int:
    """Default coefficient truncation: comfortably past every candidate dim."""
    return max(4 * floor_fourth_root(n), 128)


@dataclass(frozen=True)
class Covariance:
    """Population covariance of the truncated coefficient vector.

    theta = 0 gives the diagonal matrix of eigenvalue weights.  A nonzero
    theta applies one Givens rotation of angle theta to every coefficient
    pair (2k-1, 2k), which keeps the spectrum but mixes basis directions.
    """

    model: sequences.SequenceModel
    dim: int
    theta: float = 0.0

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not math.isfinite(self.theta):
            raise ValueError("theta must be finite")

    @property
    def is_diagonal(self) -> bool:
        return self.theta == 0.0

    def eigenvalues(self) -> np.ndarray:
        return sequences.gamma_array(self.model, self.dim)

    def matrix(self) -> np.ndarray:
        lam = self.eigenvalues()
        if self.is_diagonal:
            return np.diag(lam)
        g = np.diag(lam)
        c, s = math.cos(self.theta), math.sin(self.theta)
        rot = np.eye(self.dim)
        for k in range(self.dim // 2):
            i = 2 * k
            rot[i, i] = c
            rot[i, i + 1] = -s
            rot[i + 1, i] = s
            rot[i + 1, i + 1] = c
        return rot @ g @ rot.T

    def effective_d(self) -> float:
        """Smallest link constant for which the quadratic-form sandwich
        d^-2 ||h||^2_{gamma^2} <= ||T h||^2 <= d^2 ||h||^2_{gamma^2} holds.

        Computed per rotated pair from the generalized eigenvalues of the
        squared-weight forms; 1 for the diagonal construction.
        """
        if self.is_diagonal:
            return 1.0
        lam2 = self.eigenvalues() ** 2
        c, s = math.cos(self.theta), math.sin(self.theta)
        rot2 = np.array([[c, -s], [s, c]])
        d = 1.0
        for k in range(self.dim // 2):
            w = np.diag(lam2[2 * k : 2 * k + 2])
            b = rot2.T @ w @ rot2
            mu = np.linalg.eigvals(np.linalg.solve(b, w)).real
            d = max(d, math.sqrt(max(mu.max(), 1.0 / mu.min())))
        return float(d)


@dataclass(frozen=True)
class SimConfig:
    """Sampling configuration; J defaults to ``default_truncation(n)``."""

    n: int
    sigma: float
    seed: int
    model: sequences.SequenceModel
    J: Optional[int] = None
    slope_scale: float = DEFAULT_SLOPE_SCALE
    mixing: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        # sigma = 0 and slope_scale = 0 are degenerate but allowed so that
        # noiseless / zero-signal sanity studies can run
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise ValueError("sigma must be a non-negative real")
        if not (0.0 <= self.slope_scale <= 1.0):
            raise ValueError("slope_scale must lie in [0, 1]")
        if self.J is None:
            object.__setattr__(self, "J", default_truncation(self.n))
        if self.J < 4 * floor_fourth_root(self.n):
            raise ValueError(
                f"J = {self.J} is below 4 * floor(n^(1/4)) = "
                f"{4 * floor_fourth_root(self.n)}"
            )

    def covariance(self) -> Covariance:
        return Covariance(self.model, self.J, self.mixing)


@dataclass(frozen=True, eq=False)
class SlopeSpec:
    """A concrete slope, stored as truncated basis coefficients."""

    coeffs: np.ndarray
    true_norm_beta_sq: float
    model: sequences.SequenceModel

    @property
    def dim(self) -> int:
        return len(self.coeffs)


@dataclass(eq=False)
class Dataset:
    """n response/regressor pairs with the regressors as coefficient rows."""

    y: np.ndarray
    x: np.ndarray
    config: Optional[SimConfig] = None

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=np.float64)
        self.x = np.asarray(self.x, dtype=np.float64)
        if self.y.ndim != 1 or self.x.ndim != 2 or len(self.y) != len(self.x):
            raise ValueError("y must be (n,), x must be (n, J)")
        if not (np.all(np.isfinite(self.y)) and np.all(np.isfinite(self.x))):
            raise ValueError("dataset entries must all be finite")
        if self.config is not None:
            if len(self.y) != self.config.n or self.x.shape[1] != self.config.J:
                raise ValueError("dataset shape does not match its config")

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def dim(self) -> int:
        return self.x.shape[1]


def make_slope(model, J: int, slope_scale: float = DEFAULT_SLOPE_SCALE) -> SlopeSpec:
    """Canonical smooth-decay slope, rescaled to sit strictly inside the
    ellipsoid: sum_j beta_j [slope]_j^2 = slope_scale * r exactly.

    The raw shape is j^-(p+1) in the polynomial-regularity regimes and
    exp(-(j^(2p)-1)/2) / j when the regularity weights are exponential; both
    give beta-weighted squares proportional to j^-2.
    """
    if J < 1:
        raise ValueError("J must be >= 1")
    if not (0.0 <= slope_scale <= 1.0):
        raise ValueError("slope_scale must lie in [0, 1]")
    j = np.arange(1, J + 1, dtype=np.float64)
    if isinstance(model, sequences.TabulatedSequenceModel):
        # unvalidated hook: same beta-weighted j^-2 shape, radius 1
        log_raw = -np.log(j) - sequences.log_beta_array(model, J) / 2.0
    elif model.regime is sequences.Regime.EP:
        log_raw = -(j ** (2.0 * model.p) - 1.0) / 2.0 - np.log(j)
    else:
        log_raw = -(model.p + 1.0) * np.log(j)
    # beta-weighted squares in log space; analytically j^-2 for every regime
    log_w = sequences.log_beta_array(model, J) + 2.0 * log_raw
    with np.errstate(under="ignore"):
        weights = np.exp(log_w)
        raw = np.exp(log_raw)
    total = math.fsum(weights.tolist())
    radius = getattr(model, "r", 1.0)
    scale = math.sqrt(slope_scale * radius / total)
    coeffs = scale * raw
    norm_sq = math.fsum((weights * scale * scale).tolist())
    return SlopeSpec(coeffs=coeffs, true_norm_beta_sq=norm_sq, model=model)


def draw_dataset(config: SimConfig, slope: SlopeSpec) -> Dataset:
    """One i.i.d. sample of size n, fully determined by ``config.seed``."""
    if slope.dim != config.J:
        raise ValueError(
            f"slope has {slope.dim} coefficients, config expects {config.J}"
        )
    rng = np.random.default_rng(config.seed)
    lam = sequences.gamma_array(config.model, config.J)
    x = rng.standard_normal((config.n, config.J)) * np.sqrt(lam)
    if config.mixing != 0.0:
        c, s = math.cos(config.mixing), math.sin(config.mixing)
        for k in range(config.J // 2):
            i = 2 * k
            a, b = x[:, i].copy(), x[:, i + 1].copy()
            x[:, i] = c * a - s * b
            x[:, i + 1] = s * a + c * b
    eps = rng.standard_normal(config.n)
    y = x @ slope.coeffs + config.sigma * eps
    return Dataset(y=y, x=x, config=config)


@dataclass(frozen=True)
class TrueValue:
    """Functional value on the truncated slope plus a truncation-tail bound."""

    value: float
    tail_bound: float


def true_value(spec, slope: SlopeSpec) -> TrueValue:
    """Evaluate the functional on the slope's stored coefficients.

    The tail bound is Cauchy-Schwarz against the ellipsoid:
    sqrt(r) * sqrt(sum_{j > J} [l]_j^2 / beta_j), infinite when that sum
    diverges for the regime in force.
    """
    from . import oracle  # deferred: oracle depends on this module's types

    val = float(functionals.coefficients(spec, slope.dim) @ slope.coeffs)
    try:
        tail = oracle.ell_weight_tail(slope.model, spec, slope.dim)
    except oracle.DivergentTailError:
        return TrueValue(value=val, tail_bound=math.inf)
    return TrueValue(value=val, tail_bound=math.sqrt(slope.model.r * max(tail, 0.0)))


def save_dataset_csv(data: Dataset, path) -> None:
    """Write ``y,x1..xJ`` rows with shortest round-trip float formatting."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["y"] + [f"x{j}" for j in range(1, data.dim + 1)])
        for i in range(data.n):
            writer.writerow([fmt(float(data.y[i]))] + [fmt(float(v)) for v in data.x[i]])


def load_dataset_csv(path) -> Dataset:
    """Read a dataset written by :func:`save_dataset_csv` (exact round trip)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0] != "y":
            raise ValueError(f"{path}: expected header starting with 'y'")
        rows = [[float(v) for v in row] for row in reader if row]
    arr = np.asarray(rows, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != len(header):
        raise ValueError(f"{path}: ragged or empty dataset")
    return Dataset(y=arr[:, 0], x=arr[:, 1:], config=None)
