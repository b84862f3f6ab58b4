"""VAR(p) core: design matrices, residuals, MA transformation, stability, simulation.

The model is y_t = nu + A_1 y_{t-1} + ... + A_p y_{t-p} + u_t with K series.
Everything here works on plain float arrays; panel bookkeeping lives in
`dataset`.
"""
from __future__ import annotations

import datetime
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, NumericError


def _as_values(data) -> np.ndarray:
    """Accept a ReturnPanel (anything with .values) or a T x K array."""
    values = getattr(data, "values", data)
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"expected a T x K matrix, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class VarSpec:
    """Shape of a VAR model: K series, p lags, optional intercept."""

    n_series: int
    n_lags: int
    include_intercept: bool = True

    def __post_init__(self):
        if self.n_series < 1:
            raise ValueError("n_series must be >= 1")
        if self.n_lags < 1:
            raise ValueError("n_lags must be >= 1")


@dataclass
class VarCoefficients:
    """Estimated or true coefficients (nu, A_1, ..., A_p).

    Attributes:
        intercept: K-vector nu.
        lags: (p, K, K) array; lags[i] is A_{i+1}.
    """

    intercept: np.ndarray
    lags: np.ndarray

    def __post_init__(self):
        self.intercept = np.asarray(self.intercept, dtype=float).ravel()
        self.lags = np.asarray(self.lags, dtype=float)
        if self.lags.ndim != 3 or self.lags.shape[1] != self.lags.shape[2]:
            raise ValueError("lags must be a (p, K, K) array")
        if self.lags.shape[1] != self.intercept.shape[0]:
            raise ValueError("intercept length must match lag matrix size")

    @property
    def n_series(self) -> int:
        return self.intercept.shape[0]

    @property
    def n_lags(self) -> int:
        return self.lags.shape[0]

    def to_matrix(self) -> np.ndarray:
        """Stack as the (1 + K*p) x K regression matrix.

        Column k holds equation k's coefficients in design order
        (1, y_{t-1}, ..., y_{t-p}), so Y approx Z @ to_matrix().
        """
        k = self.n_series
        blocks = [self.intercept[None, :]]
        for lag in range(self.n_lags):
            blocks.append(self.lags[lag].T)
        return np.vstack(blocks).reshape(1 + k * self.n_lags, k)

    @classmethod
    def from_matrix(cls, mat: np.ndarray, n_series: int) -> "VarCoefficients":
        mat = np.asarray(mat, dtype=float)
        if (mat.shape[0] - 1) % n_series != 0 or mat.shape[1] != n_series:
            raise ValueError(f"coefficient matrix shape {mat.shape} inconsistent with K={n_series}")
        p = (mat.shape[0] - 1) // n_series
        intercept = mat[0].copy()
        lags = np.empty((p, n_series, n_series))
        for lag in range(p):
            lags[lag] = mat[1 + lag * n_series : 1 + (lag + 1) * n_series].T
        return cls(intercept=intercept, lags=lags)

    def to_dict(self) -> dict:
        return {
            "K": self.n_series,
            "p": self.n_lags,
            "nu": self.intercept.tolist(),
            "lags": self.lags.tolist(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "VarCoefficients":
        k = int(payload["K"])
        p = int(payload["p"])
        coeffs = cls(intercept=np.asarray(payload["nu"], dtype=float),
                     lags=np.asarray(payload["lags"], dtype=float))
        if coeffs.n_series != k or coeffs.n_lags != p:
            raise ValueError("K/p fields disagree with nu/lags shapes")
        return coeffs


@dataclass
class ResidualSet:
    """Residual matrix U with one row per fitted observation."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("residuals must be a (T-p) x K matrix")

    @property
    def n_used(self) -> int:
        return self.values.shape[0]


@dataclass
class MACoefficients:
    """MA terms B_0..B_{Q-1} of the infinite moving-average form."""

    terms: np.ndarray

    def __post_init__(self):
        self.terms = np.asarray(self.terms, dtype=float)
        if self.terms.ndim != 3 or self.terms.shape[1] != self.terms.shape[2]:
            raise ValueError("terms must be a (Q, K, K) array")

    @property
    def horizon(self) -> int:
        return self.terms.shape[0]


def build_design(returns, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Stack the lagged regression system for a VAR(p).

    Args:
        returns: ReturnPanel or T x K array of stationary observations.
        p: lag order, >= 1.

    Returns:
        (Y, Z) where Y is (T-p) x K targets and Z is (T-p) x (1 + K*p) with
        rows (1, y_{t-1}, ..., y_{t-p}); regressing column k of Y on Z
        recovers row k of (nu | A_1 | ... | A_p).
    """
    values = _as_values(returns)
    n_obs, k = values.shape
    if p < 1:
        raise ValueError("p must be >= 1")
    if n_obs <= p:
        raise InsufficientDataError(f"need more than p={p} rows, got {n_obs}")
    y = values[p:]
    blocks = [np.ones((n_obs - p, 1))]
    for lag in range(1, p + 1):
        blocks.append(values[p - lag : n_obs - lag])
    z = np.hstack(blocks)
    return y, z


def residuals(returns, coeffs: VarCoefficients) -> ResidualSet:
    """Innovations u_t = y_t - nu - sum_i A_i y_{t-i} for t = p..T-1."""
    values = _as_values(returns)
    if values.shape[1] != coeffs.n_series:
        raise ValueError(f"panel has {values.shape[1]} series, coefficients expect {coeffs.n_series}")
    y, z = build_design(values, coeffs.n_lags)
    return ResidualSet(y - z @ coeffs.to_matrix())


def residual_covariance(resid: ResidualSet) -> np.ndarray:
    """Average outer product H = (1/(T-p)) sum_t u_t u_t'.

    Uses the rows actually regressed as the divisor, with no degrees-of-freedom
    correction. Output is exactly symmetric.
    """
    u = resid.values
    if u.shape[0] < 1:
        raise InsufficientDataError("empty residual set")
    h = u.T @ u / u.shape[0]
    return (h + h.T) / 2.0


def ma_coefficients(coeffs: VarCoefficients, horizon: int) -> MACoefficients:
    """MA terms by the recursion B_i = sum_{j=1..i} B_{i-j} A_j, B_0 = I."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    k, p = coeffs.n_series, coeffs.n_lags
    terms = np.zeros((horizon, k, k))
    terms[0] = np.eye(k)
    for i in range(1, horizon):
        acc = np.zeros((k, k))
        for j in range(1, min(i, p) + 1):
            acc += terms[i - j] @ coeffs.lags[j - 1]
        terms[i] = acc
    return MACoefficients(terms)


def companion_matrix(coeffs: VarCoefficients) -> np.ndarray:
    """Kp x Kp companion form stacking (A_1 ... A_p) over a shifted identity."""
    k, p = coeffs.n_series, coeffs.n_lags
    comp = np.zeros((k * p, k * p))
    comp[:k] = np.hstack([coeffs.lags[i] for i in range(p)])
    if p > 1:
        comp[k:, : k * (p - 1)] = np.eye(k * (p - 1))
    return comp


def is_stable(coeffs: VarCoefficients) -> tuple[bool, float]:
    """Stability flag plus the companion-matrix spectral radius."""
    radius = float(np.max(np.abs(np.linalg.eigvals(companion_matrix(coeffs)))))
    return radius < 1.0, radius


def simulate(coeffs: VarCoefficients, sigma: np.ndarray, n_obs: int,
             burn_in: int = 200, seed: int = 0):
    """Simulate a stable Gaussian VAR path.

    Args:
        coeffs: stable coefficients.
        sigma: K x K positive-definite innovation covariance.
        n_obs: rows kept after discarding burn_in.
        burn_in: leading draws discarded to washout the zero start.
        seed: RNG seed; same seed gives an identical panel.

    Returns:
        ReturnPanel tagged "diff" with synthetic daily dates and no missing
        cells.

    Raises:
        NumericError: sigma not positive definite or coefficients unstable.
    """
    from .dataset import ReturnPanel

    sigma = np.asarray(sigma, dtype=float)
    k, p = coeffs.n_series, coeffs.n_lags
    if sigma.shape != (k, k):
        raise ValueError(f"sigma must be {k} x {k}")
    stable, radius = is_stable(coeffs)
    if not stable:
        raise NumericError(f"coefficients unstable (spectral radius {radius:.4f})")
    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise NumericError("sigma is not positive definite") from exc
    if n_obs < 1:
        raise ValueError("n_obs must be >= 1")

    rng = np.random.default_rng(seed)
    total = n_obs + burn_in
    shocks = rng.standard_normal((total, k)) @ chol.T
    path = np.zeros((total + p, k))
    for t in range(p, total + p):
        acc = coeffs.intercept + shocks[t - p]
        for lag in range(1, p + 1):
            acc = acc + coeffs.lags[lag - 1] @ path[t - lag]
        path[t] = acc
    values = path[p + burn_in :]

    start = datetime.date(2000, 1, 1)
    dates = [start + datetime.timedelta(days=i) for i in range(n_obs)]
    symbols = [f"S{i:03d}" for i in range(k)]
    return ReturnPanel(dates=dates, values=values, symbols=symbols,
                       transform_tag="diff",
                       missing_mask=np.zeros((n_obs, k), dtype=bool))


def forecast_one_step(coeffs: VarCoefficients, history) -> np.ndarray:
    """One-step-ahead point forecast nu + sum_i A_i y_{t+1-i}.

    Args:
        coeffs: fitted coefficients.
        history: array of past observations, rows oldest to newest; only the
            last p rows are used.
    """
    values = _as_values(history)
    p = coeffs.n_lags
    if values.shape[0] < p:
        raise InsufficientDataError(f"need at least p={p} history rows, got {values.shape[0]}")
    if values.shape[1] != coeffs.n_series:
        raise ValueError("history width does not match coefficient size")
    out = coeffs.intercept.copy()
    for lag in range(1, p + 1):
        out = out + coeffs.lags[lag - 1] @ values[-lag]
    return out
