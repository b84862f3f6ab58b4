"""Model comparison: information criteria, lag-order selection, rolling
out-of-sample forecast evaluation, and the Welch two-sample test."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as _sstats

from . import screening, varcore
from .errors import InputError, InsufficientDataError, NumericError, SparseVarError

_ESTIMATOR_KINDS = {
    "lasso": "lasso",
    "scad": "scad",
    "iterated-sis-lasso": "lasso",
    "iterated-sis-scad": "scad",
}


def estimator_kind(tag: str) -> str:
    """Penalty kind for an estimator tag ('lasso'/'scad' or the long names)."""
    try:
        return _ESTIMATOR_KINDS[tag]
    except KeyError:
        raise InputError(f"unknown estimator {tag!r}; expected one of "
                         f"{sorted(_ESTIMATOR_KINDS)}") from None


def canonical_tag(tag: str) -> str:
    return f"iterated-sis-{estimator_kind(tag)}"


@dataclass
class CriteriaRow:
    """One model's information criteria."""

    estimator: str
    p: int
    aic: float
    hq: float
    bic: float


@dataclass
class LagSelection:
    """select_lag output: per-p criteria plus the argmin per criterion."""

    rows: list
    best: dict
    skipped: list = field(default_factory=list)


@dataclass
class FmseReport:
    """Rolling out-of-sample evaluation of one model."""

    estimator: str
    p: int
    fmse: float
    step_errors: np.ndarray

    def __post_init__(self):
        self.step_errors = np.asarray(self.step_errors, dtype=float)


def information_criteria(H, K: int, p: int, T: int, df: int | None = None):
    """AIC/HQ/BIC of a fitted VAR from its residual covariance.

    aic = log|H| + (2/T) * df
    hq  = log|H| + (2 log log T / T) * df
    bic = log|H| + (log T / T) * df

    Args:
        H: K x K residual covariance, positive definite.
        K: variable count (checked against H).
        p: lag order.
        T: sample size used in the penalty factors.
        df: parameter count; default is the nominal p*K^2. Pass the selected
            nonzero count for the sparse variant.

    Returns:
        (aic, hq, bic).
    """
    H = np.asarray(H, dtype=float)
    if H.shape != (K, K):
        raise ValueError(f"H must be {K} x {K}, got {H.shape}")
    if T < 3:
        raise ValueError("T must be >= 3 (log log T undefined below)")
    sign, logdet = np.linalg.slogdet(H)
    if sign <= 0 or not np.isfinite(logdet):
        raise NumericError("residual covariance is singular; log-determinant undefined")
    if df is None:
        df = p * K * K
    aic = logdet + (2.0 / T) * df
    hq = logdet + (2.0 * np.log(np.log(T)) / T) * df
    bic = logdet + (np.log(T) / T) * df
    return float(aic), float(hq), float(bic)


def select_lag(returns, p_max: int, estimator: str = "iterated-sis-lasso",
               sparse_df: bool = False, **fit_kwargs) -> LagSelection:
    """Fit p = 1..p_max with the chosen estimator and rank by criteria.

    Each candidate is fit on its own T - p rows and the criteria use that
    effective sample size. Estimation failures are recorded and the p skipped.

    Returns:
        LagSelection with rows, best = {"aic": p, "hq": p, "bic": p}, and the
        skipped list of (p, reason).
    """
    if p_max < 1:
        raise ValueError("p_max must be >= 1")
    kind = estimator_kind(estimator)
    tag = canonical_tag(estimator)
    values = varcore._as_values(returns)
    if values.shape[0] <= p_max:
        raise InsufficientDataError(f"need more than p_max={p_max} rows")
    rows: list = []
    skipped: list = []
    for p in range(1, p_max + 1):
        try:
            fit = screening.fit_var(values, p, kind=kind, **fit_kwargs)
            resid = varcore.residuals(values, fit.coeffs)
            H = varcore.residual_covariance(resid)
            df = None
            if sparse_df:
                df = int(np.count_nonzero(fit.coeffs.lags))
            aic, hq, bic = information_criteria(H, values.shape[1], p, fit.n_rows, df=df)
        except (SparseVarError, np.linalg.LinAlgError, ValueError) as exc:
            skipped.append((p, str(exc)))
            continue
        rows.append(CriteriaRow(estimator=tag, p=p, aic=aic, hq=hq, bic=bic))
    if not rows:
        raise NumericError("estimation failed at every candidate p")
    best = {crit: min(rows, key=lambda r: getattr(r, crit)).p
            for crit in ("aic", "hq", "bic")}
    return LagSelection(rows=rows, best=best, skipped=skipped)


def rolling_fmse(returns, split_index: int, estimator: str = "iterated-sis-lasso",
                 p: int = 1, horizon: int = 1, **fit_kwargs) -> FmseReport:
    """Expanding-window one-step forecast mean squared error.

    For each out-of-sample time t >= split_index the model is refit on all
    rows before t and the forecast error ||yhat_t - y_t||^2 / K accumulated.

    Args:
        returns: panel or array, T x K.
        split_index: first out-of-sample row; must leave at least p+1
            in-sample rows and one out-of-sample row.
        estimator: estimator tag.
        p: lag order.
        horizon: only 1 is supported (iterated multi-step forecasts are out
            of scope).
        **fit_kwargs: forwarded to screening.fit_var.
    """
    if horizon != 1:
        raise ValueError("only one-step-ahead evaluation is supported")
    kind = estimator_kind(estimator)
    values = varcore._as_values(returns)
    n_obs, k = values.shape
    if not (p + 1 <= split_index <= n_obs - 1):
        raise InputError(f"split_index must be in [{p + 1}, {n_obs - 1}], got {split_index}")
    errors = np.empty(n_obs - split_index)
    for i, t in enumerate(range(split_index, n_obs)):
        fit = screening.fit_var(values[:t], p, kind=kind, **fit_kwargs)
        forecast = varcore.forecast_one_step(fit.coeffs, values[t - p : t])
        diff = forecast - values[t]
        errors[i] = float(diff @ diff) / k
    return FmseReport(estimator=canonical_tag(estimator), p=p,
                      fmse=float(errors.mean()), step_errors=errors)


def welch_t_test(a, b):
    """Welch two-sample t-test, two-sided.

    t = (mean_a - mean_b) / sqrt(s_a^2/n_a + s_b^2/n_b), df by
    Welch-Satterthwaite, p from the Student-t distribution.

    Degenerate convention: both variances zero -> p = 1 when the means are
    equal, p = 0 otherwise (df reported as n_a + n_b - 2).

    Returns:
        (t, df, p_value).
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size < 2 or b.size < 2:
        raise InputError("welch_t_test needs at least 2 observations per sample")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise InputError("non-finite values in the samples")
    n_a, n_b = a.size, b.size
    var_a, var_b = a.var(ddof=1), b.var(ddof=1)
    mean_diff = a.mean() - b.mean()
    if var_a == 0.0 and var_b == 0.0:
        df = float(n_a + n_b - 2)
        if mean_diff == 0.0:
            return 0.0, df, 1.0
        return float(np.sign(mean_diff) * np.inf), df, 0.0
    se_sq = var_a / n_a + var_b / n_b
    t = mean_diff / np.sqrt(se_sq)
    df = se_sq ** 2 / ((var_a / n_a) ** 2 / (n_a - 1) + (var_b / n_b) ** 2 / (n_b - 1))
    p = 2.0 * float(_sstats.t.sf(abs(t), df))
    return float(t), float(df), min(p, 1.0)


def criteria_to_csv(rows, stream) -> None:
    """Criteria table, one row per model (estimator, p, AIC, HQ, BIC)."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["model", "p", "aic", "hq", "bic"])
    for row in rows:
        writer.writerow([row.estimator, row.p,
                         format(row.aic, ".17g"), format(row.hq, ".17g"),
                         format(row.bic, ".17g")])


def fmse_to_csv(reports, stream) -> None:
    """FMSE grid, rows = lag order, one column per estimator."""
    tags: list = []
    for rep in reports:
        if rep.estimator not in tags:
            tags.append(rep.estimator)
    lags = sorted({rep.p for rep in reports})
    cell = {(rep.p, rep.estimator): rep.fmse for rep in reports}
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["lag"] + tags)
    for p in lags:
        row = [str(p)]
        for tag in tags:
            val = cell.get((p, tag))
            row.append("" if val is None else format(val, ".17g"))
        writer.writerow(row)
