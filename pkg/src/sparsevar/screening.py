"""Sure-independence screening and the iterated screen-then-select driver.

The driver alternates marginal screening with penalized fits until the
selected support reaches a fixed point. For a VAR all K equations share one
design, so fit_var runs them in lockstep on a shared Gram system; running one
equation alone (iterated_sis) is the K=1 case of the same engine.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import penalty as _pen
from . import varcore
from .errors import NumericError


@dataclass
class ScreeningResult:
    """Marginal scores plus the ranking and kept set they induce."""

    scores: np.ndarray
    ranked: np.ndarray
    kept: np.ndarray


@dataclass
class IterationTrace:
    """Per-fit records of the iterated screening loop for one equation.

    Attributes:
        records: one (screened_set_size, selected_support_tuple) per round.
            Multi-round traces that stop at a fixed point always end with two
            equal supports; when the stop came from a repeated screened set,
            the final record is the provably identical repeat rather than a
            recomputed fit. A trace stays single-record when the very first
            re-screen reproduces the initial screened set.
        reason: "fixed_point" when the selected set stabilized, "max_iter"
            otherwise.
    """

    records: list
    reason: str


def sis_scores(X, y) -> np.ndarray:
    """Component-wise regression scores omega = X'y.

    The caller standardizes X (the scores are only comparable across columns
    on a common scale).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise ValueError("non-finite values in X or y")
    return X.T @ y


def ridge_scores(X, y, lam: float) -> np.ndarray:
    """Ridge variant omega_lam = (X'X + lam I)^{-1} X'y.

    Interpolates between least squares (lam -> 0) and, after scaling by lam,
    the marginal scores (lam -> inf).
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise ValueError("non-finite values in X or y")
    gram = X.T @ X + lam * np.eye(X.shape[1])
    try:
        return np.linalg.solve(gram, X.T @ y)
    except np.linalg.LinAlgError as exc:
        raise NumericError("ridge system is singular") from exc


def _rank_by_magnitude(scores: np.ndarray) -> np.ndarray:
    """Indices by |score| descending; ties keep ascending index order."""
    return np.argsort(-np.abs(scores), kind="stable")


def sis_select(scores, d_keep: int) -> np.ndarray:
    """Indices of the d_keep largest |score|, ascending order."""
    scores = np.asarray(scores, dtype=float)
    if not 1 <= d_keep <= scores.size:
        raise ValueError(f"d_keep must be in [1, {scores.size}], got {d_keep}")
    return np.sort(_rank_by_magnitude(scores)[:d_keep])


def screen(X, y, d_keep: int) -> ScreeningResult:
    """Score, rank, and keep the top d_keep columns."""
    scores = sis_scores(X, y)
    ranked = _rank_by_magnitude(scores)
    return ScreeningResult(scores=scores, ranked=ranked,
                           kept=np.sort(ranked[:d_keep]))


def default_d_keep(n_rows: int, d: int) -> int:
    """floor(n / log n), clamped to [1, d]."""
    if n_rows >= 3:
        guess = int(math.floor(n_rows / math.log(n_rows)))
    else:
        guess = 1
    return max(1, min(guess, d))


def _top_fill(resid_scores: np.ndarray, support: np.ndarray, d_keep: int) -> tuple:
    """Support plus the best-scoring non-support indices, filled to d_keep."""
    scores = np.abs(resid_scores)
    if support.size:
        scores = scores.copy()
        scores[support] = -1.0
    room = d_keep - support.size
    if room <= 0:
        return tuple(np.sort(support))
    extra = _rank_by_magnitude(scores)[:room]
    return tuple(np.sort(np.concatenate([support, extra])))


def _iterated_sis_batch(X, Y, kind: str, d_keep: int | None, max_iter: int,
                        lam: float | None, a: float, n_lambda: int,
                        lambda_ratio: float, tol: float, cd_max_iter: int,
                        intercept: bool = True, standardize: bool = True):
    """Iterated SIS for every column of Y against the shared design X.

    Per round and equation: fit the penalty restricted to the kept set (lambda
    fixed at `lam`, or chosen per equation by BIC along a fresh path when lam
    is None), take the nonzero support, then re-screen the residual scores
    X'r with the support always retained. An equation stops when its support
    repeats or its kept set would repeat; the latter forces an identical next
    fit, which is appended to the trace without being recomputed.

    Returns:
        coef (d, K) on the original scale, intercepts (K,), supports (list of
        ascending index tuples), traces (list of IterationTrace), converged
        (K,) solver flags from each equation's final fit.
    """
    Xs, Yc, col_mean, col_scale, y_mean = _pen._standardize(X, Y, intercept, standardize)
    n_rows, d = Xs.shape
    n_eq = Yc.shape[1]
    G, C, y_sqnorm = _pen._gram_system(Xs, Yc)
    if d_keep is None:
        d_keep = default_d_keep(n_rows, d)
    d_keep = max(1, min(int(d_keep), d))
    ratio_grid = lambda_ratio ** np.linspace(0.0, 1.0, n_lambda)

    kept = [tuple(np.sort(_rank_by_magnitude(C[:, k])[:d_keep])) for k in range(n_eq)]
    beta_std = np.zeros((d, n_eq))
    supports: list = [None] * n_eq
    records: list = [[] for _ in range(n_eq)]
    reasons: list = [None] * n_eq
    converged = np.ones(n_eq, dtype=bool)
    active = list(range(n_eq))

    for _ in range(max_iter):
        if not active:
            break
        cols = np.asarray(active, dtype=int)
        C_sub = C[:, cols]
        mask = np.zeros((d, cols.size), dtype=bool)
        for pos, k in enumerate(active):
            mask[list(kept[k]), pos] = True

        if lam is None:
            lam_max = 2.0 * np.max(np.abs(C_sub) * mask, axis=0)
            grids = np.maximum(lam_max, 1e-12)[None, :] * ratio_grid[:, None]
            best = _pen._path_bic_multi(G, C_sub, y_sqnorm[cols], n_rows, grids,
                                        mask, kind, a, tol, cd_max_iter)
            beta_sub, conv_sub = best["beta"], best["converged"]
        else:
            lam_vec = np.full(cols.size, float(lam))
            beta_sub, _, conv_sub = _pen._solve_multi(G, C_sub, lam_vec, kind, a,
                                                      mask, tol, cd_max_iter)

        resid_scores = C_sub - G @ beta_sub
        still = []
        for pos, k in enumerate(active):
            support = tuple(np.nonzero(beta_sub[:, pos])[0])
            records[k].append((len(kept[k]), support))
            beta_std[:, k] = beta_sub[:, pos]
            converged[k] = conv_sub[pos]
            if supports[k] is not None and support == supports[k]:
                supports[k] = support
                reasons[k] = "fixed_point"
                continue
            supports[k] = support
            new_kept = _top_fill(resid_scores[:, pos],
                                 np.asarray(support, dtype=int), d_keep)
            if new_kept == kept[k]:
                # Identical kept set forces an identical next fit; record that
                # provable repeat so the trace ends on the fixed point, except
                # when the very first screen is already stationary.
                if len(records[k]) >= 2:
                    records[k].append((len(kept[k]), support))
                reasons[k] = "fixed_point"
                continue
            kept[k] = new_kept
            still.append(k)
        active = still

    for k in active:
        reasons[k] = "max_iter"

    coef = beta_std / col_scale[:, None]
    intercepts = y_mean - col_mean @ coef if intercept else np.zeros(n_eq)
    traces = [IterationTrace(records=records[k], reason=reasons[k]) for k in range(n_eq)]
    return coef, np.asarray(intercepts, dtype=float).ravel(), supports, traces, converged


def iterated_sis(X, y, penalty_kind: str = "lasso", d_keep: int | None = None,
                 max_iter: int = 10, lam: float | None = None,
                 a: float = _pen.DEFAULT_SCAD_A, n_lambda: int = 25,
                 lambda_ratio: float = 1e-2, tol: float = _pen.DEFAULT_TOL,
                 cd_max_iter: int = _pen.DEFAULT_MAX_ITER):
    """Iterated screening for a single regression.

    Args:
        X: n x d design (raw scale; standardized internally).
        y: n-vector target.
        penalty_kind: "lasso" or "scad".
        d_keep: screening size; default floor(n / log n) clamped to [1, d].
        max_iter: cap on screen/fit rounds (exceeding it is recorded, not fatal).
        lam: fixed penalty level; None selects per fit by BIC along a path.
        a: SCAD shape parameter.
        n_lambda / lambda_ratio: path settings for the BIC selection.

    Returns:
        (support, fit, trace): ascending index tuple of selected columns
        (possibly empty: a valid null model), a PenalizedFit with original
        scale coefficients, and the IterationTrace.
    """
    if penalty_kind not in ("lasso", "scad"):
        raise ValueError(f"penalty_kind must be 'lasso' or 'scad', got {penalty_kind!r}")
    y = np.asarray(y, dtype=float).ravel()
    coef, intercepts, supports, traces, converged = _iterated_sis_batch(
        X, y[:, None], penalty_kind, d_keep, max_iter, lam, a, n_lambda,
        lambda_ratio, tol, cd_max_iter)
    fit = _pen.PenalizedFit(coef=coef[:, 0], intercept=float(intercepts[0]),
                            converged=bool(converged[0]), n_sweeps=0)
    return supports[0], fit, traces[0]


@dataclass
class VarFit:
    """A VAR estimated equation-by-equation with iterated SIS.

    Attributes:
        coeffs: assembled VarCoefficients.
        supports: per-equation tuples of selected design columns (design
            order: variable j at lag l sits at column (l-1)*K + j).
        traces: per-equation IterationTrace.
        n_rows: rows in the lagged regression sample (T - p).
    """

    coeffs: varcore.VarCoefficients
    supports: list
    traces: list
    n_rows: int


def fit_var(returns, p: int, kind: str = "lasso", d_keep: int | None = None,
            lam: float | None = None, a: float = _pen.DEFAULT_SCAD_A,
            n_lambda: int = 25, lambda_ratio: float = 1e-2, max_iter: int = 10,
            tol: float = _pen.DEFAULT_TOL,
            cd_max_iter: int = _pen.DEFAULT_MAX_ITER) -> VarFit:
    """Estimate a sparse VAR(p) by per-equation iterated SIS on a shared design.

    All equations run in lockstep over one standardized Gram system, which is
    what makes rolling estimation on wide panels tractable; results are
    identical to looping iterated_sis over the equations.
    """
    if kind not in ("lasso", "scad"):
        raise ValueError(f"kind must be 'lasso' or 'scad', got {kind!r}")
    y_mat, z = varcore.build_design(returns, p)
    x = z[:, 1:]
    coef, intercepts, supports, traces, _ = _iterated_sis_batch(
        x, y_mat, kind, d_keep, max_iter, lam, a, n_lambda, lambda_ratio,
        tol, cd_max_iter)
    k = y_mat.shape[1]
    mat = np.vstack([intercepts[None, :], coef])
    coeffs = varcore.VarCoefficients.from_matrix(mat, k)
    return VarFit(coeffs=coeffs, supports=supports, traces=traces,
                  n_rows=y_mat.shape[0])
