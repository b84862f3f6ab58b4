"""Penalized least squares: lasso and SCAD primitives, coordinate descent,
lambda paths and BIC selection.

The objective is ||y - b0*1 - X b||^2 + penalty(b) with an unpenalized
intercept; no 1/n factor, so on orthonormal designs the lasso solution is
soft_threshold(x_j'y, lambda/2).

The coordinate-descent engine works on a precomputed Gram system and updates
many regression equations in lockstep (shared design, per-equation targets,
penalty levels and support masks). Per-equation results match running each
equation alone to rounding error: updates for one equation never read
another's coefficients, and an equation freezes the moment its own sweep
converges, so the update sequences coincide (only BLAS summation order for
the batched matrix products differs).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError

DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITER = 10000
DEFAULT_SCAD_A = 3.7


# ---------------------------------------------------------------------------
# scalar (vectorization-friendly) primitives

def soft_threshold(omega, t):
    """sign(omega) * max(|omega| - t, 0); t >= 0."""
    omega = np.asarray(omega, dtype=float)
    out = np.sign(omega) * np.maximum(np.abs(omega) - t, 0.0)
    return float(out) if out.ndim == 0 else out


def scad_threshold(omega, lam: float, a: float = DEFAULT_SCAD_A):
    """SCAD estimator for the scalar penalized quadratic.

    Piecewise in |omega|: soft thresholding up to 2*lambda, a linear
    interpolation region up to a*lambda, identity beyond.
    """
    if a <= 2:
        raise ValueError(f"scad parameter a must be > 2, got {a}")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    omega = np.asarray(omega, dtype=float)
    ab = np.abs(omega)
    soft = np.sign(omega) * np.maximum(ab - lam, 0.0)
    middle = ((a - 1.0) * omega - np.sign(omega) * a * lam) / (a - 2.0)
    out = np.where(ab <= 2.0 * lam, soft, np.where(ab <= a * lam, middle, omega))
    return float(out) if out.ndim == 0 else out


def scad_penalty_derivative(beta, lam: float, a: float = DEFAULT_SCAD_A):
    """p'_lambda(beta) = lambda * { I(beta<=lam) + (a*lam-beta)_+ / ((a-1)lam) I(beta>lam) }.

    Defined for beta > 0 (magnitudes).
    """
    if a <= 2:
        raise ValueError(f"scad parameter a must be > 2, got {a}")
    beta = np.asarray(beta, dtype=float)
    if np.any(beta <= 0):
        raise ValueError("beta must be positive (pass magnitudes)")
    if lam == 0.0:
        out = np.zeros_like(beta)
    else:
        tail = np.maximum(a * lam - beta, 0.0) / ((a - 1.0) * lam)
        out = lam * np.where(beta <= lam, 1.0, tail)
    return float(out) if out.ndim == 0 else out


def _lla_weights(beta_abs: np.ndarray, lam, a: float) -> np.ndarray:
    """scad_penalty_derivative extended to beta = 0 (limit lambda)."""
    lam = np.asarray(lam, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        tail = np.maximum(a * lam - beta_abs, 0.0) / ((a - 1.0) * lam)
    w = np.where(beta_abs <= lam, 1.0, tail)
    return np.where(lam > 0.0, lam * w, 0.0)


# ---------------------------------------------------------------------------
# specs and results

@dataclass(frozen=True)
class PenaltySpec:
    """Penalty kind and solver settings.

    Attributes:
        kind: "lasso" or "scad".
        lam: penalty level, >= 0.
        a: SCAD shape parameter, > 2 (ignored for lasso).
        tol: convergence tolerance on max coefficient change per sweep.
        max_iter: sweep cap per solve.
    """

    kind: str
    lam: float
    a: float = DEFAULT_SCAD_A
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER

    def __post_init__(self):
        if self.kind not in ("lasso", "scad"):
            raise ValueError(f"kind must be 'lasso' or 'scad', got {self.kind!r}")
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.kind == "scad" and self.a <= 2:
            raise ValueError("scad parameter a must be > 2")
        if self.tol <= 0 or self.max_iter < 1:
            raise ValueError("tol must be positive and max_iter >= 1")


@dataclass
class LambdaPath:
    """Strictly decreasing positive penalty levels."""

    values: np.ndarray
    ratio: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or self.values.size < 1:
            raise ValueError("path must be a nonempty 1-d array")
        if np.any(self.values <= 0):
            raise ValueError("path values must be positive")
        if np.any(np.diff(self.values) >= 0):
            raise ValueError("path values must be strictly decreasing")

    @property
    def n_points(self) -> int:
        return self.values.size


@dataclass
class PenalizedFit:
    """Solution of one penalized regression, on the original data scale."""

    coef: np.ndarray
    intercept: float
    converged: bool
    n_sweeps: int
    objective_history: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# standardization and gram systems

def _standardize(X, y, intercept: bool, standardize: bool):
    """Center/scale per the solver conventions.

    With intercept: columns and y are centered. With standardize: columns are
    scaled to unit variance (or unit root-mean-square when not centering).
    Constant columns get scale 1 and simply never activate.

    Returns (Xs, yc, col_mean, col_scale, y_mean).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be 2-d")
    if y.ndim == 1:
        y = y[:, None]
    if y.shape[0] != X.shape[0]:
        raise ValueError("X and y row counts differ")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise ValueError("non-finite values in X or y")
    if intercept:
        col_mean = X.mean(axis=0)
        y_mean = y.mean(axis=0)
    else:
        col_mean = np.zeros(X.shape[1])
        y_mean = np.zeros(y.shape[1])
    Xc = X - col_mean
    if standardize:
        col_scale = np.sqrt(np.mean(Xc * Xc, axis=0))
        col_scale = np.where(col_scale > 0, col_scale, 1.0)
    else:
        col_scale = np.ones(X.shape[1])
    return Xc / col_scale, y - y_mean, col_mean, col_scale, y_mean


def _gram_system(Xs: np.ndarray, yc: np.ndarray):
    """(G, C, y_sqnorm) with G = Xs'Xs, C = Xs'yc (one column per equation)."""
    G = Xs.T @ Xs
    C = Xs.T @ yc
    return G, C, np.sum(yc * yc, axis=0)


# ---------------------------------------------------------------------------
# batched coordinate descent

def _cd_sweeps(G, C, beta, thr, mask, tol, max_iter, objective_sink=None,
               lam_for_objective=None, y_sqnorm=None):
    """Cyclic coordinate descent on the Gram system, all equations in lockstep.

    Args:
        G: (d, d) Gram matrix of the standardized design.
        C: (d, K) cross products X'y, one column per equation.
        beta: (d, K) warm start, updated in place.
        thr: (d, K) soft-threshold levels in gradient units.
        mask: (d, K) boolean; False coefficients are pinned at 0.
        tol: per-sweep max-coefficient-change convergence cutoff.
        max_iter: sweep cap.
        objective_sink: optional list collecting the per-sweep penalized
            objective (needs lam_for_objective and y_sqnorm; single-equation
            debugging aid).

    Returns:
        (n_sweeps, converged (K,) bool). An equation freezes once its own
        sweep change drops below tol, so trajectories match solo runs.
    """
    d, n_eq = C.shape
    diag = np.ascontiguousarray(np.diag(G))
    rows = np.nonzero(mask.any(axis=1) & (diag > 0.0))[0]
    active = np.ones(n_eq, dtype=bool)
    converged = np.zeros(n_eq, dtype=bool)
    beta_ok = mask & (diag[:, None] > 0.0)
    sweeps = 0
    if rows.size == 0:
        return 0, np.ones(n_eq, dtype=bool)
    while sweeps < max_iter:
        sweeps += 1
        sweep_max = np.zeros(n_eq)
        for j in rows:
            gjj = diag[j]
            old = beta[j]
            rho = C[j] - G[j] @ beta + gjj * old
            new = np.sign(rho) * np.maximum(np.abs(rho) - thr[j], 0.0) / gjj
            new = np.where(beta_ok[j] & active, new, old)
            delta = np.abs(new - old)
            np.maximum(sweep_max, delta, out=sweep_max)
            beta[j] = new
        if objective_sink is not None:
            rss = y_sqnorm - 2.0 * np.sum(beta * C, axis=0) + np.sum(beta * (G @ beta), axis=0)
            objective_sink.append(float((rss + lam_for_objective * np.sum(np.abs(beta), axis=0))[0]))
        newly = active & (sweep_max < tol)
        converged |= newly
        active &= ~newly
        if not active.any():
            return sweeps, converged
    return sweeps, converged


def _solve_lasso_multi(G, C, lam, mask, tol, max_iter, warm=None, **debug):
    """Weighted thresholds all equal lam/2; lam is scalar or (K,)."""
    d, n_eq = C.shape
    beta = np.zeros((d, n_eq)) if warm is None else warm
    lam = np.broadcast_to(np.asarray(lam, dtype=float), (n_eq,))
    thr = np.broadcast_to(lam / 2.0, (d, n_eq))
    sweeps, conv = _cd_sweeps(G, C, beta, thr, mask, tol, max_iter,
                              lam_for_objective=lam, **debug)
    return beta, sweeps, conv


def _solve_scad_multi(G, C, lam, a, mask, tol, max_iter, warm=None, outer=5):
    """Local linear approximation: lasso start, then reweighted-l1 rounds."""
    d, n_eq = C.shape
    lam = np.broadcast_to(np.asarray(lam, dtype=float), (n_eq,))
    beta, sweeps, conv = _solve_lasso_multi(G, C, lam, mask, tol, max_iter, warm=warm)
    for _ in range(outer):
        weights = _lla_weights(np.abs(beta), lam[None, :], a)
        prev = beta.copy()
        s, conv = _cd_sweeps(G, C, beta, weights / 2.0, mask, tol, max_iter)
        sweeps += s
        if np.max(np.abs(beta - prev)) < tol:
            break
    return beta, sweeps, conv


def _solve_multi(G, C, lam, kind, a, mask, tol, max_iter, warm=None):
    if kind == "lasso":
        return _solve_lasso_multi(G, C, lam, mask, tol, max_iter, warm=warm)
    return _solve_scad_multi(G, C, lam, a, mask, tol, max_iter, warm=warm)


def _rss_multi(G, C, y_sqnorm, beta):
    return y_sqnorm - 2.0 * np.sum(beta * C, axis=0) + np.sum(beta * (G @ beta), axis=0)


def _path_bic_multi(G, C, y_sqnorm, n_rows, grids, mask, kind, a, tol, max_iter):
    """Warm-started descent down per-equation lambda grids with BIC tracking.

    Args:
        grids: (L, K) penalty levels, decreasing down each column.
        mask: (d, K) allowed supports.

    Returns dict with the per-equation winners (beta (d, K), lam, df, rss,
    bic) plus the full (L, K) bic/rss/df tables. BIC is
    n*log(RSS/n) + log(n)*df with df = nonzero count; ties keep the larger
    lambda.
    """
    L, n_eq = grids.shape
    d = G.shape[0]
    beta = np.zeros((d, n_eq))
    best = {
        "beta": np.zeros((d, n_eq)),
        "lam": grids[0].copy(),
        "df": np.zeros(n_eq, dtype=int),
        "rss": np.full(n_eq, np.inf),
        "bic": np.full(n_eq, np.inf),
        "converged": np.ones(n_eq, dtype=bool),
    }
    bic_table = np.empty((L, n_eq))
    rss_table = np.empty((L, n_eq))
    df_table = np.empty((L, n_eq), dtype=int)
    log_n = np.log(n_rows)
    for t in range(L):
        beta, _, conv = _solve_multi(G, C, grids[t], kind, a, mask, tol, max_iter,
                                     warm=beta)
        rss = _rss_multi(G, C, y_sqnorm, beta)
        df = np.count_nonzero(beta, axis=0)
        bic = n_rows * np.log(np.maximum(rss / n_rows, 1e-300)) + log_n * df
        bic_table[t], rss_table[t], df_table[t] = bic, rss, df
        better = bic < best["bic"]
        if better.any():
            best["beta"][:, better] = beta[:, better]
            best["lam"][better] = grids[t][better]
            best["df"][better] = df[better]
            best["rss"][better] = rss[better]
            best["bic"][better] = bic[better]
            best["converged"][better] = conv[better]
    best["bic_table"] = bic_table
    best["rss_table"] = rss_table
    best["df_table"] = df_table
    return best


# ---------------------------------------------------------------------------
# public single-equation API

def _restrict_mask(d: int, restrict) -> np.ndarray:
    if restrict is None:
        return np.ones((d, 1), dtype=bool)
    mask = np.zeros((d, 1), dtype=bool)
    idx = np.asarray(sorted(set(int(i) for i in restrict)), dtype=int)
    if idx.size and (idx.min() < 0 or idx.max() >= d):
        raise ValueError("restrict indices out of range")
    mask[idx, 0] = True
    return mask


def fit_penalized(X, y, spec: PenaltySpec, restrict=None, intercept: bool = True,
                  standardize: bool = True, track_objective: bool = False) -> PenalizedFit:
    """Solve one penalized regression by cyclic coordinate descent.

    Args:
        X: n x d design.
        y: n-vector target.
        spec: penalty kind/level and solver settings.
        restrict: optional index set; coefficients outside it are fixed at 0.
        intercept: fit an unpenalized intercept (centers the problem).
        standardize: scale columns to unit variance inside the solver;
            coefficients are reported on the original scale either way.
        track_objective: record the penalized objective after every sweep
            (lasso only; used by invariant tests).

    Returns:
        PenalizedFit; `converged` is False when max_iter sweeps were exhausted
        before the max coefficient change fell below spec.tol.
    """
    Xs, yc, col_mean, col_scale, y_mean = _standardize(X, y, intercept, standardize)
    G, C, y_sqnorm = _gram_system(Xs, yc)
    mask = _restrict_mask(Xs.shape[1], restrict)
    history: list = []
    if track_objective:
        if spec.kind != "lasso":
            raise ValueError("objective tracking supported for lasso only")
        beta, sweeps, conv = _solve_lasso_multi(G, C, spec.lam, mask, spec.tol,
                                                spec.max_iter,
                                                objective_sink=history,
                                                y_sqnorm=y_sqnorm)
    else:
        beta, sweeps, conv = _solve_multi(G, C, spec.lam, spec.kind, spec.a,
                                          mask, spec.tol, spec.max_iter)
    coef = beta[:, 0] / col_scale
    b0 = float(y_mean[0] - col_mean @ coef) if intercept else 0.0
    return PenalizedFit(coef=coef, intercept=b0, converged=bool(conv[0]),
                        n_sweeps=sweeps, objective_history=history)


def lambda_path(X, y, n_points: int = 25, ratio: float = 1e-2,
                intercept: bool = True, standardize: bool = True) -> LambdaPath:
    """Log-spaced penalty levels from lambda_max down to ratio*lambda_max.

    lambda_max is the smallest level at which every slope is exactly zero:
    2 * max_j |x_j'(y - ybar)| on the standardized columns (the factor 2 comes
    from the squared-error objective carrying no 1/2).

    Raises:
        NumericError: degenerate design (all columns constant).
    """
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must be in (0, 1)")
    Xs, yc, *_ = _standardize(X, y, intercept, standardize)
    lam_max = 2.0 * float(np.max(np.abs(Xs.T @ yc))) if Xs.size else 0.0
    if lam_max <= 0.0:
        raise NumericError("degenerate design: no column correlates with y "
                           "(all-constant columns or zero target)")
    values = lam_max * ratio ** np.linspace(0.0, 1.0, n_points)
    return LambdaPath(values=values, ratio=ratio)


def select_lambda(X, y, kind: str, path: LambdaPath, a: float = DEFAULT_SCAD_A,
                  restrict=None, intercept: bool = True, standardize: bool = True,
                  tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER):
    """Pick the penalty level by per-equation BIC along a warm-started path.

    BIC = n*log(RSS/n) + log(n)*df with df = count of nonzero slopes; the
    smallest BIC wins and ties go to the larger lambda (sparser model).

    Returns:
        (chosen lambda, table) where table is a list of
        {"lam", "df", "rss", "bic"} dicts, one per path point.
    """
    Xs, yc, *_ = _standardize(X, y, intercept, standardize)
    G, C, y_sqnorm = _gram_system(Xs, yc)
    mask = _restrict_mask(Xs.shape[1], restrict)
    grids = path.values[:, None]
    best = _path_bic_multi(G, C, y_sqnorm, Xs.shape[0], grids, mask, kind, a,
                           tol, max_iter)
    table = [
        {"lam": float(path.values[t]), "df": int(best["df_table"][t, 0]),
         "rss": float(best["rss_table"][t, 0]), "bic": float(best["bic_table"][t, 0])}
        for t in range(path.n_points)
    ]
    return float(best["lam"][0]), table


def kkt_residual(X, y, fit: PenalizedFit, spec: PenaltySpec, restrict=None,
                 intercept: bool = True, standardize: bool = True):
    """Optimality diagnostics for a lasso fit, on the standardized problem.

    Returns:
        (max_displacement, max_gradient_violation): the largest coordinate
        move another descent pass could make, and the largest violation of
        the subgradient conditions |2 x_j'r - lam*sign(b_j)| (nonzero b_j) /
        max(0, |2 x_j'r| - lam) (zero b_j).
    """
    if spec.kind != "lasso":
        raise ValueError("KKT diagnostics are defined for the lasso objective")
    Xs, yc, col_mean, col_scale, y_mean = _standardize(X, y, intercept, standardize)
    G, C, _ = _gram_system(Xs, yc)
    mask = _restrict_mask(Xs.shape[1], restrict)[:, 0]
    beta = fit.coef * col_scale
    grad = C[:, 0] - G @ beta
    diag = np.diag(G)
    ok = mask & (diag > 0)
    rho = grad[ok] + diag[ok] * beta[ok]
    step = np.sign(rho) * np.maximum(np.abs(rho) - spec.lam / 2.0, 0.0) / diag[ok]
    max_disp = float(np.max(np.abs(step - beta[ok]), initial=0.0))
    nz = ok & (beta != 0)
    z = ok & (beta == 0)
    viol_nz = np.abs(2.0 * grad[nz] - spec.lam * np.sign(beta[nz]))
    viol_z = np.maximum(np.abs(2.0 * grad[z]) - spec.lam, 0.0)
    max_grad = float(max(np.max(viol_nz, initial=0.0), np.max(viol_z, initial=0.0)))
    return max_disp, max_grad
