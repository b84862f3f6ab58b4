"""Generalized FEVD connectedness: pairwise tables, from/to/net summaries,
group aggregation, within/cross decomposition, and rolling network series.

theta[i, j] is the share of variable i's forecast-error variance attributed
to shocks in variable j (so edges in the induced network point j -> i). Rows
of the generalized decomposition need not sum to one; both the raw and the
row-normalized views are first-class.
"""
from __future__ import annotations

import csv
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import screening, varcore
from .errors import InputError, NumericError, SparseVarError

DEFAULT_HORIZON = 10


@dataclass
class FevdTable:
    """K x K variance-decomposition shares at one horizon."""

    theta: np.ndarray
    horizon: int | None
    normalized: bool = False
    labels: list | None = None

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        k = self.theta.shape[0]
        if self.theta.ndim != 2 or self.theta.shape != (k, k):
            raise ValueError("theta must be square")
        if not np.isfinite(self.theta).all():
            raise ValueError("theta must be finite")
        if (self.theta < 0).any():
            raise ValueError("theta entries must be nonnegative")
        if self.labels is not None and len(self.labels) != k:
            raise ValueError("labels length must match table size")

    @property
    def n_series(self) -> int:
        return self.theta.shape[0]


@dataclass
class ConnectednessSummary:
    """Directional totals: from/to per variable, net, and system-wide mass.

    `total` is the raw off-diagonal sum (equal to sum(from) and sum(to));
    `total_mean` is the per-node mean total/K matching the conventional
    bottom-right table cell.
    """

    from_others: np.ndarray
    to_others: np.ndarray
    net: np.ndarray | None = None
    total: float | None = None
    total_mean: float | None = None

    def __post_init__(self):
        self.from_others = np.asarray(self.from_others, dtype=float).ravel()
        self.to_others = np.asarray(self.to_others, dtype=float).ravel()
        if self.to_others.shape != self.from_others.shape:
            raise ValueError("from/to lengths differ")
        if self.net is None:
            self.net = self.to_others - self.from_others
        else:
            self.net = np.asarray(self.net, dtype=float).ravel()
        if self.total is None:
            self.total = float(self.from_others.sum())
        if self.total_mean is None:
            self.total_mean = self.total / self.from_others.size


@dataclass
class GroupTable:
    """Connectedness mass aggregated over variable groups.

    The diagonal holds within-group mass (pairs i != j sharing a group); own
    shares theta_ii are excluded everywhere. from/to/net are computed on the
    G x G table excluding its diagonal.
    """

    table: np.ndarray
    labels: list
    from_others: np.ndarray
    to_others: np.ndarray
    net: np.ndarray


@dataclass
class RollingWindow:
    """Connectedness metrics for one estimation window [start, end)."""

    start: int
    end: int
    summary: ConnectednessSummary
    group_table: GroupTable
    within: float
    cross: float
    totals: dict
    stable: bool
    radius: float


@dataclass
class RollingSeries:
    """Ordered per-window results plus any skipped windows."""

    windows: list
    skipped: list
    horizons: tuple
    window_length: int
    step: int

    def total_series(self, horizon: int | None = None) -> np.ndarray:
        """Per-window total connectedness (raw sum) at the given horizon."""
        h = self.horizons[0] if horizon is None else horizon
        return np.asarray([w.totals[h]["sum"] for w in self.windows], dtype=float)


@dataclass(frozen=True)
class RollingConfig:
    """Estimation settings applied to every window."""

    p: int = 1
    kind: str = "lasso"
    horizons: tuple = (DEFAULT_HORIZON,)
    d_keep: int | None = None
    lam: float | None = None
    a: float = 3.7
    n_lambda: int = 25
    lambda_ratio: float = 1e-2
    max_iter: int = 10

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if not self.horizons:
            raise ValueError("horizons must be nonempty")
        if self.kind not in ("lasso", "scad"):
            raise ValueError(f"kind must be 'lasso' or 'scad', got {self.kind!r}")


def fevd_at(coeffs: varcore.VarCoefficients, sigma, horizons, labels=None,
            warn_unstable: bool = True) -> dict:
    """FEVD tables at several horizons from one MA scan.

    Returns {horizon: FevdTable (raw)}. sigma must have strictly positive
    diagonal; an unstable model triggers a warning (the decomposition is then
    horizon-divergent), not an error.
    """
    sigma = np.asarray(sigma, dtype=float)
    k = coeffs.n_series
    if sigma.shape != (k, k):
        raise ValueError(f"sigma must be {k} x {k}")
    horizons = sorted({int(h) for h in horizons})
    if horizons[0] < 1:
        raise ValueError("horizons must be >= 1")
    diag = np.diag(sigma)
    bad = np.nonzero(diag <= 0.0)[0]
    if bad.size:
        raise NumericError(f"sigma has nonpositive variance for variable {int(bad[0])}")
    if warn_unstable:
        stable, radius = varcore.is_stable(coeffs)
        if not stable:
            warnings.warn(f"model unstable (spectral radius {radius:.4f}); "
                          "FEVD does not converge in the horizon", RuntimeWarning)
    terms = varcore.ma_coefficients(coeffs, horizons[-1]).terms
    num = np.zeros((k, k))
    den = np.zeros(k)
    out = {}
    want = set(horizons)
    for h in range(horizons[-1]):
        bs = terms[h] @ sigma
        num += bs * bs
        den += np.einsum("ij,ij->i", bs, terms[h])
        if h + 1 in want:
            theta = num / diag[None, :] / den[:, None]
            out[h + 1] = FevdTable(theta=theta, horizon=h + 1, normalized=False,
                                   labels=list(labels) if labels else None)
    return out


def fevd(coeffs: varcore.VarCoefficients, sigma, horizon: int = DEFAULT_HORIZON,
         labels=None, warn_unstable: bool = True) -> FevdTable:
    """Generalized FEVD at one horizon (raw, rows need not sum to 1)."""
    return fevd_at(coeffs, sigma, [horizon], labels=labels,
                   warn_unstable=warn_unstable)[horizon]


def normalize_rows(table: FevdTable) -> FevdTable:
    """Scale each row to sum to one."""
    sums = table.theta.sum(axis=1)
    if (sums <= 0).any():
        raise NumericError("cannot normalize: zero row in the table")
    return FevdTable(theta=table.theta / sums[:, None], horizon=table.horizon,
                     normalized=True,
                     labels=list(table.labels) if table.labels else None)


def summarize(table: FevdTable) -> ConnectednessSummary:
    """Off-diagonal row/column sums and their difference."""
    theta = table.theta
    own = np.diag(theta)
    from_others = theta.sum(axis=1) - own
    to_others = theta.sum(axis=0) - own
    return ConnectednessSummary(from_others=from_others, to_others=to_others)


def _group_vector(groups, k: int) -> np.ndarray:
    if isinstance(groups, dict):
        missing = [i for i in range(k) if i not in groups]
        if missing:
            raise InputError(f"group map does not cover index {missing[0]}")
        vec = np.asarray([int(groups[i]) for i in range(k)], dtype=int)
    else:
        vec = np.asarray(list(groups), dtype=int)
        if vec.shape != (k,):
            raise InputError(f"group vector must have length {k}")
    n_groups = int(vec.max()) + 1 if vec.size else 0
    if vec.min() < 0 or set(vec.tolist()) != set(range(n_groups)):
        raise InputError("group indices must be contiguous 0..G-1")
    return vec


def aggregate(table: FevdTable, groups, labels=None) -> GroupTable:
    """Sum pairwise connectedness into group blocks.

    Entry (g, h) sums theta_ij over i in g, j in h; own shares theta_ii are
    excluded, so the diagonal holds within-group (i != j) mass. from/to/net
    are computed on the group table excluding its diagonal.
    """
    vec = _group_vector(groups, table.n_series)
    n_groups = int(vec.max()) + 1
    ind = np.zeros((n_groups, table.n_series))
    ind[vec, np.arange(table.n_series)] = 1.0
    block = ind @ table.theta @ ind.T
    own = np.bincount(vec, weights=np.diag(table.theta), minlength=n_groups)
    idx = np.arange(n_groups)
    block[idx, idx] -= own
    diag = np.diag(block)
    from_others = block.sum(axis=1) - diag
    to_others = block.sum(axis=0) - diag
    if labels is None:
        labels = [f"group{g}" for g in range(n_groups)]
    elif len(labels) != n_groups:
        raise InputError(f"expected {n_groups} group labels, got {len(labels)}")
    return GroupTable(table=block, labels=list(labels), from_others=from_others,
                      to_others=to_others, net=to_others - from_others)


def decompose_within_cross(table: FevdTable, groups) -> tuple[float, float]:
    """Split off-diagonal mass into same-group and cross-group parts."""
    grouped = aggregate(table, groups)
    within = float(np.trace(grouped.table))
    cross = float(grouped.table.sum() - np.trace(grouped.table))
    return within, cross


def pairwise(table: FevdTable, i: int, j: int) -> float:
    """theta_ij: connectedness from j to i."""
    k = table.n_series
    if not (0 <= i < k and 0 <= j < k):
        raise IndexError(f"indices ({i}, {j}) out of range for a {k} x {k} table")
    return float(table.theta[i, j])


def _roll_worker(args):
    chunk, start, config, groups, labels = args
    window = chunk.shape[0]
    try:
        fit = screening.fit_var(chunk, config.p, kind=config.kind,
                                d_keep=config.d_keep, lam=config.lam,
                                a=config.a, n_lambda=config.n_lambda,
                                lambda_ratio=config.lambda_ratio,
                                max_iter=config.max_iter)
        resid = varcore.residuals(chunk, fit.coeffs)
        sigma = varcore.residual_covariance(resid)
        stable, radius = varcore.is_stable(fit.coeffs)
        tables = fevd_at(fit.coeffs, sigma, config.horizons, labels=labels,
                         warn_unstable=False)
    except (SparseVarError, np.linalg.LinAlgError) as exc:
        return ("skip", start, start + window, str(exc))
    primary = tables[config.horizons[0]]
    summary = summarize(primary)
    grouped = aggregate(primary, groups, labels=None)
    within = float(np.trace(grouped.table))
    cross = float(grouped.table.sum() - np.trace(grouped.table))
    totals = {}
    for h, tab in tables.items():
        s = summarize(tab)
        totals[h] = {"sum": s.total, "mean": s.total_mean}
    return ("ok", RollingWindow(start=start, end=start + window, summary=summary,
                                group_table=grouped, within=within, cross=cross,
                                totals=totals, stable=stable, radius=radius))


def rolling_connectedness(returns, window: int = 36, step: int = 1,
                          config: RollingConfig | None = None, groups=None,
                          labels=None, workers: int = 1) -> RollingSeries:
    """Re-estimate the network on sliding windows.

    Any imputation must happen globally beforehand: windows are plain slices
    and must contain no missing values. Windows whose estimation fails are
    recorded in `skipped` and left out, never fatal. With groups omitted every
    variable forms its own group (within = 0, cross = total).

    Args:
        returns: panel or array.
        window: rows per window (> config.p).
        step: advance between window starts.
        config: RollingConfig estimation settings.
        groups: optional map/vector of variable groups for aggregation.
        labels: optional variable labels carried into per-window tables.
        workers: process count for per-window parallelism (1 = in-process).

    Returns:
        RollingSeries ordered by window start.
    """
    config = config or RollingConfig()
    values = varcore._as_values(returns)
    n_obs, k = values.shape
    if window <= config.p:
        raise InputError(f"window must exceed p={config.p}")
    if step < 1:
        raise InputError("step must be >= 1")
    if n_obs < window:
        raise InputError(f"need at least window={window} rows, got {n_obs}")
    if not np.isfinite(values).all():
        raise InputError("missing values present; impute before rolling")
    if groups is None:
        groups = np.arange(k)
    vec = _group_vector(groups, k)
    starts = list(range(0, n_obs - window + 1, step))
    if labels is not None:
        labels = list(labels)
    tasks = [(values[s : s + window], s, config, vec, labels) for s in starts]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_roll_worker, tasks,
                                    chunksize=max(1, len(tasks) // (workers * 4))))
    else:
        results = [_roll_worker(t) for t in tasks]
    windows = []
    skipped = []
    for res in results:
        if res[0] == "ok":
            windows.append(res[1])
        else:
            skipped.append({"start": res[1], "end": res[2], "reason": res[3]})
    horizons = tuple(dict.fromkeys(int(h) for h in config.horizons))
    return RollingSeries(windows=windows, skipped=skipped, horizons=horizons,
                         window_length=window, step=step)


def table_to_csv(table: FevdTable, stream, summary: ConnectednessSummary | None = None) -> None:
    """Connectedness table CSV: pairwise block, rightmost "From others"
    column, bottom "To others" row ending in the per-node mean total."""
    theta = table.theta
    k = table.n_series
    labels = table.labels or [f"V{i}" for i in range(k)]
    s = summary or summarize(table)
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow([""] + list(labels) + ["From others"])
    for i in range(k):
        row = [labels[i]]
        row.extend(format(x, ".17g") for x in theta[i])
        row.append(format(s.from_others[i], ".17g"))
        writer.writerow(row)
    tail = ["To others"]
    tail.extend(format(x, ".17g") for x in s.to_others)
    tail.append(format(s.total_mean, ".17g"))
    writer.writerow(tail)


def table_from_csv(stream) -> tuple[FevdTable, ConnectednessSummary]:
    """Reload a table written by table_to_csv."""
    rows = list(csv.reader(stream))
    if len(rows) < 3 or rows[0][0] != "" or rows[-1][0] != "To others":
        raise InputError("not a connectedness table CSV")
    labels = rows[0][1:-1]
    k = len(labels)
    theta = np.empty((k, k))
    from_others = np.empty(k)
    for i in range(k):
        rec = rows[1 + i]
        if rec[0] != labels[i] or len(rec) != k + 2:
            raise InputError(f"malformed table row {i + 2}")
        theta[i] = [float(x) for x in rec[1:-1]]
        from_others[i] = float(rec[-1])
    tail = rows[1 + k]
    to_others = np.asarray([float(x) for x in tail[1:-1]])
    total_mean = float(tail[-1])
    table = FevdTable(theta=theta, horizon=None, normalized=False, labels=labels)
    summary = ConnectednessSummary(from_others=from_others, to_others=to_others,
                                   total=float(from_others.sum()),
                                   total_mean=total_mean)
    return table, summary


def group_table_to_csv(grouped: GroupTable, stream) -> None:
    """Group table CSV in the same layout as table_to_csv."""
    block = grouped.table
    g = block.shape[0]
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow([""] + list(grouped.labels) + ["From others"])
    for i in range(g):
        row = [grouped.labels[i]]
        row.extend(format(x, ".17g") for x in block[i])
        row.append(format(grouped.from_others[i], ".17g"))
        writer.writerow(row)
    tail = ["To others"]
    tail.extend(format(x, ".17g") for x in grouped.to_others)
    tail.append(format(grouped.from_others.sum() / g, ".17g"))
    writer.writerow(tail)
