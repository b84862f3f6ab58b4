"""Price panels, differencing, chained-equation imputation, contract grouping.

Missing cells are NaN internally and empty strings on disk. Dates are
calendar labels only; nothing downstream assumes a frequency.
"""
from __future__ import annotations

import csv
import datetime
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, InsufficientDataError, PanelFormatError


def _open_text(source):
    """Normalize path / bytes / text / file-like into a text stream."""
    if hasattr(source, "read"):
        data = source.read()
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        return io.StringIO(data)
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8"))
    if isinstance(source, str) and "\n" in source:
        return io.StringIO(source)
    with open(source, "r", encoding="utf-8", newline="") as handle:
        return io.StringIO(handle.read())


@dataclass
class PricePanel:
    """Raw price observations, one row per date, NaN = missing.

    Attributes:
        dates: strictly increasing calendar dates, length T.
        values: T x K float matrix; prices may be negative.
        symbols: K unique contract identifiers.
    """

    dates: list
    values: np.ndarray
    symbols: list

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.symbols = list(self.symbols)
        self.dates = list(self.dates)
        if self.values.ndim != 2:
            raise ValueError("values must be a T x K matrix")
        if self.values.shape != (len(self.dates), len(self.symbols)):
            raise ValueError("values shape must match dates x symbols")
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError("symbols must be unique")
        for prev, cur in zip(self.dates, self.dates[1:]):
            if cur <= prev:
                raise ValueError(f"dates must be strictly increasing, {cur} follows {prev}")

    @property
    def n_obs(self) -> int:
        return self.values.shape[0]

    @property
    def n_series(self) -> int:
        return self.values.shape[1]


@dataclass
class ReturnPanel:
    """Differenced panel plus bookkeeping for originally missing cells.

    Attributes:
        dates: labels for each return row (the later date of each pair).
        values: (T-1) x K returns; NaN only before imputation.
        symbols: column identifiers.
        transform_tag: "diff" or "logdiff".
        missing_mask: boolean matrix marking cells that were missing before
            imputation.
    """

    dates: list
    values: np.ndarray
    symbols: list
    transform_tag: str
    missing_mask: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.missing_mask = np.asarray(self.missing_mask, dtype=bool)
        self.symbols = list(self.symbols)
        self.dates = list(self.dates)
        if self.transform_tag not in ("diff", "logdiff"):
            raise ValueError(f"unknown transform_tag {self.transform_tag!r}")
        if self.values.shape != (len(self.dates), len(self.symbols)):
            raise ValueError("values shape must match dates x symbols")
        if self.missing_mask.shape != self.values.shape:
            raise ValueError("missing_mask shape must match values")

    @property
    def n_obs(self) -> int:
        return self.values.shape[0]

    @property
    def n_series(self) -> int:
        return self.values.shape[1]


@dataclass
class ContractCatalog:
    """Symbol metadata: type code (group label) and free-text description."""

    entries: dict

    def __post_init__(self):
        for symbol, meta in self.entries.items():
            if not meta.get("type_code"):
                raise ValueError(f"empty type_code for symbol {symbol!r}")

    def type_of(self, symbol: str) -> str:
        try:
            return self.entries[symbol]["type_code"]
        except KeyError:
            raise InputError(f"symbol {symbol!r} not in catalog") from None


@dataclass
class ImputationReport:
    """What impute() did: cells filled per column, RNG seed, sweep count."""

    imputed_counts: dict
    seed: int
    sweeps: int
    n_chains: int
    constant_columns: list = field(default_factory=list)


def load_panel(source) -> PricePanel:
    """Parse a price panel CSV.

    Layout: header "date,SYM1,...", ISO-8601 dates, decimal cells, empty
    string = missing.

    Raises:
        PanelFormatError: duplicate/non-monotone dates, duplicate symbols, or
            unparseable cells, with the offending row and column named.
    """
    reader = csv.reader(_open_text(source))
    try:
        header = next(reader)
    except StopIteration:
        raise PanelFormatError("empty input") from None
    if not header or header[0].strip() != "date":
        raise PanelFormatError('first header cell must be "date"', row=1)
    symbols = [h.strip() for h in header[1:]]
    if not symbols:
        raise PanelFormatError("no symbol columns", row=1)
    seen = set()
    for sym in symbols:
        if sym in seen:
            raise PanelFormatError(f"duplicate symbol {sym!r}", row=1, column=sym)
        seen.add(sym)

    dates: list = []
    rows: list = []
    for line_no, record in enumerate(reader, start=2):
        if not record:
            continue
        if len(record) != len(symbols) + 1:
            raise PanelFormatError(
                f"expected {len(symbols) + 1} cells, got {len(record)}", row=line_no)
        try:
            stamp = datetime.date.fromisoformat(record[0].strip())
        except ValueError:
            raise PanelFormatError(f"unparseable date {record[0]!r}", row=line_no,
                                   column="date") from None
        if dates:
            if stamp == dates[-1]:
                raise PanelFormatError(f"duplicate date {stamp}", row=line_no, column="date")
            if stamp < dates[-1]:
                raise PanelFormatError(f"dates out of order at {stamp}", row=line_no,
                                       column="date")
        dates.append(stamp)
        parsed = np.empty(len(symbols))
        for j, cell in enumerate(record[1:]):
            cell = cell.strip()
            if cell == "":
                parsed[j] = np.nan
                continue
            try:
                parsed[j] = float(cell)
            except ValueError:
                raise PanelFormatError(f"unparseable cell {cell!r}", row=line_no,
                                       column=symbols[j]) from None
        rows.append(parsed)
    if not rows:
        raise PanelFormatError("no data rows")
    return PricePanel(dates=dates, values=np.vstack(rows), symbols=symbols)


def load_catalog(source) -> ContractCatalog:
    """Parse metadata CSV with columns symbol,type,description."""
    reader = csv.reader(_open_text(source))
    try:
        header = next(reader)
    except StopIteration:
        raise PanelFormatError("empty metadata input") from None
    cols = [h.strip() for h in header]
    if cols[:2] != ["symbol", "type"]:
        raise PanelFormatError('metadata header must start "symbol,type"', row=1)
    entries: dict = {}
    for line_no, record in enumerate(reader, start=2):
        if not record:
            continue
        symbol = record[0].strip()
        if symbol in entries:
            raise PanelFormatError(f"duplicate symbol {symbol!r}", row=line_no,
                                   column="symbol")
        type_code = record[1].strip() if len(record) > 1 else ""
        if not type_code:
            raise PanelFormatError(f"empty type for symbol {symbol!r}", row=line_no,
                                   column="type")
        description = record[2].strip() if len(record) > 2 else ""
        entries[symbol] = {"type_code": type_code, "description": description}
    return ContractCatalog(entries=entries)


def difference(panel: PricePanel, mode: str = "diff") -> ReturnPanel:
    """First differences (or log differences) of a price panel.

    Cells adjacent to a missing price become missing. In logdiff mode a
    nonpositive price also yields a missing return (negative settlement
    prices occur in these markets), so the log transform never errors.
    """
    if mode not in ("diff", "logdiff"):
        raise ValueError(f"mode must be 'diff' or 'logdiff', got {mode!r}")
    if panel.n_obs < 2:
        raise InsufficientDataError("need at least 2 rows to difference")
    cur, prev = panel.values[1:], panel.values[:-1]
    if mode == "diff":
        out = cur - prev
    else:
        with np.errstate(invalid="ignore", divide="ignore"):
            safe_cur = np.where(cur > 0, cur, np.nan)
            safe_prev = np.where(prev > 0, prev, np.nan)
            out = np.log(safe_cur) - np.log(safe_prev)
    mask = ~np.isfinite(out)
    out = np.where(mask, np.nan, out)
    return ReturnPanel(dates=panel.dates[1:], values=out, symbols=panel.symbols,
                       transform_tag=mode, missing_mask=mask)


def _pmm_sweep(work: np.ndarray, observed: np.ndarray, order: np.ndarray) -> None:
    """One chained-equation pass over incomplete columns, in place.

    For each incomplete column: linear regression on all other columns over
    the rows where the column is observed, then each missing cell takes the
    observed value whose prediction is nearest (ties -> lowest row index).
    """
    n_rows = work.shape[0]
    ones = np.ones((n_rows, 1))
    for j in order:
        obs = observed[:, j]
        mis = ~obs
        others = np.hstack([ones, np.delete(work, j, axis=1)])
        beta, *_ = np.linalg.lstsq(others[obs], work[obs, j], rcond=None)
        pred = others @ beta
        donor_pred = pred[obs]
        donor_val = work[obs, j]
        for row in np.nonzero(mis)[0]:
            pick = int(np.argmin(np.abs(donor_pred - pred[row])))
            work[row, j] = donor_val[pick]


def impute(returns: ReturnPanel, sweeps: int = 10, m: int = 5,
           seed: int = 0) -> tuple[ReturnPanel, ImputationReport]:
    """Fill missing returns by chained equations with predictive mean matching.

    Runs m chains, each initialized by resampling observed values of the same
    column with its own child RNG, then `sweeps` deterministic PMM passes;
    chains are pooled by cell-wise mean. Observed cells are never modified,
    and every imputed value is a mean of observed donor values, so it stays
    within the donor column's range.

    Args:
        returns: differenced panel, NaN where missing.
        sweeps: chained-equation passes per chain.
        m: number of chains pooled.
        seed: seed; output is a pure function of (panel, sweeps, m, seed).

    Returns:
        (imputed panel, report). Columns that are constant over their observed
        cells are filled with that constant and flagged in the report.

    Raises:
        InputError: some column has no observed cell at all.
    """
    values = returns.values
    observed = np.isfinite(values)
    for j, symbol in enumerate(returns.symbols):
        if not observed[:, j].any():
            raise InputError(f"column {symbol!r} is entirely missing; cannot impute")

    counts = {sym: int((~observed[:, j]).sum()) for j, sym in enumerate(returns.symbols)}
    report = ImputationReport(imputed_counts=counts, seed=seed, sweeps=sweeps, n_chains=m)

    if observed.all():
        clean = ReturnPanel(dates=list(returns.dates), values=values.copy(),
                            symbols=list(returns.symbols),
                            transform_tag=returns.transform_tag,
                            missing_mask=returns.missing_mask.copy())
        return clean, report

    # Constant columns get their constant directly; regression is undefined.
    base = values.copy()
    constant_cols = []
    incomplete = []
    for j, symbol in enumerate(returns.symbols):
        col_obs = values[observed[:, j], j]
        if not observed[:, j].all():
            if col_obs.max() - col_obs.min() == 0.0:
                base[~observed[:, j], j] = col_obs[0]
                constant_cols.append(symbol)
            else:
                incomplete.append(j)
    report.constant_columns = constant_cols

    if incomplete:
        order = np.asarray(incomplete, dtype=int)
        children = np.random.SeedSequence(seed).spawn(m)
        pooled = np.zeros_like(base)
        for child in children:
            rng = np.random.default_rng(child)
            work = base.copy()
            for j in incomplete:
                mis = ~observed[:, j]
                donors = values[observed[:, j], j]
                work[mis, j] = rng.choice(donors, size=int(mis.sum()), replace=True)
            for _ in range(sweeps):
                _pmm_sweep(work, observed, order)
            pooled += work
        filled = pooled / m
        filled[observed] = values[observed]
    else:
        filled = base

    clean = ReturnPanel(dates=list(returns.dates), values=filled,
                        symbols=list(returns.symbols),
                        transform_tag=returns.transform_tag,
                        missing_mask=~observed)
    return clean, report


def group_map(catalog: ContractCatalog, symbols) -> dict:
    """Map symbol position -> contiguous group index.

    Group indices run 0..G-1 in order of first appearance of each type code
    along `symbols`.

    Raises:
        InputError: a symbol is absent from the catalog.
    """
    mapping: dict = {}
    group_of: dict = {}
    for idx, symbol in enumerate(symbols):
        code = catalog.type_of(symbol)
        if code not in group_of:
            group_of[code] = len(group_of)
        mapping[idx] = group_of[code]
    return mapping


def group_labels(catalog: ContractCatalog, symbols) -> list:
    """Group labels (type codes) indexed by the group ids of group_map."""
    labels: list = []
    seen = set()
    for symbol in symbols:
        code = catalog.type_of(symbol)
        if code not in seen:
            seen.add(code)
            labels.append(code)
    return labels


def write_panel_csv(stream, dates, values, symbols) -> None:
    """Write a panel CSV (prices or returns): 17-significant-digit cells,
    empty string for missing."""
    values = np.asarray(values, dtype=float)
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["date"] + list(symbols))
    for i, stamp in enumerate(dates):
        row = [stamp.isoformat() if hasattr(stamp, "isoformat") else str(stamp)]
        for x in values[i]:
            row.append("" if not np.isfinite(x) else format(float(x), ".17g"))
        writer.writerow(row)
