"""Batch command-line surface: simulate, pipeline, roll, export-graph.

One flat config drives every command; each key can come from a JSON file
(--config) or from the same-named command flag, with the flag winning. All
randomness derives from the single config seed, and outputs are
byte-deterministic given the config (the manifest's wall-clock timings are
the only per-run values).

Exit codes: 0 success, 1 internal or numeric failure, 2 input/config error.
"""
from __future__ import annotations

import argparse
import dataclasses
import datetime
import json
import os
import sys
import time
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from . import connectedness, dataset, screening, selection, varcore
from .errors import ConfigError, InputError, NumericError, SparseVarError

_TRANSFORMS = ("diff", "logdiff")
_FORMATS = ("dot", "json")
_ESTIMATORS = ("lasso", "scad", "iterated-sis-lasso", "iterated-sis-scad")


def _version() -> str:
    from . import __version__

    return __version__


@dataclass
class PipelineConfig:
    """Flat run settings shared by every command.

    JSON config keys and command flags carry the same names (flags spelled
    with dashes). Fields irrelevant to a command are ignored by it.
    """

    input: str | None = None
    metadata: str | None = None
    out: str = "out"
    transform: str = "diff"
    estimator: str = "lasso"
    p: int = 1
    p_max: int | None = None
    d_keep: int | None = None
    lam: float | None = None
    a: float = 3.7
    n_lambda: int = 25
    lambda_ratio: float = 1e-2
    sis_max_iter: int = 10
    horizon: int = 10
    horizons: tuple | None = None
    window: int = 36
    step: int = 1
    threshold: float = 0.05
    format: str = "dot"
    normalize: bool = True
    impute_sweeps: int = 10
    impute_chains: int = 5
    fmse_split: int | None = None
    seed: int = 0
    n_series: int = 5
    n_obs: int = 200
    density: float = 0.2
    coeff_scale: float = 0.4
    innovation_sd: float = 1.0
    n_groups: int = 3
    burn_in: int = 200

    def validate(self) -> None:
        """Coerce numeric fields and check documented ranges."""
        for name in ("p", "n_lambda", "sis_max_iter", "horizon", "window",
                     "step", "impute_sweeps", "impute_chains", "seed",
                     "n_series", "n_obs", "n_groups", "burn_in"):
            setattr(self, name, _as_int(name, getattr(self, name)))
        for name in ("p_max", "d_keep", "fmse_split"):
            val = getattr(self, name)
            if val is not None:
                setattr(self, name, _as_int(name, val))
        for name in ("a", "lambda_ratio", "threshold", "density",
                     "coeff_scale", "innovation_sd"):
            setattr(self, name, _as_float(name, getattr(self, name)))
        if self.lam is not None:
            self.lam = _as_float("lam", self.lam)
            if self.lam < 0:
                raise ConfigError("lam must be >= 0")
        if self.horizons is not None:
            try:
                self.horizons = tuple(_as_int("horizons", h) for h in self.horizons)
            except TypeError:
                raise ConfigError("horizons must be a list of integers") from None
            if not self.horizons or min(self.horizons) < 1:
                raise ConfigError("horizons must be a nonempty list of positive integers")
        _require(self.transform in _TRANSFORMS,
                 f"transform must be one of {_TRANSFORMS}, got {self.transform!r}")
        _require(self.estimator in _ESTIMATORS,
                 f"estimator must be one of {_ESTIMATORS}, got {self.estimator!r}")
        _require(self.format in _FORMATS,
                 f"format must be one of {_FORMATS}, got {self.format!r}")
        _require(isinstance(self.normalize, bool), "normalize must be a boolean")
        _require(self.p >= 1, "p must be >= 1")
        _require(self.p_max is None or self.p_max >= 1, "p_max must be >= 1")
        _require(self.d_keep is None or self.d_keep >= 1, "d_keep must be >= 1")
        _require(self.a > 2.0, "a must exceed 2")
        _require(self.n_lambda >= 1, "n_lambda must be >= 1")
        _require(0.0 < self.lambda_ratio < 1.0, "lambda_ratio must be in (0, 1)")
        _require(self.sis_max_iter >= 1, "sis_max_iter must be >= 1")
        _require(self.horizon >= 1, "horizon must be >= 1")
        _require(self.window >= 2, "window must be >= 2")
        _require(self.step >= 1, "step must be >= 1")
        _require(self.threshold >= 0.0, "threshold must be >= 0")
        _require(self.impute_sweeps >= 1, "impute_sweeps must be >= 1")
        _require(self.impute_chains >= 1, "impute_chains must be >= 1")
        _require(self.fmse_split is None or self.fmse_split >= 1,
                 "fmse_split must be >= 1")
        _require(self.n_series >= 1, "n_series must be >= 1")
        _require(self.n_obs >= 2, "n_obs must be >= 2")
        _require(0.0 <= self.density <= 1.0, "density must be in [0, 1]")
        _require(self.coeff_scale >= 0.0, "coeff_scale must be >= 0")
        _require(self.innovation_sd > 0.0, "innovation_sd must be > 0")
        _require(self.n_groups >= 1, "n_groups must be >= 1")
        _require(self.burn_in >= 0, "burn_in must be >= 0")


_FIELD_NAMES = {f.name for f in dataclasses.fields(PipelineConfig)}


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def _as_int(name: str, value) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    if isinstance(value, float):
        if not value.is_integer():
            raise ConfigError(f"{name} must be an integer, got {value!r}")
        value = int(value)
    return int(value)


def _as_float(name: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    return float(value)


def load_config(path: str | None = None, **overrides) -> PipelineConfig:
    """Merge defaults, an optional JSON file, and keyword overrides.

    Precedence: override > file > default. Unknown keys in either source are
    rejected so typos cannot silently fall back to defaults.
    """
    merged = dataclasses.asdict(PipelineConfig())
    if path is not None:
        with open(path) as handle:
            payload = json.load(handle)
        if not isinstance(payload, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = sorted(set(payload) - _FIELD_NAMES)
        if unknown:
            raise ConfigError(f"unknown config key {unknown[0]!r}")
        merged.update(payload)
    unknown = sorted(set(overrides) - _FIELD_NAMES)
    if unknown:
        raise ConfigError(f"unknown config key {unknown[0]!r}")
    for key, value in overrides.items():
        if value is not None:
            merged[key] = value
    config = PipelineConfig(**merged)
    config.validate()
    return config


class _Timings:
    """Per-stage wall-clock accounting for the run manifest."""

    def __init__(self):
        self.items: dict = {}

    @contextmanager
    def stage(self, name: str):
        start = time.perf_counter()
        yield
        self.items[name] = time.perf_counter() - start


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=2)
        handle.write("\n")


def _write_manifest(config: PipelineConfig, command: str, timings: _Timings,
                    outputs: list, status: str = "ok", error: str | None = None,
                    extra: dict | None = None) -> str:
    path = os.path.join(config.out, "manifest.json")
    payload = {
        "command": command,
        "version": _version(),
        "seed": config.seed,
        "status": status,
        "config": dataclasses.asdict(config),
        "timings": dict(timings.items),
        "outputs": list(outputs),
    }
    if error is not None:
        payload["error"] = error
    if extra:
        payload.update(extra)
    _write_json(path, payload)
    return path


def _worker_count() -> int:
    raw = os.environ.get("SPARSEVAR_THREADS", "").strip()
    if not raw:
        return os.cpu_count() or 1
    try:
        workers = int(raw)
    except ValueError:
        raise ConfigError(f"SPARSEVAR_THREADS must be an integer, got {raw!r}") from None
    if workers < 1:
        raise ConfigError("SPARSEVAR_THREADS must be >= 1")
    return workers


def export_graph(table: connectedness.FevdTable, threshold: float, format: str,
                 stream, node_groups=None) -> int:
    """Write the directed connectedness network as DOT or JSON.

    An edge j -> i (shock source to receiver) is present iff theta[i, j]
    exceeds the threshold; self-links are never emitted. Nodes carry their
    group label and from/to/net totals; edges are sorted by (receiver,
    sender) so output is deterministic.

    Args:
        table: FevdTable, typically row-normalized for network export.
        threshold: minimum share for an edge, >= 0.
        format: "dot" or "json".
        stream: writable text stream.
        node_groups: optional per-node group labels.

    Returns:
        Number of edges written.
    """
    if format not in _FORMATS:
        raise InputError(f"unsupported graph format {format!r}")
    if threshold < 0:
        raise InputError("threshold must be >= 0")
    theta = table.theta
    k = table.n_series
    labels = table.labels or [f"V{i}" for i in range(k)]
    if node_groups is None:
        node_groups = [""] * k
    elif len(node_groups) != k:
        raise InputError(f"expected {k} node group labels, got {len(node_groups)}")
    summary = connectedness.summarize(table)
    edges = [(i, j) for i in range(k) for j in range(k)
             if i != j and theta[i, j] > threshold]
    if format == "dot":
        stream.write("digraph connectedness {\n")
        for i in range(k):
            stream.write('  "{}" [group="{}", from_others={}, to_others={}, net={}];\n'
                         .format(labels[i], node_groups[i],
                                 _fmt17(summary.from_others[i]),
                                 _fmt17(summary.to_others[i]),
                                 _fmt17(summary.net[i])))
        for i, j in edges:
            stream.write('  "{}" -> "{}" [weight={}];\n'.format(
                labels[j], labels[i], _fmt17(theta[i, j])))
        stream.write("}\n")
    else:
        payload = {
            "directed": True,
            "threshold": threshold,
            "normalized": table.normalized,
            "nodes": [{"id": labels[i], "group": node_groups[i],
                       "from_others": float(summary.from_others[i]),
                       "to_others": float(summary.to_others[i]),
                       "net": float(summary.net[i])} for i in range(k)],
            "edges": [{"source": labels[j], "target": labels[i],
                       "weight": float(theta[i, j])} for i, j in edges],
        }
        json.dump(payload, stream, indent=2)
        stream.write("\n")
    return len(edges)


def _fmt17(x: float) -> str:
    """17-significant-digit decimal form used in all text outputs."""
    return format(float(x), ".17g")


def cmd_simulate(config: PipelineConfig) -> int:
    """Write a synthetic price panel plus its generating truth.

    Draws a sparse stable VAR (rejection sampling on the spectral radius, at
    most 100 attempts), simulates returns, and writes the cumulated price
    panel, a truth JSON (coefficients, covariance, support mask), a cyclic
    group metadata CSV, and a run manifest under config.out.
    """
    timings = _Timings()
    k, p = config.n_series, config.p
    draw_seed, panel_seed = (int(s) for s in
                             np.random.SeedSequence(config.seed).generate_state(2))
    rng = np.random.default_rng(draw_seed)
    with timings.stage("draw"):
        coeffs = None
        for _ in range(100):
            support = rng.random((p, k, k)) < config.density
            lags = np.where(support,
                            rng.uniform(-config.coeff_scale, config.coeff_scale,
                                        size=(p, k, k)), 0.0)
            candidate = varcore.VarCoefficients(intercept=np.zeros(k), lags=lags)
            stable, radius = varcore.is_stable(candidate)
            if stable:
                coeffs = candidate
                break
        if coeffs is None:
            raise NumericError("no stable draw in 100 attempts; lower coeff_scale "
                               "or density")
    sigma = config.innovation_sd ** 2 * np.eye(k)
    with timings.stage("simulate"):
        returns = varcore.simulate(coeffs, sigma, config.n_obs,
                                   burn_in=config.burn_in, seed=panel_seed)
    prices = 100.0 + np.cumsum(returns.values, axis=0)
    price_rows = np.vstack([np.full((1, k), 100.0), prices])
    price_dates = [returns.dates[0] - datetime.timedelta(days=1)] + list(returns.dates)
    os.makedirs(config.out, exist_ok=True)
    outputs = []
    try:
        with timings.stage("write"):
            panel_path = os.path.join(config.out, "panel.csv")
            with open(panel_path, "w") as handle:
                dataset.write_panel_csv(handle, price_dates, price_rows,
                                        returns.symbols)
            outputs.append("panel.csv")
            truth = coeffs.to_dict()
            truth.update({
                "sigma": sigma.tolist(),
                "support": support.astype(int).tolist(),
                "seed": config.seed,
                "density": config.density,
                "coeff_scale": config.coeff_scale,
                "innovation_sd": config.innovation_sd,
                "spectral_radius": float(radius),
            })
            _write_json(os.path.join(config.out, "truth.json"), truth)
            outputs.append("truth.json")
            meta_path = os.path.join(config.out, "metadata.csv")
            with open(meta_path, "w") as handle:
                handle.write("symbol,type,description\n")
                for i, symbol in enumerate(returns.symbols):
                    handle.write(f"{symbol},T{i % config.n_groups},synthetic series {i}\n")
            outputs.append("metadata.csv")
    except Exception as exc:
        _write_manifest(config, "simulate", timings, outputs, status="failed",
                        error=str(exc))
        raise
    outputs.append("manifest.json")
    _write_manifest(config, "simulate", timings, outputs)
    return 0


def _load_inputs(config: PipelineConfig):
    if not config.input:
        raise ConfigError("input panel path is required")
    panel = dataset.load_panel(config.input)
    catalog = dataset.load_catalog(config.metadata) if config.metadata else None
    return panel, catalog


def _prepare_returns(config: PipelineConfig, timings: _Timings):
    """load -> difference -> impute, shared by pipeline and roll."""
    with timings.stage("load"):
        panel, catalog = _load_inputs(config)
    with timings.stage("difference"):
        returns = dataset.difference(panel, config.transform)
    with timings.stage("impute"):
        returns, impute_report = dataset.impute(returns,
                                                sweeps=config.impute_sweeps,
                                                m=config.impute_chains,
                                                seed=config.seed)
    if catalog is not None:
        groups = dataset.group_map(catalog, returns.symbols)
        group_names = dataset.group_labels(catalog, returns.symbols)
    else:
        groups = {i: i for i in range(len(returns.symbols))}
        group_names = list(returns.symbols)
    return returns, groups, group_names, impute_report


def _fit_kwargs(config: PipelineConfig) -> dict:
    return {
        "d_keep": config.d_keep,
        "lam": config.lam,
        "a": config.a,
        "n_lambda": config.n_lambda,
        "lambda_ratio": config.lambda_ratio,
        "max_iter": config.sis_max_iter,
    }


def cmd_pipeline(config: PipelineConfig) -> int:
    """Full static run: load, difference, impute, select, fit, FEVD, export.

    Emits connectedness.csv and group_table.csv (raw theta scaled by 100,
    conventional table layout), summary.json, a network graph from the
    row-normalized table, criteria.csv when p_max is set, fmse.csv when
    fmse_split is set, and manifest.json. Nothing is written if the inputs
    cannot be loaded; a mid-run failure leaves a manifest flagged "failed".
    """
    timings = _Timings()
    returns, groups, group_names, impute_report = _prepare_returns(
        config, timings)
    kind = selection.estimator_kind(config.estimator)
    os.makedirs(config.out, exist_ok=True)
    outputs = []
    extra: dict = {}
    try:
        lag_selection = None
        chosen_p = config.p
        if config.p_max is not None:
            with timings.stage("select"):
                lag_selection = selection.select_lag(returns, config.p_max,
                                                     estimator=config.estimator,
                                                     **_fit_kwargs(config))
            chosen_p = lag_selection.best["bic"]
            extra["chosen_p"] = dict(lag_selection.best)
        with timings.stage("fit"):
            fit = screening.fit_var(returns, chosen_p, kind=kind,
                                    **_fit_kwargs(config))
            resid = varcore.residuals(returns, fit.coeffs)
            sigma = varcore.residual_covariance(resid)
            stable, radius = varcore.is_stable(fit.coeffs)
        with timings.stage("fevd"):
            table = connectedness.fevd(fit.coeffs, sigma, config.horizon,
                                       labels=returns.symbols,
                                       warn_unstable=False)
            scaled = connectedness.FevdTable(theta=table.theta * 100.0,
                                             horizon=table.horizon,
                                             normalized=False,
                                             labels=list(returns.symbols))
            summary = connectedness.summarize(scaled)
            grouped = connectedness.aggregate(scaled, groups, labels=group_names)
            within, cross = connectedness.decompose_within_cross(scaled, groups)
        with timings.stage("export"):
            with open(os.path.join(config.out, "connectedness.csv"), "w") as handle:
                connectedness.table_to_csv(scaled, handle, summary=summary)
            outputs.append("connectedness.csv")
            with open(os.path.join(config.out, "group_table.csv"), "w") as handle:
                connectedness.group_table_to_csv(grouped, handle)
            outputs.append("group_table.csv")
            summary_payload = {
                "estimator": selection.canonical_tag(config.estimator),
                "p": chosen_p,
                "horizon": config.horizon,
                "scale": 100,
                "labels": list(returns.symbols),
                "from_others": summary.from_others.tolist(),
                "to_others": summary.to_others.tolist(),
                "net": summary.net.tolist(),
                "total": {"sum": summary.total, "mean": summary.total_mean},
                "within": within,
                "cross": cross,
                "stable": bool(stable),
                "spectral_radius": float(radius),
                "groups": {"labels": group_names,
                           "assignment": [int(groups[i]) for i in
                                          range(len(returns.symbols))]},
                "imputation": {"seed": impute_report.seed,
                               "sweeps": impute_report.sweeps,
                               "chains": impute_report.n_chains,
                               "cells_filled": sum(
                                   impute_report.imputed_counts.values())},
            }
            if lag_selection is not None:
                summary_payload["criteria"] = [
                    {"estimator": row.estimator, "p": row.p, "aic": row.aic,
                     "hq": row.hq, "bic": row.bic} for row in lag_selection.rows]
                with open(os.path.join(config.out, "criteria.csv"), "w") as handle:
                    selection.criteria_to_csv(lag_selection.rows, handle)
                outputs.append("criteria.csv")
            _write_json(os.path.join(config.out, "summary.json"), summary_payload)
            outputs.append("summary.json")
            graph_name = f"graph.{config.format}"
            normalized = connectedness.normalize_rows(table)
            node_groups = [group_names[groups[i]] for i in
                           range(len(returns.symbols))]
            with open(os.path.join(config.out, graph_name), "w") as handle:
                export_graph(normalized, config.threshold, config.format,
                             handle, node_groups=node_groups)
            outputs.append(graph_name)
        if config.fmse_split is not None:
            with timings.stage("fmse"):
                report = selection.rolling_fmse(returns, config.fmse_split,
                                                estimator=config.estimator,
                                                p=chosen_p,
                                                **_fit_kwargs(config))
                with open(os.path.join(config.out, "fmse.csv"), "w") as handle:
                    selection.fmse_to_csv([report], handle)
                outputs.append("fmse.csv")
                extra["fmse"] = {"estimator": report.estimator, "p": report.p,
                                 "fmse": report.fmse,
                                 "steps": len(report.step_errors)}
    except Exception as exc:
        _write_manifest(config, "pipeline", timings, outputs, status="failed",
                        error=str(exc), extra=extra)
        raise
    outputs.append("manifest.json")
    _write_manifest(config, "pipeline", timings, outputs, extra=extra)
    return 0


def cmd_roll(config: PipelineConfig) -> int:
    """Rolling-window connectedness series.

    Emits rolling.csv (one row per window: totals per horizon, within/cross
    split, stability) and rolling.json (the same series plus Welch mean-
    difference tests between horizon pairs when several horizons are
    requested), all on the x100 table scale, plus manifest.json.
    """
    timings = _Timings()
    returns, groups, group_names, impute_report = _prepare_returns(
        config, timings)
    kind = selection.estimator_kind(config.estimator)
    horizons = config.horizons if config.horizons else (config.horizon,)
    roll_config = connectedness.RollingConfig(p=config.p, kind=kind,
                                              horizons=tuple(horizons),
                                              d_keep=config.d_keep,
                                              lam=config.lam, a=config.a,
                                              n_lambda=config.n_lambda,
                                              lambda_ratio=config.lambda_ratio,
                                              max_iter=config.sis_max_iter)
    with timings.stage("roll"):
        series = connectedness.rolling_connectedness(
            returns, window=config.window, step=config.step, config=roll_config,
            groups=groups, labels=returns.symbols, workers=_worker_count())
    os.makedirs(config.out, exist_ok=True)
    outputs = []
    try:
        with timings.stage("export"):
            dates = returns.dates
            with open(os.path.join(config.out, "rolling.csv"), "w") as handle:
                header = ["start", "end", "start_date", "end_date"]
                for h in series.horizons:
                    header.extend([f"total_sum_h{h}", f"total_mean_h{h}"])
                header.extend(["within", "cross", "stable", "spectral_radius"])
                handle.write(",".join(header) + "\n")
                for win in series.windows:
                    row = [str(win.start), str(win.end),
                           dates[win.start].isoformat(),
                           dates[win.end - 1].isoformat()]
                    for h in series.horizons:
                        row.append(_fmt17(win.totals[h]["sum"] * 100.0))
                        row.append(_fmt17(win.totals[h]["mean"] * 100.0))
                    row.extend([_fmt17(win.within * 100.0),
                                _fmt17(win.cross * 100.0),
                                str(int(win.stable)),
                                _fmt17(win.radius)])
                    handle.write(",".join(row) + "\n")
            outputs.append("rolling.csv")
            payload = {
                "window": series.window_length,
                "step": series.step,
                "horizons": list(series.horizons),
                "scale": 100,
                "n_windows": len(series.windows),
                "starts": [w.start for w in series.windows],
                "totals": {str(h): (series.total_series(h) * 100.0).tolist()
                           for h in series.horizons},
                "within": [w.within * 100.0 for w in series.windows],
                "cross": [w.cross * 100.0 for w in series.windows],
                "skipped": series.skipped,
            }
            if len(series.horizons) >= 2 and len(series.windows) >= 2:
                tests = {}
                for a_idx in range(len(series.horizons)):
                    for b_idx in range(a_idx + 1, len(series.horizons)):
                        ha, hb = series.horizons[a_idx], series.horizons[b_idx]
                        t, df, p_value = selection.welch_t_test(
                            series.total_series(ha), series.total_series(hb))
                        tests[f"h{ha}_vs_h{hb}"] = {"t": t, "df": df,
                                                    "p": p_value}
                payload["welch"] = tests
            _write_json(os.path.join(config.out, "rolling.json"), payload)
            outputs.append("rolling.json")
    except Exception as exc:
        _write_manifest(config, "roll", timings, outputs, status="failed",
                        error=str(exc))
        raise
    outputs.append("manifest.json")
    _write_manifest(config, "roll", timings, outputs,
                    extra={"n_windows": len(series.windows),
                           "n_skipped": len(series.skipped)})
    return 0


def _cmd_export_graph(config: PipelineConfig) -> int:
    """Re-export a written connectedness table as a network graph."""
    if not config.input:
        raise ConfigError("input table path is required")
    with open(config.input) as handle:
        table, _ = connectedness.table_from_csv(handle)
    if config.normalize:
        table = connectedness.normalize_rows(table)
    os.makedirs(config.out, exist_ok=True)
    path = os.path.join(config.out, f"graph.{config.format}")
    with open(path, "w") as handle:
        export_graph(table, config.threshold, config.format, handle)
    return 0


def _int_list(text: str) -> list:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated integers, got {text!r}") from None


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparsevar",
        description="Sparse VAR estimation and connectedness network analysis.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", metavar="PATH",
                        help="JSON config file; flags override its keys")
        sp.add_argument("--seed", type=int, metavar="N")
        sp.add_argument("--out", metavar="DIR", help="output directory")

    def estimation(sp):
        sp.add_argument("--estimator", choices=_ESTIMATORS)
        sp.add_argument("--p", type=int, metavar="N", help="lag order")
        sp.add_argument("--d-keep", type=int, metavar="N",
                        help="screening set size")
        sp.add_argument("--lam", type=float, metavar="X",
                        help="fixed penalty level (default: per-fit BIC path)")
        sp.add_argument("--a", type=float, metavar="X")
        sp.add_argument("--n-lambda", type=int, metavar="N")
        sp.add_argument("--lambda-ratio", type=float, metavar="X")
        sp.add_argument("--sis-max-iter", type=int, metavar="N")
        sp.add_argument("--transform", choices=_TRANSFORMS)
        sp.add_argument("--impute-sweeps", type=int, metavar="N")
        sp.add_argument("--impute-chains", type=int, metavar="N")

    sim = sub.add_parser("simulate",
                         help="write a synthetic panel with known truth")
    common(sim)
    sim.add_argument("--n-series", type=int, metavar="K")
    sim.add_argument("--p", type=int, metavar="N", help="lag order")
    sim.add_argument("--n-obs", type=int, metavar="T")
    sim.add_argument("--density", type=float, metavar="X")
    sim.add_argument("--coeff-scale", type=float, metavar="X")
    sim.add_argument("--innovation-sd", type=float, metavar="X")
    sim.add_argument("--n-groups", type=int, metavar="G")
    sim.add_argument("--burn-in", type=int, metavar="N")
    sim.set_defaults(handler=cmd_simulate)

    pipe = sub.add_parser("pipeline",
                          help="static end-to-end estimation and export")
    common(pipe)
    pipe.add_argument("--input", metavar="PATH", help="price panel CSV")
    pipe.add_argument("--metadata", metavar="PATH", help="contract catalog CSV")
    estimation(pipe)
    pipe.add_argument("--p-max", type=int, metavar="N",
                      help="select lag order up to N by BIC")
    pipe.add_argument("--horizon", type=int, metavar="Q")
    pipe.add_argument("--threshold", type=float, metavar="X")
    pipe.add_argument("--format", choices=_FORMATS)
    pipe.add_argument("--fmse-split", type=int, metavar="N",
                      help="out-of-sample split for forecast evaluation")
    pipe.set_defaults(handler=cmd_pipeline)

    roll = sub.add_parser("roll", help="rolling-window connectedness series")
    common(roll)
    roll.add_argument("--input", metavar="PATH", help="price panel CSV")
    roll.add_argument("--metadata", metavar="PATH", help="contract catalog CSV")
    estimation(roll)
    roll.add_argument("--horizon", type=int, metavar="Q")
    roll.add_argument("--horizons", type=_int_list, metavar="Q1,Q2",
                      help="comma-separated horizons (overrides --horizon)")
    roll.add_argument("--window", type=int, metavar="N")
    roll.add_argument("--step", type=int, metavar="N")
    roll.set_defaults(handler=cmd_roll)

    export = sub.add_parser("export-graph",
                            help="convert a table CSV into a DOT/JSON graph")
    common(export)
    export.add_argument("--input", metavar="PATH", help="connectedness table CSV")
    export.add_argument("--threshold", type=float, metavar="X")
    export.add_argument("--format", choices=_FORMATS)
    export.add_argument("--normalize", action=argparse.BooleanOptionalAction,
                        help="row-normalize before export (default: yes)")
    export.set_defaults(handler=_cmd_export_graph)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    overrides = {key: value for key, value in vars(args).items()
                 if key in _FIELD_NAMES}
    if overrides.get("horizons") is not None:
        overrides["horizons"] = tuple(overrides["horizons"])
    try:
        config = load_config(args.config, **overrides)
        return args.handler(config)
    except (InputError, ConfigError, FileNotFoundError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SparseVarError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
