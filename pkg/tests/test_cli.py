import json
import os

import numpy as np
import pytest

from sparsevar import (
    ConfigError,
    FevdTable,
    InputError,
    VarCoefficients,
    fevd,
    table_from_csv,
)
from sparsevar.cli import (
    PipelineConfig,
    export_graph,
    load_config,
    main,
)
import io


def run(argv):
    return main([str(a) for a in argv])


def read(path):
    with open(path) as handle:
        return handle.read()


def simulate_panel(tmp_path, name="sim", **flags):
    out = tmp_path / name
    args = ["simulate", "--out", out, "--n-series", 5, "--n-obs", 120,
            "--seed", 7, "--density", 0.2]
    for key, value in flags.items():
        args.extend([f"--{key.replace('_', '-')}", value])
    assert run(args) == 0
    return out


class TestLoadConfig:
    def test_defaults_validate(self):
        config = load_config()
        assert config.estimator == "lasso"
        assert config.horizon == 10

    def test_file_then_flag_precedence(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"p": 3, "horizon": 4}))
        config = load_config(str(path))
        assert (config.p, config.horizon) == (3, 4)
        config = load_config(str(path), p=5)
        assert (config.p, config.horizon) == (5, 4)

    def test_unknown_key_in_file(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"lagorder": 3}))
        with pytest.raises(ConfigError, match="lagorder"):
            load_config(str(path))

    def test_unknown_override(self):
        with pytest.raises(ConfigError):
            load_config(horizonn=3)

    def test_type_and_range_checks(self):
        with pytest.raises(ConfigError):
            load_config(p="two")
        with pytest.raises(ConfigError):
            load_config(p=0)
        with pytest.raises(ConfigError):
            load_config(lambda_ratio=1.5)
        with pytest.raises(ConfigError):
            load_config(a=2.0)
        with pytest.raises(ConfigError):
            load_config(density=1.2)
        with pytest.raises(ConfigError):
            load_config(estimator="ridge")
        with pytest.raises(ConfigError):
            load_config(horizons=[10, 0])
        with pytest.raises(ConfigError):
            load_config(normalize="yes")

    def test_non_object_config_file(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigError):
            load_config(str(path))


class TestSimulate:
    def test_same_seed_identical_files(self, tmp_path):
        out1 = simulate_panel(tmp_path, "a")
        out2 = simulate_panel(tmp_path, "b")
        for name in ("panel.csv", "truth.json", "metadata.csv"):
            assert read(out1 / name) == read(out2 / name)

    def test_zero_density_null_model(self, tmp_path):
        out = tmp_path / "null"
        assert run(["simulate", "--out", out, "--n-series", 3, "--n-obs", 50,
                    "--seed", 1, "--density", 0.0]) == 0
        truth = json.loads(read(out / "truth.json"))
        assert np.asarray(truth["support"]).sum() == 0
        assert np.abs(np.asarray(truth["lags"])).max() == 0.0

    def test_truth_round_trips_into_coefficients(self, tmp_path):
        out = simulate_panel(tmp_path)
        truth = json.loads(read(out / "truth.json"))
        coeffs = VarCoefficients.from_dict(truth)
        assert coeffs.n_series == 5
        lags = np.asarray(truth["lags"])
        support = np.asarray(truth["support"], dtype=bool)
        assert np.all((lags != 0) <= support)
        assert truth["spectral_radius"] < 1
        again = VarCoefficients.from_dict(coeffs.to_dict())
        np.testing.assert_array_equal(again.lags, coeffs.lags)
        np.testing.assert_array_equal(again.intercept, coeffs.intercept)

    def test_panel_starts_at_base_price(self, tmp_path):
        out = simulate_panel(tmp_path)
        lines = read(out / "panel.csv").splitlines()
        first = lines[1].split(",")
        assert all(float(x) == 100.0 for x in first[1:])

    def test_unstable_settings_exit_one(self, tmp_path):
        out = tmp_path / "bad"
        code = run(["simulate", "--out", out, "--n-series", 5, "--n-obs", 50,
                    "--seed", 0, "--density", 1.0, "--coeff-scale", 5.0])
        assert code == 1
        assert not out.exists()

    def test_manifest_lists_existing_outputs(self, tmp_path):
        out = simulate_panel(tmp_path)
        manifest = json.loads(read(out / "manifest.json"))
        assert manifest["command"] == "simulate"
        assert manifest["status"] == "ok"
        assert manifest["seed"] == 7
        assert set(manifest["outputs"]) == {"panel.csv", "truth.json",
                                            "metadata.csv", "manifest.json"}
        for name in manifest["outputs"]:
            assert (out / name).exists()
        assert manifest["timings"]


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    tmp_path = tmp_path_factory.mktemp("cli")
    return simulate_panel(tmp_path)


class TestPipeline:
    def test_smoke_outputs_and_identities(self, sim_dir, tmp_path):
        out = tmp_path / "pipe"
        code = run(["pipeline", "--input", sim_dir / "panel.csv",
                    "--metadata", sim_dir / "metadata.csv",
                    "--out", out, "--p", 1, "--horizon", 5, "--seed", 7])
        assert code == 0
        manifest = json.loads(read(out / "manifest.json"))
        assert manifest["status"] == "ok"
        for name in manifest["outputs"]:
            assert (out / name).exists()
        summary = json.loads(read(out / "summary.json"))
        assert summary["p"] == 1
        assert summary["scale"] == 100
        assert len(summary["from_others"]) == 5
        net = np.asarray(summary["net"])
        np.testing.assert_allclose(
            net, np.asarray(summary["to_others"]) - np.asarray(summary["from_others"]),
            atol=1e-12)
        assert abs(net.sum()) < 1e-10
        assert summary["within"] + summary["cross"] == pytest.approx(
            summary["total"]["sum"], rel=1e-12)
        assert summary["total"]["mean"] == pytest.approx(
            summary["total"]["sum"] / 5, rel=1e-12)

        table, loaded_summary = table_from_csv(io.StringIO(read(out / "connectedness.csv")))
        np.testing.assert_allclose(loaded_summary.from_others,
                                   summary["from_others"], rtol=1e-15)
        assert read(out / "graph.dot").startswith("digraph connectedness {")

    def test_missing_input_exit_two_no_outputs(self, tmp_path):
        out = tmp_path / "never"
        code = run(["pipeline", "--input", tmp_path / "absent.csv", "--out", out])
        assert code == 2
        assert not out.exists()

    def test_lag_scan_writes_criteria(self, sim_dir, tmp_path):
        out = tmp_path / "scan"
        code = run(["pipeline", "--input", sim_dir / "panel.csv",
                    "--out", out, "--p-max", 2, "--horizon", 5])
        assert code == 0
        assert (out / "criteria.csv").exists()
        summary = json.loads(read(out / "summary.json"))
        assert [row["p"] for row in summary["criteria"]] == [1, 2]
        manifest = json.loads(read(out / "manifest.json"))
        assert manifest["chosen_p"]["bic"] == summary["p"]

    def test_fmse_split_writes_report(self, sim_dir, tmp_path):
        out = tmp_path / "fm"
        code = run(["pipeline", "--input", sim_dir / "panel.csv",
                    "--out", out, "--p", 1, "--horizon", 5,
                    "--fmse-split", 100])
        assert code == 0
        lines = read(out / "fmse.csv").splitlines()
        assert lines[0] == "lag,iterated-sis-lasso"
        manifest = json.loads(read(out / "manifest.json"))
        assert manifest["fmse"]["steps"] == 20

    def test_json_graph_format(self, sim_dir, tmp_path):
        out = tmp_path / "jg"
        code = run(["pipeline", "--input", sim_dir / "panel.csv",
                    "--out", out, "--p", 1, "--horizon", 5,
                    "--format", "json", "--threshold", 0.0])
        assert code == 0
        graph = json.loads(read(out / "graph.json"))
        assert graph["directed"] is True
        assert graph["normalized"] is True
        assert len(graph["nodes"]) == 5
        assert len(graph["edges"]) == 20

    def test_byte_identical_reruns(self, sim_dir, tmp_path):
        outs = []
        for name in ("d1", "d2"):
            out = tmp_path / name
            assert run(["pipeline", "--input", sim_dir / "panel.csv",
                        "--metadata", sim_dir / "metadata.csv",
                        "--out", out, "--p", 1, "--horizon", 5,
                        "--seed", 3]) == 0
            outs.append(out)
        for name in ("connectedness.csv", "group_table.csv", "summary.json",
                     "graph.dot"):
            assert read(outs[0] / name) == read(outs[1] / name)

    def test_flag_overrides_config_file(self, sim_dir, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"input": str(sim_dir / "panel.csv"),
                                   "p": 1, "horizon": 4}))
        out = tmp_path / "ov"
        code = run(["pipeline", "--config", cfg, "--out", out, "--p", 2])
        assert code == 0
        summary = json.loads(read(out / "summary.json"))
        assert summary["p"] == 2
        assert summary["horizon"] == 4

    def test_unknown_config_key_exit_two(self, sim_dir, tmp_path):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"inptu": str(sim_dir / "panel.csv")}))
        assert run(["pipeline", "--config", cfg, "--out", tmp_path / "x"]) == 2

    def test_malformed_config_json_exit_two(self, sim_dir, tmp_path):
        cfg = tmp_path / "broken.json"
        cfg.write_text("{not json")
        assert run(["pipeline", "--config", cfg, "--out", tmp_path / "x"]) == 2


class TestRoll:
    def test_degenerate_window_matches_static(self, sim_dir, tmp_path):
        static_out = tmp_path / "static"
        assert run(["pipeline", "--input", sim_dir / "panel.csv",
                    "--out", static_out, "--p", 1, "--horizon", 6]) == 0
        summary = json.loads(read(static_out / "summary.json"))

        roll_out = tmp_path / "roll1"
        assert run(["roll", "--input", sim_dir / "panel.csv",
                    "--out", roll_out, "--p", 1, "--horizon", 6,
                    "--window", 120, "--step", 1]) == 0
        payload = json.loads(read(roll_out / "rolling.json"))
        assert payload["n_windows"] == 1
        assert payload["totals"]["6"][0] == pytest.approx(
            summary["total"]["sum"], rel=1e-12)
        lines = read(roll_out / "rolling.csv").splitlines()
        assert len(lines) == 2
        header = lines[0].split(",")
        assert header[:4] == ["start", "end", "start_date", "end_date"]
        assert "total_sum_h6" in header

    def test_two_runs_identical(self, sim_dir, tmp_path):
        outs = []
        for name in ("r1", "r2"):
            out = tmp_path / name
            assert run(["roll", "--input", sim_dir / "panel.csv",
                        "--out", out, "--p", 1, "--horizon", 6,
                        "--window", 60, "--step", 20, "--seed", 5]) == 0
            outs.append(out)
        assert read(outs[0] / "rolling.csv") == read(outs[1] / "rolling.csv")
        assert read(outs[0] / "rolling.json") == read(outs[1] / "rolling.json")

    def test_horizon_pair_welch_reported(self, sim_dir, tmp_path):
        out = tmp_path / "pair"
        assert run(["roll", "--input", sim_dir / "panel.csv",
                    "--out", out, "--horizons", "8,10", "--p", 1,
                    "--window", 60, "--step", 15]) == 0
        payload = json.loads(read(out / "rolling.json"))
        assert payload["horizons"] == [8, 10]
        welch = payload["welch"]["h8_vs_h10"]
        assert set(welch) == {"t", "df", "p"}
        assert 0.0 <= welch["p"] <= 1.0
        assert payload["n_windows"] == 5
        assert payload["skipped"] == []
        header = read(out / "rolling.csv").splitlines()[0].split(",")
        assert "total_sum_h8" in header and "total_mean_h10" in header

    def test_too_short_panel_exit_two(self, sim_dir, tmp_path):
        assert run(["roll", "--input", sim_dir / "panel.csv",
                    "--out", tmp_path / "x", "--window", 500]) == 2


class TestExportGraph:
    def two_node_table(self):
        coeffs = VarCoefficients(intercept=np.zeros(2),
                                 lags=np.array([[[0.5, 0.2], [0.15, 0.4]]]))
        return fevd(coeffs, np.eye(2), horizon=3, labels=["A", "B"])

    def test_threshold_above_max_no_edges(self):
        table = self.two_node_table()
        buf = io.StringIO()
        n = export_graph(table, 10.0, "dot", buf)
        assert n == 0
        assert "->" not in buf.getvalue()
        assert buf.getvalue().count("[group=") == 2

    def test_diagonal_only_no_self_loops(self):
        table = FevdTable(theta=np.diag([1.0, 1.0]), horizon=5)
        buf = io.StringIO()
        assert export_graph(table, 0.0, "dot", buf) == 0

    def test_two_node_oracle_edges(self):
        table = self.two_node_table()
        buf = io.StringIO()
        n = export_graph(table, 0.0, "dot", buf)
        assert n == 2
        text = buf.getvalue()
        assert f'"B" -> "A" [weight={format(table.theta[0, 1], ".17g")}];' in text
        assert f'"A" -> "B" [weight={format(table.theta[1, 0], ".17g")}];' in text

    def test_json_payload(self):
        table = self.two_node_table()
        buf = io.StringIO()
        n = export_graph(table, 0.0, "json", buf, node_groups=["g1", "g2"])
        payload = json.loads(buf.getvalue())
        assert n == len(payload["edges"]) == 2
        assert [node["id"] for node in payload["nodes"]] == ["A", "B"]
        assert payload["nodes"][0]["group"] == "g1"
        edge = payload["edges"][0]
        assert edge["source"] == "B" and edge["target"] == "A"
        assert edge["weight"] == pytest.approx(table.theta[0, 1])

    def test_validation(self):
        table = self.two_node_table()
        with pytest.raises(InputError):
            export_graph(table, 0.0, "graphml", io.StringIO())
        with pytest.raises(InputError):
            export_graph(table, -0.1, "dot", io.StringIO())
        with pytest.raises(InputError):
            export_graph(table, 0.0, "dot", io.StringIO(), node_groups=["x"])

    def test_cli_round_trip_from_table_csv(self, sim_dir, tmp_path):
        pipe_out = tmp_path / "pipe"
        assert run(["pipeline", "--input", sim_dir / "panel.csv",
                    "--out", pipe_out, "--p", 1, "--horizon", 5]) == 0
        graph_out = tmp_path / "graph"
        code = run(["export-graph", "--input", pipe_out / "connectedness.csv",
                    "--out", graph_out, "--format", "json",
                    "--threshold", 0.0])
        assert code == 0
        payload = json.loads(read(graph_out / "graph.json"))
        assert payload["normalized"] is True
        assert len(payload["nodes"]) == 5

        raw_out = tmp_path / "rawgraph"
        code = run(["export-graph", "--input", pipe_out / "connectedness.csv",
                    "--out", raw_out, "--no-normalize", "--format", "json"])
        assert code == 0
        raw = json.loads(read(raw_out / "graph.json"))
        assert raw["normalized"] is False

    def test_missing_table_exit_two(self, tmp_path):
        assert run(["export-graph", "--input", tmp_path / "none.csv",
                    "--out", tmp_path / "g"]) == 2


class TestWorkerEnv:
    def test_thread_cap_parsed(self, monkeypatch):
        from sparsevar.cli import _worker_count
        monkeypatch.setenv("SPARSEVAR_THREADS", "3")
        assert _worker_count() == 3
        monkeypatch.setenv("SPARSEVAR_THREADS", "zero")
        with pytest.raises(ConfigError):
            _worker_count()
        monkeypatch.setenv("SPARSEVAR_THREADS", "0")
        with pytest.raises(ConfigError):
            _worker_count()
        monkeypatch.delenv("SPARSEVAR_THREADS")
        assert _worker_count() >= 1
