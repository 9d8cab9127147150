import json
import math

import numpy as np
import pytest

from pflow import cli, harness, persist
from pflow.config import (
    ConfigError,
    InfeasibleCertificate,
    RunConfig,
    build_cert,
    build_domain,
    build_target,
    deep_merge,
    load_config,
)
from pflow.diagnostics import MonitorReport
from oracles import R_MAX_P2

HEADER = "step,t,eps,energy,dissipation_residual,max_fstar,max_phi,stationarity_residual,drift"


def small_config(**flow) -> dict:
    f = {"p": 2, "eps_list": [1e-2], "dt_safety": 0.5, "t_end": 50.0, "stat_tol": 1e-6}
    f.update(flow)
    return {
        "domain": {"type": "flat_torus", "m": 2, "n": 8, "period": 2 * math.pi},
        "target": {"type": "sphere", "params": {"n": 2}},
        "ball": {"r": 0.2},
        "flow": f,
        "seed": 3,
    }


@pytest.fixture(scope="module")
def record():
    return harness.execute(RunConfig.from_dict(small_config()), "small")


class TestConfig:
    def test_roundtrip(self):
        cfg = RunConfig.from_dict(small_config())
        assert RunConfig.from_dict(cfg.to_dict()).to_dict() == cfg.to_dict()

    @pytest.mark.parametrize(
        "patch",
        [
            {"bogus": 1},
            {"flow": {"bogus": 1}},
            {"domain": None},
            {"seed": "x"},
            {"ball": 3},
        ],
    )
    def test_rejects(self, patch):
        data = small_config()
        for k, v in patch.items():
            if isinstance(v, dict) and isinstance(data.get(k), dict):
                data[k].update(v)
            else:
                data[k] = v
        with pytest.raises(ConfigError):
            RunConfig.from_dict(data)

    def test_load_missing(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "missing.json")

    def test_load_bad_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config(p)

    def test_deep_merge(self):
        base = {"a": {"b": 1, "c": 2}, "d": [1]}
        out = deep_merge(base, {"a": {"c": 3}, "d": [2]})
        assert out == {"a": {"b": 1, "c": 3}, "d": [2]}
        assert base == {"a": {"b": 1, "c": 2}, "d": [1]}

    def test_builders(self):
        assert build_domain({"n": 8, "m": 1}).sizes == (8,)
        with pytest.raises(ConfigError):
            build_domain({"type": "sphere", "n": 8})
        with pytest.raises(ConfigError):
            build_domain({"m": 2})
        with pytest.raises(ConfigError):
            build_target({"type": "hyperbolic"})

    def test_cert_a_above_r_squared(self):
        tgt = build_target({"type": "sphere", "params": {"n": 2}})
        assert build_cert({"r": 0.2, "a": 0.02}, tgt).a == 0.02
        with pytest.raises(InfeasibleCertificate):
            build_cert({"r": 0.2, "a": 0.05}, tgt)

    def test_cap_needs_sphere(self):
        with pytest.raises(ConfigError):
            build_cert({"r": 0.2}, build_target({"type": "clifford"}))


class TestPreflight:
    def test_inadmissible_delta(self):
        data = small_config(p=3)
        with pytest.raises(InfeasibleCertificate):
            harness.prepare(RunConfig.from_dict(data))

    def test_u0_outside_ball(self):
        data = small_config()
        data["init"] = {"generator": "cap", "radius": 0.25}
        with pytest.raises(InfeasibleCertificate):
            harness.prepare(RunConfig.from_dict(data))

    def test_s1_radius_above_threshold(self):
        with pytest.raises(InfeasibleCertificate):
            harness.scenario_S1_compact_cap(p=2, r=0.3)
        with pytest.raises(InfeasibleCertificate):
            harness.scenario_S1_compact_cap(p=2, r=R_MAX_P2 + 1e-9)
        harness.scenario_S1_compact_cap(p=2, r=R_MAX_P2 - 1e-6)

    def test_unknown_scenario(self):
        with pytest.raises(ConfigError):
            harness.get_scenario("S9")


class TestRecord:
    def test_passes(self, record):
        assert record.passed, record.flags()
        assert set(record.properties) >= {"energy_monotone", "confinement", "phi_monotone", "stationarity", "drift"}

    def test_csv_header(self, record):
        text = record.series_csv()
        assert text.splitlines()[0] == HEADER
        assert persist.SERIES_HEADER == HEADER
        assert len(text.splitlines()) == len(record.report) + 1

    def test_flags_recomputable_from_csv(self, record, tmp_path):
        record.write(tmp_path)
        cols = persist.read_series_csv(tmp_path / "series.csv")
        rep = MonitorReport(**{k: list(v) for k, v in cols.items()})
        again = harness.series_flags(rep, 1e-6, 1e-12, True, True)
        for k, chk in again.items():
            assert chk.passed == record.properties[k].passed
            assert chk.value == pytest.approx(record.properties[k].value, rel=1e-12, abs=1e-300)

    def test_artifacts(self, record, tmp_path):
        record.write(tmp_path)
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["config"] == json.loads(json.dumps(record.config))
        assert summary["passed"] is True
        assert summary["properties"]["confinement"]["passed"] is True
        assert all(v["property"] for v in summary["properties"].values())
        assert summary["wall_time"] > 0
        assert summary["final"]["steps"] == record.result.steps
        assert summary["certificate"]["delta_p"] == 3.0
        u = np.load(tmp_path / "final_state.npy")
        assert np.array_equal(u, record.final_state.u)

    def test_deterministic(self, record):
        again = harness.execute(RunConfig.from_dict(small_config()), "small")
        assert again.series_csv() == record.series_csv()
        assert np.array_equal(again.final_state.u, record.final_state.u)

    def test_failure_is_reported(self):
        rec = harness.execute(RunConfig.from_dict(small_config(stat_tol=1e-14, t_end=0.05)))
        assert not rec.passed
        assert rec.flags()["stationarity"] is False
        assert rec.properties["stationarity"].statement == harness.STATEMENTS["stationarity"]


class TestPersist:
    def test_csv_nan_and_repr(self):
        rep = MonitorReport(
            step=[0], t=[0.1], eps=[1e-2], energy=[1 / 3], dissipation_residual=[0.0],
            max_fstar=[np.nan], max_phi=[np.nan], stationarity_residual=[1.0], drift=[0.0],
        )
        line = persist.series_csv_text(rep).splitlines()[1]
        assert line == f"0,0.1,0.01,{1 / 3!r},0.0,nan,nan,1.0,0.0"

    def test_read_rejects_header(self, tmp_path):
        p = tmp_path / "s.csv"
        p.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError):
            persist.read_series_csv(p)

    def test_summary_nonfinite(self, tmp_path):
        persist.write_summary({"x": np.float64("nan"), "y": np.arange(2), "z": np.bool_(True)}, tmp_path / "s.json")
        assert json.loads((tmp_path / "s.json").read_text()) == {"x": None, "y": [0, 1], "z": True}


class TestCLI:
    def test_cert_admissible(self, capsys):
        assert cli.main(["cert", "--target", "sphere", "--p", "2", "--m", "2", "--r", "0.2"]) == 0
        out = capsys.readouterr().out
        assert "ADMISSIBLE" in out and "NOT ADMISSIBLE" not in out
        assert "6.084004" in out and "3.000000" in out

    def test_cert_json(self, capsys):
        assert cli.main(["cert", "--r", "0.2", "--json"]) == 0
        data = json.loads(capsys.readouterr().out)
        assert data["delta"] == pytest.approx(1 / (4 * math.tan(0.2) ** 2), rel=1e-12)
        assert data["delta_grid"] == pytest.approx(data["delta"], abs=1e-8)
        assert data["r_max"] == pytest.approx(R_MAX_P2, abs=1e-10)

    def test_cert_not_admissible(self, capsys):
        assert cli.main(["cert", "--p", "3", "--r", "0.2"]) == 1
        assert "NOT ADMISSIBLE" in capsys.readouterr().out

    def test_cert_clifford(self, capsys):
        assert cli.main(["cert", "--target", "clifford", "--p", "3"]) == 0

    @pytest.mark.parametrize(
        "argv",
        [
            ["run", "--config", "missing.json"],
            ["run"],
            ["cert", "--bogus"],
            ["frobnicate"],
            ["cert", "--r", "2.0"],
            ["scenario", "S2", "--p", "3"],
            ["scenario", "S9"],
            ["sweep", "S9"],
        ],
    )
    def test_config_errors(self, argv, tmp_path, monkeypatch, capsys):
        monkeypatch.chdir(tmp_path)
        assert cli.main(argv) == 2

    def test_run_ok(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps(small_config()))
        out = tmp_path / "out"
        assert cli.main(["run", "--config", str(cfg), "--out", str(out)]) == 0
        assert (out / "series.csv").read_text().splitlines()[0] == HEADER
        assert json.loads((out / "summary.json").read_text())["passed"] is True

    def test_run_property_failure(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps(small_config(stat_tol=1e-14, t_end=0.05)))
        assert cli.main(["run", "--config", str(cfg)]) == 1

    def test_run_infeasible(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps(small_config()))
        assert cli.main(["run", "--config", str(cfg), "--p", "3"]) == 2

    def test_scenario_s1_p3_artifacts(self, tmp_path, capsys):
        out = tmp_path / "run1"
        code = cli.main(["scenario", "S1", "--p", "3", "--out", str(out)])
        assert code == 0
        assert (out / "series.csv").read_text().splitlines()[0] == HEADER
        summary = json.loads((out / "summary.json").read_text())
        assert summary["scenario"] == "S1" and summary["passed"] is True
        assert summary["config"]["flow"]["p"] == 3
        assert (out / "final_state.npy").exists()
