"""Config parsing/validation, file output determinism, and the CLI surface."""

import json
import math
import os
from importlib import resources

import pytest
import yaml

from superatoms.cli import main
from superatoms.config import (
    parse_config,
    report_json_bytes,
    run_config,
    sweep_points,
    write_report,
)
from superatoms.errors import ConfigurationError
from superatoms.scenarios import scenario_defaults


def bundled(name: str) -> str:
    return (resources.files("superatoms") / "configs" / name).read_text()


CUSTOM_DOC = """
# two-point pair superatom on a short hard-wall chain
system:
  chains:
    - {id: W, sites: 200, origin: -100, hopping: 1.0}
  superatoms:
    - {id: A, kind: pair, frequencies: [0.0, 0.0], coupling: 1.4142135623730951}
  couplings:
    - {superatom: A, atom: 0, chain: W, site: 0, amplitude: 0.2}
    - {superatom: A, atom: 0, chain: W, site: 4, amplitude: 0.2}
initial_state:
  atoms: {A.0: 0.7071067811865476, A.1: 0.7071067811865476}
integration: {t_start: 0.0, t_end: 20.0, dt: 0.002, samples: 41}
observables:
  - norm
  - field_population
  - population.A
  - {fidelity: {name: F_plus, atoms: {A.0: 0.7071067811865476, A.1: 0.7071067811865476}}}
"""


class TestParsing:
    def test_empty_document(self):
        with pytest.raises(ConfigurationError) as err:
            parse_config("")
        assert "scenario" in str(err.value) and "system" in str(err.value)

    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigurationError) as err:
            parse_config("scenario: s1\nbogus: 3\n")
        assert "bogus" in str(err.value)

    def test_unknown_scenario(self):
        with pytest.raises(ConfigurationError):
            parse_config("scenario: s99\n")

    def test_unknown_parameter_path_reported(self):
        with pytest.raises(ConfigurationError) as err:
            parse_config("scenario: s1\nparams: {nope: 2}\n")
        assert "nope" in str(err.value)

    def test_bundled_configs_parse(self):
        for name in ("s1.yaml", "s2.yaml", "s3.yaml", "s4.yaml", "s5.yaml",
                     "s6.yaml", "s7.yaml", "s4_beta_sweep.yaml"):
            cfg = parse_config(bundled(name))
            assert cfg.kind == "scenario"

    def test_bundled_s4_matches_reference_parameters(self):
        cfg = parse_config(bundled("s4.yaml"))
        defaults = scenario_defaults("s4")
        assert cfg.params["xi"] == 12.5 == defaults["xi"]
        assert cfg.params["separation"] == 2 == defaults["separation"]
        assert tuple(cfg.params["receiver_sites"]) == (100, 102)
        assert cfg.params["phase"] == math.pi / 2 == defaults["phase"]
        assert cfg.params["beta"] == 0.045 == defaults["beta"]
        assert cfg.params["g_max"] == 1.0 == defaults["g_max"]

    def test_round_trip_fixed_point(self):
        cfg = parse_config(bundled("s4.yaml"))
        again = parse_config(cfg.to_yaml())
        assert again.document == cfg.document
        assert again.params == cfg.params

    def test_custom_round_trip(self):
        cfg = parse_config(CUSTOM_DOC)
        again = parse_config(cfg.to_yaml())
        assert again.document == cfg.document

    def test_out_of_band_physics_violation(self):
        doc = yaml.safe_load(CUSTOM_DOC)
        doc["system"]["superatoms"] = [
            {"id": "A", "kind": "single", "frequency": 3.5}]
        doc["system"]["couplings"] = [
            {"superatom": "A", "atom": 0, "chain": "W", "site": 0,
             "amplitude": 0.2}]
        doc["initial_state"] = {"atoms": {"A.0": 1.0}}
        doc["observables"] = ["norm"]
        with pytest.raises(ConfigurationError) as err:
            parse_config(yaml.safe_dump(doc))
        assert "OutOfBand" in str(err.value)

    def test_out_of_band_allowed_when_marked_evanescent(self):
        doc = yaml.safe_load(CUSTOM_DOC)
        doc["system"]["superatoms"] = [
            {"id": "A", "kind": "single", "frequency": 3.5}]
        doc["system"]["couplings"] = [
            {"superatom": "A", "atom": 0, "chain": "W", "site": 0,
             "amplitude": 0.2, "propagating": False}]
        doc["initial_state"] = {"atoms": {"A.0": 1.0}}
        doc["observables"] = ["norm"]
        parse_config(yaml.safe_dump(doc))

    def test_light_cone_violation(self):
        doc = yaml.safe_load(CUSTOM_DOC)
        doc["integration"]["t_end"] = 500.0
        with pytest.raises(ConfigurationError) as err:
            parse_config(yaml.safe_dump(doc))
        assert "light-cone" in str(err.value)

    def test_bad_sweep_axis(self):
        with pytest.raises(ConfigurationError):
            parse_config("scenario: s1\nsweep: {bogus.path: [1, 2]}\n")
        with pytest.raises(ConfigurationError):
            parse_config("scenario: s1\nsweep: {params.nope: [1, 2]}\n")

    def test_sweep_grid_expansion(self):
        cfg = parse_config(
            "scenario: s6\nsweep:\n  params.num_units: [6, 8]\n"
            "  params.excited_unit: [3, 4]\n")
        points = list(sweep_points(cfg))
        assert len(points) == 4
        coords = [c for c, _ in points]
        assert {"params.excited_unit", "params.num_units"} == set(coords[0])


class TestCustomRuns:
    def test_custom_run_metrics(self):
        cfg = parse_config(CUSTOM_DOC)
        report = run_config(cfg)
        assert report.scenario == "custom"
        assert report.metrics["final_norm"] == pytest.approx(1.0, abs=1e-8)
        # separation-4 pair at band center is dark: fidelity stays high
        assert report.metrics["final_F_plus"] > 0.8
        assert set(report.series) == {"norm", "field_population",
                                      "population.A", "F_plus"}

    def test_dt_halving_leaves_metrics_unchanged(self):
        cfg = parse_config(CUSTOM_DOC)
        base = run_config(cfg)
        doc = yaml.safe_load(CUSTOM_DOC)
        doc["integration"]["dt"] = doc["integration"]["dt"] / 2.0
        half = run_config(parse_config(yaml.safe_dump(doc)))
        for key in base.metrics:
            assert abs(base.metrics[key] - half.metrics[key]) <= 1e-8, key

    def test_final_state_dump(self, tmp_path):
        cfg = parse_config(CUSTOM_DOC)
        dump = tmp_path / "final_state.bin"
        run_config(cfg, dump_path=str(dump))
        from superatoms.config import build_system
        from superatoms.dynamics import load_state
        system, _ = build_system(yaml.safe_load(CUSTOM_DOC)["system"])
        state = load_state(dump, system)
        assert state.time == pytest.approx(20.0)
        assert abs(state.vector[0]) > 0.5


class TestFileOutput:
    def test_write_report_deterministic(self, tmp_path, s6_report):
        d1, d2 = tmp_path / "a", tmp_path / "b"
        paths1 = write_report(s6_report, str(d1))
        paths2 = write_report(s6_report, str(d2))
        for p1, p2 in zip(paths1, paths2):
            assert open(p1, "rb").read() == open(p2, "rb").read()

    def test_csv_format(self, tmp_path, s6_report):
        write_report(s6_report, str(tmp_path))
        text = open(tmp_path / "participation_ratio.csv", "rb").read()
        assert b"\r" not in text
        lines = text.decode().strip().split("\n")
        assert lines[0] == "time,participation_ratio"
        assert len(lines) == 1 + len(s6_report.series["participation_ratio"]["times"])


class TestCli:
    def test_list_scenarios(self, capsys):
        assert main(["list-scenarios"]) == 0
        out = capsys.readouterr().out
        for sid in ("s1", "s4", "s7"):
            assert sid in out

    def test_validate_ok(self, tmp_path, capsys):
        path = tmp_path / "c.yaml"
        path.write_text(CUSTOM_DOC)
        assert main(["validate", "--config", str(path)]) == 0
        assert "OK" in capsys.readouterr().out

    def test_validate_failure_exit_code(self, tmp_path, capsys):
        path = tmp_path / "c.yaml"
        path.write_text("scenario: nope\n")
        assert main(["validate", "--config", str(path)]) == 2
        assert "error" in capsys.readouterr().err

    def test_run_scenario_with_check(self, tmp_path):
        out = tmp_path / "out"
        rc = main(["run", "--scenario", "s6", "--output", str(out),
                   "--check", "--quiet"])
        assert rc == 0
        report = json.loads((out / "report.json").read_text())
        assert report["scenario"] == "s6"
        assert all(c["passed"] for c in report["checks"])

    def test_run_failing_check_exits_nonzero(self, tmp_path):
        cfg = tmp_path / "c.yaml"
        cfg.write_text("scenario: s6\nparams: {revival_tolerance: 1.0e-30}\n")
        rc = main(["run", "--config", str(cfg), "--output",
                   str(tmp_path / "o"), "--check", "--quiet"])
        assert rc == 1

    def test_rerun_outputs_byte_identical(self, tmp_path):
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        for out in (out1, out2):
            assert main(["run", "--scenario", "s6", "--output", str(out),
                         "--quiet"]) == 0
        for name in sorted(os.listdir(out1)):
            b1 = (out1 / name).read_bytes()
            b2 = (out2 / name).read_bytes()
            assert b1 == b2, name

    def test_run_custom_config_with_dump(self, tmp_path):
        doc = yaml.safe_load(CUSTOM_DOC)
        doc["output"] = {"dump_final_state": True}
        cfg = tmp_path / "c.yaml"
        cfg.write_text(yaml.safe_dump(doc))
        out = tmp_path / "out"
        assert main(["run", "--config", str(cfg), "--output", str(out),
                     "--quiet"]) == 0
        assert (out / "final_state.bin").exists()
        assert (out / "report.json").exists()

    def test_missing_config_error(self, capsys):
        assert main(["run", "--config", "/nonexistent.yaml"]) == 2

    def test_sweep_writes_index_and_finds_best_beta(self, tmp_path):
        cfg = tmp_path / "sweep.yaml"
        cfg.write_text(
            "scenario: s4\n"
            "params: {num_samples: 101}\n"
            "sweep:\n  params.beta: [0.02, 0.045, 0.15]\n")
        out = tmp_path / "sweep_out"
        assert main(["sweep", "--config", str(cfg), "--output", str(out),
                     "--quiet"]) == 0
        index = json.loads((out / "index.json").read_text())
        assert len(index) == 3
        best = max(index, key=lambda e: e["metrics"]["final_fidelity"])
        assert best["coordinates"]["params.beta"] == 0.045
        for entry in index:
            assert (out / entry["report"]).exists()
