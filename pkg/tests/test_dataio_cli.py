import csv
import json
import textwrap

import numpy as np
import pytest

from conftest import CREEP_TRUTH
from hybrid_ident.cli import main
from hybrid_ident.config import load_config, parse_config
from hybrid_ident.dataio import generate_synthetic, load_dataset, read_series, write_dataset
from hybrid_ident.errors import ConfigError, DataError, DegenerateWeightError
from hybrid_ident.fixtures import fixture_path
from hybrid_ident.model import CreepModel, SloppyModel, TestDefinition
from hybrid_ident.objective import cost_multi


def write_csv(path, rows):
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerows(rows)


def small_manifest(tmp_path):
    rows = [["test_id", "sensor_id", "path"]]
    for test in ("t1", "t2"):
        for sensor in ("axial", "hoop"):
            name = f"{test}_{sensor}.csv"
            write_csv(tmp_path / name, [["time", "value"], [0.0, 1.0], [1.0, 2.0], [2.0, 2.5]])
            rows.append([test, sensor, name])
    write_csv(tmp_path / "manifest.csv", rows)
    return tmp_path / "manifest.csv"


class TestLoad:
    def test_two_by_two(self, tmp_path):
        data = load_dataset(small_manifest(tmp_path))
        assert len(data.series) == 4
        assert [t.test_id for t in data.tests] == ["t1", "t2"]
        assert data.test("t2").sensors == ("axial", "hoop")

    def test_decreasing_time_names_line(self, tmp_path):
        path = tmp_path / "s.csv"
        write_csv(path, [["time", "value"], [0.0, 1.0], [2.0, 1.0], [1.0, 1.0]])
        with pytest.raises(DataError, match=r"s\.csv:4"):
            read_series(path)

    def test_missing_file_names_path(self, tmp_path):
        write_csv(tmp_path / "manifest.csv", [["test_id", "sensor_id", "path"], ["t", "s", "nowhere.csv"]])
        with pytest.raises(DataError, match="nowhere.csv"):
            load_dataset(tmp_path / "manifest.csv")

    def test_malformed_row(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("time,value\n0,1\n1,abc\n")
        with pytest.raises(DataError, match=r"s\.csv:3"):
            read_series(path)

    def test_wrong_header(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("t,v\n0,1\n1,2\n")
        with pytest.raises(DataError, match="header"):
            read_series(path)

    def test_all_zero_series(self, tmp_path):
        write_csv(tmp_path / "z.csv", [["time", "value"], [0.0, 0.0], [1.0, 0.0]])
        write_csv(tmp_path / "manifest.csv", [["test_id", "sensor_id", "path"], ["t", "s", "z.csv"]])
        with pytest.raises(DegenerateWeightError):
            load_dataset(tmp_path / "manifest.csv")


class TestSynthetic:
    tests = [TestDefinition("c", {"axial": np.linspace(0, 30, 31)}, {"steps": [[0.0, 10.0], [15.0, 0.0]]})]

    def test_noise_free_fits_exactly(self):
        data = generate_synthetic(CreepModel(), CREEP_TRUTH, self.tests)
        assert cost_multi(CREEP_TRUTH, CreepModel(), data).total == 0.0

    def test_seeded(self):
        a = generate_synthetic(CreepModel(), CREEP_TRUTH, self.tests, 0.01, seed=3)
        b = generate_synthetic(CreepModel(), CREEP_TRUTH, self.tests, 0.01, seed=3)
        assert np.array_equal(a.series[("c", "axial")].values, b.series[("c", "axial")].values)

    def test_noise_raises_cost_but_truth_stays_better(self):
        tests = [TestDefinition("r", {"y": np.linspace(0, 6, 25)}, {"kind": "redundant"})]
        truth = np.array([2.0, 3.0, 1.0, 0.5])
        data = generate_synthetic(SloppyModel(), truth, tests, 0.01, seed=1)
        at_truth = cost_multi(truth, SloppyModel(), data).total
        assert 0.0 < at_truth < cost_multi(1.5 * truth, SloppyModel(), data).total

    def test_round_trip(self, tmp_path):
        data = generate_synthetic(CreepModel(), CREEP_TRUTH, self.tests, 0.02, seed=5)
        back = load_dataset(write_dataset(data, tmp_path))
        for key, series in data.series.items():
            assert np.array_equal(back.series[key].values, series.values)
        assert np.array_equal(back.tests[0].times["axial"], self.tests[0].times["axial"])


class TestConfig:
    def test_seed_required(self):
        with pytest.raises(ConfigError, match="seed"):
            parse_config({"model": {"name": "creep3"}})

    def test_unknown_setting(self, tmp_path):
        raw = {"seed": 1, "model": {"name": "creep3"}, "ga": {"populaton_size": 10},
               "parameters": {"names": ["E", "E_v", "tau"], "lower": [1, 1, 1], "upper": [2, 2, 2]}}
        with pytest.raises(ConfigError, match="populaton_size"):
            parse_config(raw)

    def test_fixture_loads(self):
        cfg = load_config(fixture_path("creep3"))
        assert cfg.space.names == ("E", "E_v", "tau")
        assert cfg.seed == cfg.ga.seed == cfg.strategy.seed
        assert cfg.dataset().series


def run_cli(*args):
    return main([str(a) for a in args])


def test_pipeline_smoke(tmp_path):
    assert run_cli("pipeline", fixture_path("creep3"), "-o", tmp_path) == 0
    verdict = json.loads((tmp_path / "verdict.json").read_text())
    assert verdict["verdict"] == "UniqueSolution"
    for name in ("classification.csv", "reduced_bounds.csv", "ensemble.csv", "history.json", "scatter_E.csv"):
        assert (tmp_path / name).is_file()


def test_ensemble_is_byte_identical(tmp_path):
    for run in ("a", "b"):
        assert run_cli("ensemble", fixture_path("sloppy_restricted"), "-o", tmp_path / run) == 0
    for name in ("ensemble.csv", "verdict.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_scan_flags_absent_parameter_as_uniform(tmp_path):
    assert run_cli("scan", fixture_path("sloppy_restricted"), "-o", tmp_path) == 0
    with open(tmp_path / "classification.csv") as fh:
        labels = {row["parameter"]: row["label"] for row in csv.DictReader(fh)}
    assert labels["d"] == "Uniform"


def test_identify_and_synth(tmp_path):
    assert run_cli("identify", fixture_path("creep3"), "-o", tmp_path / "id") == 0
    with open(tmp_path / "id" / "solution.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][0] == "parameter"
    assert run_cli("synth", fixture_path("creep3"), "-o", tmp_path / "data") == 0
    data = load_dataset(tmp_path / "data" / "manifest.csv")
    assert ("creep_recovery", "axial") in data.series


def test_manifest_config_round_trip(tmp_path):
    assert run_cli("synth", fixture_path("sloppy_restricted"), "-o", tmp_path / "data") == 0
    cfg_text = fixture_path("sloppy_restricted").read_text()
    head, _, _ = cfg_text.partition("[data")
    (tmp_path / "run.toml").write_text(head + '[data]\nmanifest = "data/manifest.csv"\n')
    synth_cfg = load_config(fixture_path("sloppy_restricted"))
    manifest_cfg = load_config(tmp_path / "run.toml")
    a, b = synth_cfg.dataset(), manifest_cfg.dataset()
    assert np.array_equal(a.series[("linear", "y")].values, b.series[("linear", "y")].values)


def test_exit_codes(tmp_path, capsys):
    assert run_cli("ensemble", tmp_path / "missing.toml") == 1
    bad = tmp_path / "bad.toml"
    bad.write_text(textwrap.dedent("""
        seed = 1
        [model]
        name = "creep3"
        [parameters]
        names = ["E", "E_v", "tau"]
        lower = [1.0, 1.0, 1.0]
        upper = [2.0, 2.0, 2.0]
        [[tests]]
        id = "t"
        sensors = ["axial"]
        times = [0.0, 1.0]
        [data]
        manifest = "nowhere/manifest.csv"
    """))
    assert run_cli("scan", bad) == 2
    assert "nowhere" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1
