"""Configuration loading, artifact files, and the command-line interface."""

import json
import subprocess
import sys

import numpy as np
import pytest
import yaml

from pixelfas.config import load_config
from pixelfas.errors import ConfigError
from pixelfas.pcdm import CovarianceMatrix
from pixelfas.reports import read_covariance_csv, write_covariance_csv

TINY = {
    "surrogate": {"q": 16, "seed": 11},
    "design": {"n_ports": 8, "aperture_wavelengths": 0.5,
               "p_switches": 4, "z0_ohm": 50.0},
    "frequency": {"f_lower_hz": 2.5e9, "f_upper_hz": 2.5e9, "t_samples": 1},
    "pas": {"support": "upper-hemisphere", "density": 1.0},
    "quadrature": {"n_theta": 12, "n_phi": 24},
    "switch_model": {
        "on_branch": {"topology": "series", "r_ohm": 5.2, "l_h": 0.5e-9},
        "off_branch": {"topology": "series", "r_ohm": 9.0, "l_h": 0.3e-9,
                       "c_f": 0.045e-12},
    },
    "ga": {"max_generations": 20, "population_size": 60},
    "search": {"seed": 7, "budget": 300, "target_matched_sets": 2, "threads": 1},
    "report": {"figures": False},
}


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "tiny.yaml"
    path.write_text(yaml.safe_dump(TINY))
    return path


def run_cli(*args):
    return subprocess.run([sys.executable, "-m", "pixelfas.cli", *args],
                          capture_output=True, text=True)


class TestLoadConfig:
    def test_shipped_default_parses(self):
        cfg = load_config("configs/default.yaml")
        assert cfg.n_ports == 12
        assert cfg.f_lower_hz == 2.5e9
        assert cfg.ga_params().population_size == 600
        assert cfg.switch_model().on_branch.r_ohm == 5.2

    def test_yaml_exponent_strings_are_coerced(self, tmp_path):
        # plain YAML readers treat 2.5e9 as a string; the loader must not
        doc = dict(TINY)
        path = tmp_path / "c.yaml"
        path.write_text(yaml.safe_dump(doc))
        cfg = load_config(path)
        assert isinstance(cfg.f_lower_hz, float)

    def test_unknown_key_rejected(self, tmp_path):
        doc = yaml.safe_load(yaml.safe_dump(TINY))
        doc["design"]["n_prots"] = 12
        path = tmp_path / "c.yaml"
        path.write_text(yaml.safe_dump(doc))
        with pytest.raises(ConfigError, match="n_prots"):
            load_config(path)

    def test_unknown_section_rejected(self, tmp_path):
        doc = yaml.safe_load(yaml.safe_dump(TINY))
        doc["extras"] = {"x": 1}
        path = tmp_path / "c.yaml"
        path.write_text(yaml.safe_dump(doc))
        with pytest.raises(ConfigError, match="extras"):
            load_config(path)

    def test_states_must_cover_ports(self, tmp_path):
        doc = yaml.safe_load(yaml.safe_dump(TINY))
        doc["design"]["p_switches"] = 2  # 2^2 = 4 < 8 ports
        path = tmp_path / "c.yaml"
        path.write_text(yaml.safe_dump(doc))
        with pytest.raises(ConfigError):
            load_config(path)

    def test_missing_model_rejected(self, tmp_path):
        doc = yaml.safe_load(yaml.safe_dump(TINY))
        del doc["surrogate"]
        path = tmp_path / "c.yaml"
        path.write_text(yaml.safe_dump(doc))
        with pytest.raises(ConfigError):
            load_config(path)


class TestCovarianceCsvRoundTrip:
    def test_read_back_matches(self, tmp_path):
        rng = np.random.default_rng(3)
        mats = []
        for f in (2.0e9, 3.0e9):
            a = rng.random((4, 4))
            rho = (a + a.T) / 2
            np.fill_diagonal(rho, 1.0)
            mats.append(CovarianceMatrix(rho=rho, frequency_hz=f))
        path = tmp_path / "cov.csv"
        write_covariance_csv(path, mats)
        back = read_covariance_csv(path)
        assert len(back) == 2
        for orig, re_read in zip(mats, back):
            assert re_read.frequency_hz == orig.frequency_hz
            assert np.array_equal(re_read.rho, orig.rho)


class TestCliRun:
    def test_run_produces_artifacts(self, tiny_config, tmp_path):
        out = tmp_path / "out"
        proc = run_cli("run", "--config", str(tiny_config), "--out", str(out))
        assert proc.returncode == 0, proc.stderr
        for name in ("manifest.json", "result.json", "covariance_sim.csv",
                     "covariance_target.csv", "covariance_abs_error.csv",
                     "reflection.csv", "state_table.csv"):
            assert (out / name).exists(), name
        doc = json.loads((out / "result.json").read_text())
        assert not doc["no_solution"]
        assert len(doc["ordering"]) == 8
        assert doc["delta_e"] >= 0

    def test_figures_toggle(self, tmp_path):
        doc = yaml.safe_load(yaml.safe_dump(TINY))
        doc["report"]["figures"] = True
        cfg = tmp_path / "c.yaml"
        cfg.write_text(yaml.safe_dump(doc))
        out = tmp_path / "out"
        proc = run_cli("run", "--config", str(cfg), "--out", str(out))
        assert proc.returncode == 0, proc.stderr
        for name in ("covariance_sim.png", "covariance_target.png",
                     "covariance_abs_error.png", "reflection.png"):
            assert (out / name).exists(), name

    def test_search_then_order_matches_run(self, tiny_config, tmp_path):
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        assert run_cli("run", "--config", str(tiny_config),
                       "--out", str(out_a)).returncode == 0
        assert run_cli("search", "--config", str(tiny_config),
                       "--out", str(out_b)).returncode == 0
        assert run_cli("order", "--config", str(tiny_config),
                       "--matched-sets", str(out_b / "matched_sets.json"),
                       "--out", str(out_b)).returncode == 0
        a = json.loads((out_a / "result.json").read_text())
        b = json.loads((out_b / "result.json").read_text())
        assert a["delta_e"] == b["delta_e"]
        assert a["ordering"] == b["ordering"]

    def test_eval_reproduces_run_error(self, tiny_config, tmp_path):
        out = tmp_path / "out"
        assert run_cli("run", "--config", str(tiny_config),
                       "--out", str(out)).returncode == 0
        run_doc = json.loads((out / "result.json").read_text())
        doc = yaml.safe_load(yaml.safe_dump(TINY))
        doc["design"]["switch_positions"] = run_doc["switch_positions"]
        doc["design"]["hardwire_x"] = run_doc["hardwire"]
        cfg = tmp_path / "eval.yaml"
        cfg.write_text(yaml.safe_dump(doc))
        out2 = tmp_path / "eval_out"
        proc = run_cli("eval", "--config", str(cfg),
                       "--state-table", str(out / "state_table.csv"),
                       "--out", str(out2))
        assert proc.returncode == 0, proc.stderr
        eval_doc = json.loads((out2 / "result.json").read_text())
        assert eval_doc["delta_e"] == run_doc["delta_e"]

    def test_seed_override_changes_result_file(self, tiny_config, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run_cli("run", "--config", str(tiny_config), "--out", str(a),
                       "--seed", "7").returncode == 0
        assert run_cli("run", "--config", str(tiny_config), "--out", str(b),
                       "--seed", "8").returncode == 0
        assert (a / "result.json").read_text() != (b / "result.json").read_text()


class TestCliErrors:
    def test_missing_config_exits_2(self, tmp_path):
        proc = run_cli("run", "--config", str(tmp_path / "nope.yaml"),
                       "--out", str(tmp_path / "o"))
        assert proc.returncode == 2

    def test_bad_state_table_exits_3(self, tiny_config, tmp_path):
        doc = yaml.safe_load(yaml.safe_dump(TINY))
        doc["design"]["switch_positions"] = [1, 2, 3, 4]
        doc["design"]["hardwire_x"] = [1] * 16
        cfg = tmp_path / "c.yaml"
        cfg.write_text(yaml.safe_dump(doc))
        table = tmp_path / "t.csv"
        table.write_text("bogus,header\n1,2\n")
        proc = run_cli("eval", "--config", str(cfg),
                       "--state-table", str(table),
                       "--out", str(tmp_path / "o"))
        assert proc.returncode == 3

    def test_no_solution_exits_5(self, tmp_path):
        doc = yaml.safe_load(yaml.safe_dump(TINY))
        doc["design"]["z0_ohm"] = 1.0e5
        doc["search"]["budget"] = 10
        cfg = tmp_path / "c.yaml"
        cfg.write_text(yaml.safe_dump(doc))
        proc = run_cli("run", "--config", str(cfg), "--out", str(tmp_path / "o"))
        assert proc.returncode == 5

    def test_unknown_subcommand_usage_error(self):
        proc = run_cli("frobnicate")
        assert proc.returncode == 2


class TestCliSynth:
    def test_synth_output_is_loadable(self, tiny_config, tmp_path):
        out = tmp_path / "model"
        proc = run_cli("synth", "--config", str(tiny_config), "--out", str(out))
        assert proc.returncode == 0, proc.stderr
        from pixelfas.em_model import load_network, load_pattern_bundle
        net = load_network(out / "network.zmat")
        patterns = load_pattern_bundle(out / "patterns", expected_ports=net.q + 1)
        assert net.q == 16
        assert patterns.n_ports == 17


class TestCliOracle:
    def test_fast_level_passes(self):
        proc = run_cli("oracle", "--level", "fast")
        assert proc.returncode == 0, proc.stderr
        doc = json.loads(proc.stdout)
        assert doc["passed"] is True
        names = {s["name"] for s in doc["suites"]}
        assert {"dipole", "decode"} <= names
