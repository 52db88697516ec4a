"""CLI contract: config handling, exit codes, output determinism."""

import json
import subprocess
import sys

import pytest

from grdf import cli
from grdf.environment import EnvConfig, Environment
from grdf.errors import ConfigError


def run_cli(args, cwd):
    return subprocess.run([sys.executable, "-m", "grdf.cli", *args],
                          capture_output=True, text=True, cwd=cwd)


class TestConfigHandling:
    def test_invalid_p_names_field(self, tmp_path):
        res = run_cli(["probe-env", "--p", "1.5", "--out-prefix", "x"], tmp_path)
        assert res.returncode == 2
        assert "p" in res.stderr

    def test_invalid_trials_names_field(self, tmp_path):
        cfgfile = tmp_path / "c.json"
        cfgfile.write_text(json.dumps({"experiment": "constants", "trials": 0}))
        res = run_cli(["constants", "--config", str(cfgfile)], tmp_path)
        assert res.returncode == 2
        assert "trials" in res.stderr

    def test_unknown_experiment_rejected(self, tmp_path):
        res = run_cli(["not-an-experiment"], tmp_path)
        assert res.returncode == 2

    def test_missing_config_file(self, tmp_path):
        res = run_cli(["probe-env", "--config", "nope.json"], tmp_path)
        assert res.returncode == 2

    def test_flags_override_file(self, tmp_path):
        cfgfile = tmp_path / "c.json"
        cfgfile.write_text(json.dumps({
            "experiment": "probe-env",
            "env": {"p": 0.3, "w_pmf": [1.0], "seed": 1}}))
        res = run_cli(["probe-env", "--config", str(cfgfile), "--seed", "42",
                       "--out-prefix", "o"], tmp_path)
        assert res.returncode == 0
        summary = json.loads((tmp_path / "o.summary.json").read_text())
        assert summary["config"]["env"]["seed"] == 42
        assert summary["config"]["env"]["p"] == 0.3

    def test_insufficient_data_exit_code(self, tmp_path):
        res = run_cli(["constants", "--trials", "10", "--out-prefix", "c"], tmp_path)
        assert res.returncode == 3

    def test_geometry_override(self, tmp_path):
        res = run_cli(["eta", "--trials", "3", "--out-prefix", "e",
                       "--geom", "t=30", "--geom", "b=2"], tmp_path)
        assert res.returncode == 0
        rows = (tmp_path / "e.csv").read_text().splitlines()
        assert rows[0] == "trial,t0,t,a,b,eta"
        assert rows[1].split(",")[2] == "30"


class TestSeedDerivation:
    def test_golden_pin(self):
        assert cli.derive_trial_seed(12345, 0) == 2454886589211414944

    def test_injective(self):
        seen = {cli.derive_trial_seed(7, i) for i in range(4096)}
        assert len(seen) == 4096


class TestOutputs:
    def test_probe_env_matches_oracle(self, tmp_path):
        res = run_cli(["probe-env", "--seed", "9", "--out-prefix", "pe"], tmp_path)
        assert res.returncode == 0
        env = Environment(EnvConfig(p=0.5, w_pmf=(0.5, 0.5), seed=9))
        lines = (tmp_path / "pe.csv").read_text().splitlines()
        assert len(lines) == 11
        for i, line in enumerate(lines[1:]):
            x, t, u, op, w = line.split(",")
            assert (int(x), int(t)) == (i, 0)
            assert float(u) == env.site_uniform((i, 0))
            assert int(op) == int(env.is_open((i, 0)))
            assert int(w) == env.site_w((i, 0))

    def test_lf_line_endings_and_header(self, tmp_path):
        run_cli(["probe-env", "--out-prefix", "pe"], tmp_path)
        blob = (tmp_path / "pe.csv").read_bytes()
        assert b"\r" not in blob
        assert blob.decode().splitlines()[0] == "x,t,u,open,w"

    def test_summary_schema_valid(self, tmp_path):
        run_cli(["crossings", "--trials", "1200", "--horizon", "5000",
                 "--out-prefix", "cr"], tmp_path)
        summary = json.loads((tmp_path / "cr.summary.json").read_text())
        cli.validate_summary(summary)
        for key in ("experiment", "config", "estimates", "stderrs", "pass"):
            assert key in summary

    def test_validate_summary_rejects_missing(self):
        with pytest.raises(ConfigError):
            cli.validate_summary({"experiment": "x"})


class TestWorkerDeterminism:
    @pytest.mark.parametrize("experiment,extra", [
        ("coalescence-tail", ["--trials", "300", "--horizon", "3000"]),
        ("constants", ["--trials", "400"]),
    ])
    def test_byte_identical_across_worker_counts(self, tmp_path, experiment, extra):
        run_cli([experiment, *extra, "--seed", "77", "--workers", "1",
                 "--out-prefix", "w1"], tmp_path)
        run_cli([experiment, *extra, "--seed", "77", "--workers", "3",
                 "--out-prefix", "w3"], tmp_path)
        assert (tmp_path / "w1.csv").read_bytes() == (tmp_path / "w3.csv").read_bytes()
        s1 = json.loads((tmp_path / "w1.summary.json").read_text())
        s3 = json.loads((tmp_path / "w3.summary.json").read_text())
        s1["config"].pop("workers")
        s3["config"].pop("workers")
        s1["config"].pop("out_prefix")
        s3["config"].pop("out_prefix")
        assert s1 == s3

    def test_rerun_identical(self, tmp_path):
        args = ["renewals", "--trials", "50", "--seed", "5", "--out-prefix"]
        run_cli([*args, "r1"], tmp_path)
        run_cli([*args, "r2"], tmp_path)
        assert (tmp_path / "r1.csv").read_bytes() == (tmp_path / "r2.csv").read_bytes()


SMOKE = [
    ("probe-env", []),
    ("simulate-path", ["--trials", "2", "--horizon", "40"]),
    ("renewals", ["--trials", "5", "--horizon", "10000"]),
    ("coalescence-tail", ["--trials", "30", "--horizon", "2000"]),
    ("crossings", ["--trials", "1100", "--horizon", "2000"]),
    ("constants", ["--trials", "150"]),
    ("distance-preserved", ["--trials", "30", "--horizon", "5000"]),
    ("condition-b", ["--trials", "10", "--geom", "k_grid=[50]",
                     "--geom", "m_grid=[1,2]", "--geom", "trials_per_k=[10]"]),
    ("condition-e", ["--trials", "10", "--n", "12",
                     "--geom", "gamma=2.7", "--geom", "sigma=0.95"]),
    ("condition-t", ["--trials", "5", "--n", "6",
                     "--geom", "gamma=2.7", "--geom", "sigma=0.95",
                     "--geom", "t_grid=[0.2,0.1]"]),
    ("eta", ["--trials", "4", "--geom", "t=25"]),
    ("metric-distance", []),
    ("moment-stability", ["--trials", "1500"]),
    ("overshoot", ["--trials", "40", "--horizon", "4000",
                   "--geom", "m_grid=[1,2,3]"]),
]


@pytest.mark.parametrize("experiment,extra", SMOKE, ids=[s[0] for s in SMOKE])
def test_subcommand_smoke(tmp_path, experiment, extra):
    res = run_cli([experiment, *extra, "--out-prefix", "out"], tmp_path)
    assert res.returncode == 0, res.stderr
    assert (tmp_path / "out.csv").exists()
    summary = json.loads((tmp_path / "out.summary.json").read_text())
    cli.validate_summary(summary)
    assert summary["experiment"] == experiment
