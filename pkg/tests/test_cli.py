"""End-to-end tests of the command-line interface and its exit codes."""

import hashlib
import json
import math
import pathlib

import pytest

from singular_bound.cli import main

COMPLETION_CFG = """\
model.family = completion
model.noise_sigma = 0.3
gibbs.omega = auto
gibbs.chain_length = 4000
gibbs.burn_in = 1000
gibbs.thinning = 4
gibbs.seed = 7
grid.n = 20,55,148,403
grid.replicates = 2
certify.n = 100
thermo.enabled = false
"""


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def tree_digest(directory):
    digest = hashlib.sha256()
    for path in sorted(pathlib.Path(directory).iterdir()):
        digest.update(path.name.encode())
        digest.update(path.read_bytes())
    return digest.hexdigest()


class TestRlctCommand:
    def test_completion_agreeing_case(self, capsys):
        code, out, _ = run_cli(capsys, "rlct", "completion", "5", "3", "2", "1")
        payload = json.loads(out)
        assert code == 0
        assert payload["lambda"] == {"num": 9, "den": 2}
        assert payload["m"] == 1
        assert payload["regime"] == "case1"
        assert payload["methods_agree"] is True

    def test_completion_odd_case_flags_discrepancy(self, capsys):
        code, out, _ = run_cli(capsys, "rlct", "completion", "2", "2", "2", "1")
        payload = json.loads(out)
        assert code == 0
        assert payload["methods_agree"] is False
        assert payload["discrepancy"] == {"num": 1, "den": 4}

    def test_relu(self, capsys):
        code, out, _ = run_cli(capsys, "rlct", "relu", "2", "3", "1")
        assert code == 0
        assert json.loads(out)["lambda_bar"] == {"num": 13, "den": 2}

    def test_charts_example_file(self, capsys):
        chart = pathlib.Path(__file__).resolve().parents[1] / "docs" / "chart_example.json"
        code, out, _ = run_cli(capsys, "rlct", "charts", str(chart))
        payload = json.loads(out)
        assert code == 0
        assert payload == {"lambda": {"num": 1, "den": 2}, "m": 1}

    def test_bic(self, capsys):
        code, out, _ = run_cli(capsys, "rlct", "bic", "8")
        assert code == 0
        assert json.loads(out)["lambda"] == {"num": 4, "den": 1}

    def test_invalid_dimensions_exit_2(self, capsys):
        code, _, err = run_cli(capsys, "rlct", "completion", "5", "3", "1", "1")
        assert code == 2
        assert "usage error" in err


class TestConstantsCommand:
    def test_squared(self, capsys):
        code, out, _ = run_cli(capsys, "constants", "squared", "1", "1")
        payload = json.loads(out)
        assert code == 0
        assert payload["L"] == 36.0
        assert payload["omega_bar"] == pytest.approx(1 / 18)

    def test_logistic(self, capsys):
        code, out, _ = run_cli(capsys, "constants", "logistic", "1", "0.25")
        payload = json.loads(out)
        assert code == 0
        assert payload["b"] == pytest.approx(math.log(1 + math.e))


class TestCertifyCommand:
    def test_writes_recomputable_certificate(self, tmp_path, capsys):
        cfg = tmp_path / "c.cfg"
        cfg.write_text(COMPLETION_CFG.replace("certify.n = 100", "certify.n = 1000"))
        code, out, _ = run_cli(capsys, "--out", str(tmp_path / "o"), "certify", str(cfg))
        assert code == 0
        payload = json.loads((tmp_path / "o" / "certificate.json").read_text())
        pref = 2.0 / ((1 - payload["omega"] * payload["L"] / 2)
                      * payload["omega"] * payload["n"])
        lam = payload["lambda"]["num"] / payload["lambda"]["den"]
        bracket = lam * math.log(payload["n"]) \
            - (payload["m"] - 1) * math.log(math.log(payload["n"])) \
            + math.log(2 / payload["delta"]) + payload["c0"]
        assert payload["bound"] == pytest.approx(pref * max(bracket, 0.0), rel=1e-12)

    def test_bound_shrinks_with_n(self, tmp_path, capsys):
        bounds = {}
        for n in (1000, 2000):
            cfg = tmp_path / f"c{n}.cfg"
            cfg.write_text(COMPLETION_CFG.replace("certify.n = 100",
                                                  f"certify.n = {n}"))
            code, out, _ = run_cli(capsys, "--out", str(tmp_path / f"o{n}"),
                                   "certify", str(cfg))
            assert code == 0
            bounds[n] = json.loads(out)["bound"]
        assert bounds[2000] < bounds[1000]

    def test_invalid_delta_exit_3(self, tmp_path, capsys):
        cfg = tmp_path / "c.cfg"
        cfg.write_text(COMPLETION_CFG + "certify.delta = 1.5\n")
        code, _, err = run_cli(capsys, "--out", str(tmp_path / "o"), "certify", str(cfg))
        assert code == 3
        assert "delta" in err


class TestEstimateZCommand:
    def test_quad_with_fit(self, capsys):
        code, out, _ = run_cli(capsys, "estimate-z", "quad", "--k", "1", "--h", "1",
                               "--n", "7.5", "55", "400", "3000", "--fit")
        payload = json.loads(out)
        assert code == 0
        assert abs(payload["fit"]["lambda_hat"] - 1.0) < 0.05

    def test_mismatched_exponents_exit_3(self, capsys):
        code, _, err = run_cli(capsys, "estimate-z", "quad", "--k", "1", "--h",
                               "1", "0", "--n", "10")
        assert code == 3
        assert "exponents" in err

    def test_thermo_grid_from_config(self, tmp_path, capsys):
        cfg = tmp_path / "c.cfg"
        cfg.write_text(COMPLETION_CFG
                       + "thermo.rungs = 8\nthermo.chain_length = 2500\n"
                         "thermo.burn_in = 500\n")
        code, out, _ = run_cli(capsys, "--out", str(tmp_path / "o"),
                               "estimate-z", "thermo", str(cfg))
        assert code == 0
        payload = json.loads(out)
        lines = pathlib.Path(payload["csv"]).read_text().splitlines()
        assert lines[0] == "n,beta,neg_log_z,std_err,method"
        assert len(lines) == 5
        assert all(line.endswith("thermo") for line in lines[1:])
        assert "fit" in payload


class TestGibbsRunCommand:
    def test_chain_csv_schema(self, tmp_path, capsys):
        cfg = tmp_path / "c.cfg"
        cfg.write_text(COMPLETION_CFG)
        code, out, _ = run_cli(capsys, "--out", str(tmp_path / "o"),
                               "gibbs-run", str(cfg))
        assert code == 0
        lines = (tmp_path / "o" / "chain.csv").read_text().splitlines()
        assert lines[0].startswith("chain,iter,coord0,") and lines[0].endswith(",risk")
        summary = json.loads((tmp_path / "o" / "gibbs_summary.json").read_text())
        assert len(lines) - 1 == summary["kept_draws"]


class TestExperimentCommand:
    def test_outputs_and_reproducibility(self, tmp_path, capsys):
        cfg = tmp_path / "c.cfg"
        out_dir = tmp_path / "o"
        cfg.write_text(COMPLETION_CFG + f"output.dir = {out_dir}\n")
        code, _, _ = run_cli(capsys, "experiment", str(cfg))
        assert code == 0
        names = {p.name for p in out_dir.iterdir()}
        assert {"scaling.csv", "risk_bound.svg", "resolved.cfg", "failures.txt"} <= names
        first = tree_digest(out_dir)

        # a second run reproduces every byte
        code, _, _ = run_cli(capsys, "experiment", str(cfg))
        assert code == 0 and tree_digest(out_dir) == first

        # rerunning from the resolved config is also byte-identical
        code, _, _ = run_cli(capsys, "experiment", str(out_dir / "resolved.cfg"))
        assert code == 0 and tree_digest(out_dir) == first

        # worker count must not change results
        code, _, _ = run_cli(capsys, "--threads", "3", "experiment", str(cfg))
        assert code == 0 and tree_digest(out_dir) == first

        rows = (out_dir / "scaling.csv").read_text().splitlines()
        assert rows[0] == "n,replicate,post_risk,post_risk_se,bound,neg_log_z,neg_log_z_se"
        assert len(rows) == 1 + 4 * 2
        assert (out_dir / "failures.txt").read_text() == ""

    def test_small_grid_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "c.cfg"
        cfg.write_text(COMPLETION_CFG.replace("grid.n = 20,55,148,403",
                                              "grid.n = 20,55"))
        code, _, err = run_cli(capsys, "--out", str(tmp_path / "o"),
                               "experiment", str(cfg))
        assert code == 3
        assert "grid" in err

    def test_missing_config_exit_2(self, capsys):
        code, _, err = run_cli(capsys, "experiment", "/nonexistent/path.cfg")
        assert code == 2


class TestSeedOverride:
    def test_seed_changes_chain(self, tmp_path, capsys):
        cfg = tmp_path / "c.cfg"
        cfg.write_text(COMPLETION_CFG)
        digests = []
        for seed in ("7", "8"):
            out = tmp_path / f"o{seed}"
            code, _, _ = run_cli(capsys, "--seed", seed, "--out", str(out),
                                 "gibbs-run", str(cfg))
            assert code == 0
            digests.append(hashlib.sha256((out / "chain.csv").read_bytes()).hexdigest())
        assert digests[0] != digests[1]
