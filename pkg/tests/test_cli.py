"""End-to-end checks of the command-line interface.

Most cases call main() in process and parse the JSON it prints; a few run
the installed console script through a real subprocess to pin down exit
codes. The bundled smoke.csv (150 ratings-style values in [0, 10]) is the
shared input fixture.
"""

import json
import subprocess
import sys
from importlib import resources

import pytest

from uqe.cli import main

SMOKE = str(resources.files("uqe") / "data" / "smoke.csv")


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, json.loads(out) if out else None


class TestAccount:
    def test_monotonic_guarantee(self, capsys):
        code, payload = run_cli(
            capsys, "account", "--query-class", "monotonic", "--eps1", "0.5", "--eps2", "0.5"
        )
        assert code == 0
        assert payload["guarantee"]["eps_dp"] == 1.0
        assert payload["guarantee"]["rho_zcdp"] == 0.28125
        assert payload["guarantee"]["gamma_range_bounded"] == 1.5

    def test_count_minus_qn(self, capsys):
        code, payload = run_cli(
            capsys,
            "account",
            "--query-class",
            "count-minus-qn",
            "--neighbor",
            "add-subtract",
            "--noise",
            "gumbel",
            "--eps1",
            "0.5",
            "--eps2",
            "0.5",
            "--q",
            "0.99",
        )
        assert code == 0
        assert payload["guarantee"]["eps_dp"] == pytest.approx(0.995)

    def test_multi_quantile_budget(self, capsys):
        code, payload = run_cli(
            capsys, "account", "--num-quantiles", "3", "--eps1", "0.5", "--eps2", "0.5"
        )
        assert code == 0
        budget = payload["multi_quantile"]
        assert budget["levels"] == 2
        assert budget["total"]["eps_dp"] == 2.0

    def test_needs_class_or_count(self, capsys):
        code = main(["account"])
        assert code == 1
        assert "query-class" in capsys.readouterr().err


class TestQuantile:
    def test_bounded_run(self, capsys):
        code, payload = run_cli(
            capsys,
            "quantile",
            "--input",
            SMOKE,
            "--column",
            "value",
            "--q",
            "0.9",
            "--epsilon",
            "1.0",
            "--lower",
            "0",
            "--seed",
            "5",
        )
        assert code == 0
        assert payload["mode"] == "bounded"
        assert 7.0 < payload["estimate"] < 10.0
        assert payload["guarantee"]["eps_dp"] == 1.0
        assert payload["n"] == 150

    def test_env_seed_matches_flag(self, capsys, monkeypatch):
        args = ["quantile", "--input", SMOKE, "--column", "value", "--q", "0.5", "--lower", "0"]
        code = main(args + ["--seed", "5"])
        flagged = capsys.readouterr().out
        assert code == 0
        monkeypatch.setenv("UQE_SEED", "5")
        code = main(args)
        via_env = capsys.readouterr().out
        assert code == 0
        assert flagged == via_env

    def test_unbounded_mode(self, capsys):
        code, payload = run_cli(
            capsys,
            "quantile",
            "--input",
            SMOKE,
            "--column",
            "value",
            "--q",
            "0.5",
            "--epsilon",
            "1.0",
            "--seed",
            "5",
        )
        assert code == 0
        assert payload["mode"] == "unbounded"
        assert payload["epsilon_total_worst_case"] == 2.0
        assert "first_halt" in payload and "second_ran" in payload

    def test_lower_and_upper_conflict(self, capsys):
        code = main(
            [
                "quantile",
                "--input",
                SMOKE,
                "--column",
                "value",
                "--q",
                "0.5",
                "--lower",
                "0",
                "--upper",
                "10",
            ]
        )
        assert code == 1
        assert "at most one" in capsys.readouterr().err


class TestQuantiles:
    def test_monotone_estimates(self, capsys):
        code, payload = run_cli(
            capsys,
            "quantiles",
            "--input",
            SMOKE,
            "--column",
            "value",
            "--qs",
            "0.25,0.5,0.75",
            "--epsilon",
            "1.0",
            "--lower",
            "0",
            "--seed",
            "3",
        )
        assert code == 0
        ests = payload["estimates"]
        assert ests == sorted(ests)
        assert payload["budget"]["levels"] == 2


class TestSum:
    def test_sum_and_mean(self, capsys):
        base = ["sum", "--input", SMOKE, "--column", "value", "--epsilon", "1.0", "--seed", "3"]
        code, total = run_cli(capsys, *base)
        assert code == 0
        assert total["kind"] == "sum"
        assert total["epsilon_total"] == 2.0
        code, mean = run_cli(capsys, *base, "--mean")
        assert code == 0
        assert mean["kind"] == "mean"
        assert 0.0 < mean["estimate"] < 10.5

    def test_emq_needs_range(self, capsys):
        code = main(
            ["sum", "--input", SMOKE, "--column", "value", "--method", "emq"]
        )
        assert code == 1
        assert "range" in capsys.readouterr().err

    def test_emq_with_range(self, capsys):
        code, payload = run_cli(
            capsys,
            "sum",
            "--input",
            SMOKE,
            "--column",
            "value",
            "--method",
            "emq",
            "--range",
            "0",
            "10",
            "--seed",
            "2",
        )
        assert code == 0
        assert payload["method"] == "emq"


class TestVerify:
    def test_single_suite(self, capsys):
        code, payload = run_cli(capsys, "verify", "--suite", "histogram-oracle")
        assert code == 0
        assert payload["passed"] is True
        assert payload["suites"][0]["suite"] == "histogram-oracle"


class TestBench:
    def test_deterministic_output_files(self, capsys, tmp_path):
        f1, f2 = tmp_path / "a.json", tmp_path / "b.json"
        curves = tmp_path / "curves.csv"
        args = [
            "bench",
            "--input",
            SMOKE,
            "--column",
            "value",
            "--range",
            "0",
            "10",
            "--sample-size",
            "100",
            "--outer",
            "3",
            "--qs",
            "0.5,0.9",
            "--seed",
            "7",
        ]
        assert main(args + ["--out", str(f1), "--curves", str(curves)]) == 0
        assert main(args + ["--out", str(f2)]) == 0
        capsys.readouterr()
        assert f1.read_bytes() == f2.read_bytes()
        rows = json.loads(f1.read_text())
        assert len(rows) == 4
        assert all("runtime" not in r for r in rows)
        header = curves.read_text().splitlines()[0]
        assert header == "eps,q,method,mae,normalized"

    def test_synthetic_source(self, capsys):
        code, rows = run_cli(
            capsys,
            "bench",
            "--synthetic",
            "uniform",
            "--n",
            "400",
            "--range",
            "-5",
            "5",
            "--sample-size",
            "80",
            "--outer",
            "2",
            "--qs",
            "0.5",
            "--methods",
            "uqe",
            "--seed",
            "1",
        )
        assert code == 0
        assert rows[0]["dataset"] == "uniform"

    def test_sum_experiment(self, capsys):
        code, rows = run_cli(
            capsys,
            "bench",
            "--input",
            SMOKE,
            "--column",
            "value",
            "--experiment",
            "sum",
            "--range",
            "0",
            "10",
            "--sample-size",
            "60",
            "--outer",
            "2",
            "--inner",
            "3",
            "--methods",
            "uqe",
            "--sum-beta",
            "1.01",
            "--seed",
            "4",
        )
        assert code == 0
        assert rows[0]["experiment"] == "sum"
        assert rows[0]["q"] == 0.99


class TestPdf:
    def test_default_ranges_share_grid_curve(self, capsys, tmp_path):
        code, payload = run_cli(
            capsys,
            "pdf",
            "--input",
            SMOKE,
            "--column",
            "value",
            "--beta",
            "1.01",
            "--out-dir",
            str(tmp_path),
        )
        assert code == 0
        paths = payload["written"]
        assert len(paths) == 4
        uqe_paths = [p for p in paths if "uqe_pdf" in p]
        a, b = (open(p, "rb").read() for p in uqe_paths)
        assert a == b


class TestExitCodes:
    def test_console_script(self):
        ok = subprocess.run(
            ["uqe", "account", "--query-class", "monotonic"],
            capture_output=True,
            text=True,
        )
        assert ok.returncode == 0
        bad_flag = subprocess.run(["uqe", "nonsense"], capture_output=True, text=True)
        assert bad_flag.returncode == 2
        bad_input = subprocess.run(
            ["uqe", "quantile", "--input", "/definitely/missing.csv", "--column", "v", "--q", "0.5"],
            capture_output=True,
            text=True,
        )
        assert bad_input.returncode == 1
        assert "error:" in bad_input.stderr

    def test_module_invocation(self):
        res = subprocess.run(
            [sys.executable, "-m", "uqe.cli", "account", "--query-class", "general"],
            capture_output=True,
            text=True,
        )
        assert res.returncode == 0
        assert json.loads(res.stdout)["guarantee"]["eps_dp"] == 1.5
