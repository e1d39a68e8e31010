"""コマンドラインのテスト"""

import io
import json

import pytest

from khessian.cli import build_parser, main
from khessian.export import read_csv


def run_cli(*argv):
    """(終了コード, 標準出力の JSON, 標準エラー) を返す"""
    stdout, stderr = io.StringIO(), io.StringIO()
    code = main(list(argv), stdout=stdout, stderr=stderr)
    out = stdout.getvalue()
    return code, json.loads(out) if out else None, stderr.getvalue()


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    monkeypatch.delenv("HF_TOL", raising=False)


class TestExponents:
    """exponents サブコマンドのテスト"""

    def test_dimension_only(self):
        code, out, _ = run_cli("exponents", "--n", "11", "--k", "1")
        assert code == 0
        assert out["mu_star_exact"] == "99/4"
        assert out["q_star_exact"] == "13/9"
        assert isinstance(out["q_jl"], float)

    def test_infinite_q_jl(self):
        _, out, _ = run_cli("exponents", "--n", "10", "--k", "1")
        assert out["q_jl"] == "inf"

    def test_with_q(self):
        code, out, _ = run_cli("exponents", "--n", "13", "--k", "2", "--q", "5")
        assert code == 0
        assert out["regime"] == "spiral"
        assert out["discriminant"] == pytest.approx(-231 / 9)

    def test_invalid_dimension(self):
        code, out, err = run_cli("exponents", "--n", "4", "--k", "2")
        assert code == 2
        assert out is None
        assert json.loads(err)["error"] == "DOMAIN_ERROR"

    def test_missing_argument(self, capsys):
        code, _, _ = run_cli("exponents", "--n", "11")
        assert code == 2


class TestOrbitAndBifurcation:
    """orbit / bifurcation サブコマンドのテスト"""

    def test_orbit_csv(self, tmp_path):
        path = tmp_path / "orbit.csv"
        code, out, _ = run_cli("orbit", "--n", "13", "--k", "2", "--q", "5",
                               "--format", "csv", "--out", str(path))
        assert code == 0
        assert out["winding"] >= 1
        assert out["regime"]["tag"] == "spiral"
        meta, columns, table = read_csv(path)
        assert columns == ["t", "y", "z"]
        assert meta["command"] == "orbit"
        assert table["t"].size == out["samples"]

    def test_orbit_subcritical(self):
        code, _, err = run_cli("orbit", "--n", "13", "--k", "2", "--q", "3")
        assert code == 3
        assert json.loads(err)["error"] == "REGIME_ERROR"

    def test_bifurcation_json(self, tmp_path):
        path = tmp_path / "branch.json"
        code, out, _ = run_cli("bifurcation", "--n", "13", "--k", "2", "--q", "5",
                               "--s-max", "100", "--out", str(path))
        assert code == 0
        assert out["branch_limit_physical"] == pytest.approx(6 * 304 / 27)
        assert out["turning_points"]
        assert 0 < out["resolved_samples"] <= out["samples"]
        payload = json.loads(path.read_text(encoding="utf-8"))
        assert payload["metadata"]["tool"] == "khessian"
        assert payload["metadata"]["run"]["s_max"] == 100.0
        assert set(payload["data"]) == {"s", "lambda_rescaled", "lambda_physical", "A"}

    def test_output_is_reproducible(self, tmp_path):
        paths = [tmp_path / "a.json", tmp_path / "b.json"]
        for path in paths:
            run_cli("bifurcation", "--n", "13", "--k", "2", "--q", "5",
                    "--s-max", "10", "--out", str(path))
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_bad_s_max(self):
        code, _, _ = run_cli("orbit", "--n", "13", "--k", "2", "--q", "5", "--s-max", "0")
        assert code == 2

    def test_tol_option(self, tmp_path):
        path = tmp_path / "branch.json"
        run_cli("--tol", "1e-9", "bifurcation", "--n", "13", "--k", "2", "--q", "5",
                "--s-max", "10", "--out", str(path))
        payload = json.loads(path.read_text(encoding="utf-8"))
        assert payload["metadata"]["run"]["tol"] == 1e-9

    def test_invalid_env_tol(self, monkeypatch):
        monkeypatch.setenv("HF_TOL", "tiny")
        code, _, _ = run_cli("orbit", "--n", "13", "--k", "2", "--q", "5")
        assert code == 2


class TestSolveAndVerify:
    """solve / critical / verify サブコマンドのテスト"""

    def test_solve_writes_files(self, tmp_path):
        code, out, _ = run_cli("solve", "--n", "13", "--k", "2", "--q", "5",
                               "--lambda", "30", "--out-dir", str(tmp_path))
        assert code == 0
        assert out["count"] == 1
        assert out["files"] == [str(tmp_path / "solution_0.json")]
        code, verified, _ = run_cli("verify", out["files"][0], "--threshold", "1e-3")
        assert code == 0
        assert verified["failed"] == []
        assert verified["lambda_physical"] == pytest.approx(30.0)

    def test_solve_node(self, tmp_path):
        """結節点では解は1個"""
        code, out, _ = run_cli("solve", "--n", "11", "--k", "1", "--q", "8",
                               "--lambda", "1.0", "--out-dir", str(tmp_path))
        assert code == 0
        assert out["count"] == 1
        assert len(out["files"]) == 1

    def test_critical_csv(self, tmp_path):
        code, out, _ = run_cli("critical", "--n", "5", "--k", "1", "--lambda", "2",
                               "--format", "csv", "--out-dir", str(tmp_path))
        assert code == 0
        assert out["count"] == 2
        assert out["mu_star"] == 3.75
        for name in ("solution_0.csv", "solution_1.csv"):
            assert (tmp_path / name).exists()
        code, verified, _ = run_cli("verify", str(tmp_path / "solution_1.csv"),
                                    "--threshold", "1e-3")
        assert code == 0

    def test_verify_threshold_failure(self, tmp_path):
        run_cli("critical", "--n", "5", "--k", "1", "--lambda", "2", "--out-dir", str(tmp_path))
        code, verified, _ = run_cli("verify", str(tmp_path / "solution_0.json"),
                                    "--threshold", "1e-30")
        assert code == 4
        assert verified["failed"]

    def test_critical_above_mu_star(self):
        code, _, _ = run_cli("critical", "--n", "5", "--k", "1", "--lambda", "4")
        assert code == 2

    def test_verify_missing_file(self, tmp_path):
        code, _, _ = run_cli("verify", str(tmp_path / "none.json"))
        assert code == 2

    def test_summary_only(self):
        code, out, _ = run_cli("solve", "--n", "5", "--k", "1", "--q", str(7 / 3),
                               "--lambda", "2")
        assert code == 0
        assert out["files"] == []


class TestSweepAndLambdaStar:
    """sweep / lambda-star サブコマンドのテスト"""

    def test_sweep(self):
        code, out, _ = run_cli("sweep", "--n", "13", "--k", "2", "--q", "3", "5",
                               "--lambda", "30", "--s-max", "100")
        assert code == 0
        first, second = out["results"]
        assert first["error"] == "REGIME_ERROR"
        assert second["count"] == 1
        assert second["q"] == 5.0

    def test_sweep_rejects_jobs(self):
        code, _, _ = run_cli("sweep", "--n", "13", "--k", "2", "--q", "5",
                             "--lambda", "30", "--jobs", "0")
        assert code == 2

    def test_lambda_star(self):
        code, out, _ = run_cli("lambda-star", "--n", "13", "--k", "2", "--q", "5",
                               "--rtol", "0.05")
        assert code == 0
        assert out["lower"] <= out["value"] <= out["upper"]
        assert out["value"] > out["lambda_singular"]


class TestParser:
    """引数解析のテスト"""

    def test_subcommands(self):
        parser = build_parser()
        args = parser.parse_args(["solve", "--n", "13", "--k", "2", "--q", "5",
                                  "--lambda", "1"])
        assert args.lam == 1.0
        assert args.out_format == "json"
