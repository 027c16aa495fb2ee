import json

import numpy as np
import pytest

from pubpriv import load_dataset
from pubpriv.checks import CheckResult, VerifyReport
from pubpriv.cli import main


class TestGen:
    def test_mean_to_stdout(self, capsys):
        assert main(["gen", "--d", "2", "--n", "3", "--m", "4", "--seed", "1"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "pubpriv-dataset v1"
        assert lines[1] == "2 3 4 0"
        assert len(lines) == 2 + 7
        assert all(len(line.split()) == 2 for line in lines[2:])

    def test_reg_file(self, tmp_path):
        out = tmp_path / "reg.txt"
        assert main(["gen", "--problem", "reg", "--d", "3", "--n", "5", "--m", "5", "--tau", "0.5", "--out", str(out)]) == 0
        header, (x, y) = load_dataset(out)
        assert header == {"d": 3, "n": 5, "m": 5, "tau": 0.5}
        assert x.shape == (10, 3) and y.shape == (10,)

    def test_deterministic(self, capsys):
        main(["gen", "--seed", "4"])
        a = capsys.readouterr().out
        main(["gen", "--seed", "4"])
        assert capsys.readouterr().out == a


class TestRun:
    def test_csv(self, capsys):
        assert main(["run", "--d", "3", "--n", "10", "--m", "10", "--trials", "5"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "axis_value,stat_name,mean,stderr,count,min,max"
        assert [line.split(",")[1] for line in lines[1:]] == ["sum_total", "err_l2"]

    def test_json_dp(self, capsys):
        argv = ["run", "--d", "3", "--n", "10", "--m", "0", "--trials", "4", "--mechanism", "GaussianMechMean", "--eps", "0.5", "--format", "json", "--outputs", "sum_priv,zprime"]
        assert main(argv) == 0
        rows = json.loads(capsys.readouterr().out)
        assert [r["stat_name"] for r in rows] == ["sum_priv", "zprime"]
        assert all(r["count"] == 4 for r in rows)

    def test_config_with_override(self, tmp_path, capsys):
        cfg = {"problem": "mean", "d": 2, "n": 5, "m": 5, "trials": 50, "mechanism": {"kind": "BayesPosterior"}}
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        assert main(["run", "--config", str(path), "--trials", "3", "--format", "json"]) == 0
        rows = json.loads(capsys.readouterr().out)
        assert rows[0]["count"] == 3

    def test_regression(self, capsys):
        assert main(["run", "--problem", "reg", "--d", "2", "--n", "10", "--m", "10", "--trials", "3", "--outputs", "gls_score"]) == 0
        assert "gls_score" in capsys.readouterr().out

    def test_experiment_failure_exit_code(self, capsys):
        argv = ["run", "--problem", "reg", "--d", "5", "--n", "10", "--m", "2", "--trials", "5", "--mechanism", "PublicOnlyOls"]
        assert main(argv) == 2
        assert "experiment failed" in capsys.readouterr().err

    def test_missing_dimension(self, capsys):
        assert main(["run", "--n", "5", "--m", "5"]) == 1

    def test_write_to_file(self, tmp_path, capsys):
        out = tmp_path / "res.csv"
        assert main(["run", "--d", "2", "--n", "4", "--m", "4", "--trials", "2", "--out", str(out)]) == 0
        assert capsys.readouterr().out == ""
        assert out.read_text().startswith("axis_value,")


class TestSweep:
    def test_tau(self, capsys):
        assert main(["sweep", "--d", "2", "--n", "5", "--m", "5", "--trials", "3", "--axis", "tau", "--values", "0,0.5,1"]) == 0
        lines = capsys.readouterr().out.splitlines()[1:]
        assert [line.split(",")[0] for line in lines] == ["0.0", "0.0", "0.5", "0.5", "1.0", "1.0"]

    def test_bad_axis(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["sweep", "--d", "2", "--n", "5", "--m", "5", "--axis", "alpha", "--values", "1"])
        assert info.value.code == 1


class TestUsage:
    def test_no_command(self, capsys):
        with pytest.raises(SystemExit) as info:
            main([])
        assert info.value.code == 1

    def test_bad_value(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["run", "--d", "two"])
        assert info.value.code == 1

    def test_invalid_parameter(self, capsys):
        assert main(["gen", "--d", "0"]) == 1


class TestBounds:
    def test_json(self, capsys):
        assert main(["bounds", "--d", "16", "--n", "100", "--m", "100", "--eps", "1", "--alpha", "0.5", "--json"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["kappa"] == 1.0
        assert out["upper_sum_z"] == pytest.approx(70.0)
        assert out["regime"] == "small_shift"
        assert out["gamma_tau"] == "inf"

    def test_text(self, capsys):
        assert main(["bounds", "--m", "0"]) == 0
        assert "no_public_data" in capsys.readouterr().out


class TestVerify:
    def test_fast(self, capsys, tmp_path):
        out = tmp_path / "v.json"
        assert main(["verify", "--level", "fast", "--out", str(out)]) == 0
        assert "OK level=fast" in capsys.readouterr().out
        assert all(r["passed"] for r in json.loads(out.read_text()))

    def test_failure_exit_code(self, monkeypatch, capsys):
        import pubpriv.cli as cli

        monkeypatch.setattr(cli, "verify_suite", lambda level, progress=None: VerifyReport(level, [CheckResult("x", False, {"v": np.float64(1.0)})], 0.0))
        assert main(["verify"]) == 3
