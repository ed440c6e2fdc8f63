import json

import numpy as np
import pytest

from tensorinfo import cli
from tensorinfo.cli import (CSV_HEADER, EXIT_DOMAIN, EXIT_IO, EXIT_OK,
                            EXIT_PARSE, EXIT_VERIFY, main)


def run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    return code, out


def last_json(out):
    return json.loads(out.strip().splitlines()[-1])


class TestScalar:
    def test_zero_snr(self, capsys):
        code, out = run(capsys, ["scalar", "--prior", "rademacher", "--m", "0"])
        rec = last_json(out)
        assert code == EXIT_OK
        assert rec["f_tilde"] == 0.0
        assert rec["overlap"] == 0.0

    def test_gaussian_closed_form(self, capsys):
        code, out = run(capsys, ["scalar", "--prior", "gaussian:1.0", "--m", "1"])
        rec = last_json(out)
        assert code == EXIT_OK
        assert rec["f_tilde"] == pytest.approx(0.5 * np.log(2.0) - 0.5,
                                               abs=1e-12)

    def test_missing_prior_file(self, capsys):
        code = main(["scalar", "--prior", "file:missing.json", "--m", "1"])
        err = capsys.readouterr().err
        assert code == EXIT_PARSE
        assert "missing.json" in err

    def test_negative_snr(self, capsys):
        code, _ = run(capsys, ["scalar", "--prior", "rademacher", "--m", "-1"])
        assert code == EXIT_DOMAIN


class TestSolve:
    def test_gaussian2_known_minimizer(self, capsys):
        code, out = run(capsys, ["solve2", "--prior", "gaussian:1.0",
                                 "--lambda", "4"])
        rec = last_json(out)
        assert code == EXIT_OK
        assert rec["f_rs"] == pytest.approx(-0.4887061, abs=1e-6)
        assert rec["minimizer"][0] == pytest.approx(0.75, abs=1e-7)
        assert rec["gap"] <= 1e-8

    def test_zero_snr(self, capsys):
        code, out = run(capsys, ["solve2", "--prior", "rademacher",
                                 "--lambda", "0"])
        rec = last_json(out)
        assert code == EXIT_OK
        assert rec["f_rs"] == 0.0

    def test_gaussian3_gamma_contains_half(self, capsys):
        code, out = run(capsys, ["solve3", "--prior", "gaussian:1.0",
                                 "--lambda", "4"])
        rec = last_json(out)
        assert code == EXIT_OK
        assert any(abs(pt[0] - 0.5) < 1e-5 for pt in rec["gamma_points"])

    def test_negative_lambda(self, capsys):
        code, _ = run(capsys, ["solve2", "--prior", "rademacher",
                               "--lambda", "-1"])
        assert code == EXIT_DOMAIN

    def test_bad_prior(self, capsys):
        code, _ = run(capsys, ["solve2", "--prior", "cauchy", "--lambda", "1"])
        assert code == EXIT_PARSE

    def test_wrong_prior_count(self, capsys):
        code, _ = run(capsys, ["solve3", "--prior", "rademacher",
                               "--prior", "rademacher", "--lambda", "1"])
        assert code == EXIT_PARSE

    def test_config_file_fills_lambda(self, capsys, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"lambda": 4.0}))
        code, out = run(capsys, ["solve2", "--prior", "gaussian:1.0",
                                 "--lambda", "4",
                                 "--config", str(path)])
        rec = last_json(out)
        assert code == EXIT_OK
        assert rec["lambda"] == 4.0


class TestSweep:
    ARGS = ["sweep", "--order", "2", "--prior", "gaussian:1.0",
            "--lambda-start", "0.5", "--lambda-end", "2.0",
            "--lambda-step", "0.25"]

    def test_csv_shape_and_footer(self, capsys, tmp_path):
        out_path = tmp_path / "sweep.csv"
        code = main(self.ARGS + ["--output", str(out_path)])
        capsys.readouterr()
        assert code == EXIT_OK
        lines = out_path.read_text().strip().splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) == 1 + 7 + 1         # header, rows, footer
        footer = json.loads(lines[-1])
        assert footer["lambda_opt"] == pytest.approx(1.0, abs=1e-2)
        lams = [float(row.split(",")[0]) for row in lines[1:-1]]
        assert lams == sorted(lams)

    def test_deterministic_reruns(self, capsys, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(self.ARGS + ["--output", str(a)])
        main(self.ARGS + ["--output", str(b)])
        capsys.readouterr()
        assert a.read_bytes() == b.read_bytes()

    def test_threaded_matches_serial(self, capsys, tmp_path, monkeypatch):
        serial, threaded = tmp_path / "s.csv", tmp_path / "t.csv"
        main(self.ARGS + ["--output", str(serial)])
        monkeypatch.setenv("TENSORINFO_THREADS", "4")
        main(self.ARGS + ["--output", str(threaded)])
        capsys.readouterr()
        assert serial.read_bytes() == threaded.read_bytes()

    def test_no_transition_footer(self, capsys):
        code, out = run(capsys, ["sweep", "--order", "2", "--prior",
                                 "gaussian:1.0", "--lambda-start", "0.1",
                                 "--lambda-end", "0.5", "--lambda-step", "0.2"])
        assert code == EXIT_OK
        footer = last_json(out)
        assert footer == {"transition": "no transition in range"}

    def test_unwritable_output(self, capsys):
        code = main(self.ARGS + ["--output", "/nonexistent/dir/x.csv"])
        capsys.readouterr()
        assert code == EXIT_IO

    def test_bad_range(self, capsys):
        code, _ = run(capsys, ["sweep", "--order", "2", "--prior",
                               "rademacher", "--lambda-start", "2",
                               "--lambda-end", "1", "--lambda-step", "0.5"])
        assert code == EXIT_DOMAIN


class TestOracle:
    def test_record_fields(self, capsys):
        code, out = run(capsys, ["oracle", "--order", "2", "--prior",
                                 "rademacher", "--lambda", "1", "--n", "2",
                                 "--samples", "20", "--seed", "3"])
        rec = last_json(out)
        assert code == EXIT_OK
        assert set(rec) == {"order", "n", "lambda", "M", "seed", "mean_f",
                            "stderr", "overlaps"}
        assert rec["M"] == 20

    def test_guard_maps_to_domain_exit(self, capsys):
        code, _ = run(capsys, ["oracle", "--order", "2", "--prior",
                               "rademacher", "--lambda", "1", "--n", "14"])
        assert code == EXIT_DOMAIN


class TestVerify:
    def test_lemma_suite_passes(self, capsys):
        code, out = run(capsys, ["verify", "--suite", "lemmas",
                                 "--trials", "1"])
        assert code == EXIT_OK
        for line in out.strip().splitlines():
            rec = json.loads(line)
            assert rec["pass"] is True
            assert {"lemma", "inputs", "gaps", "pass"} <= set(rec)

    def test_impossible_tolerance_fails(self, capsys):
        code, _ = run(capsys, ["verify", "--suite", "lemmas", "--trials", "0",
                               "--tol", "1e-300"])
        assert code == EXIT_VERIFY

    def test_theorem_suite_fast(self, capsys):
        code, out = run(capsys, ["verify", "--suite", "theorems", "--fast"])
        assert code == EXIT_OK
        assert all(json.loads(line)["pass"] for line in out.strip().splitlines())

    def test_oracle_suite_fast(self, capsys):
        code, out = run(capsys, ["verify", "--suite", "oracle", "--fast"])
        assert code == EXIT_OK
