"""Command-line interface: argument handling, exit codes, CSV output."""

from __future__ import annotations

import json

import pytest

from anharm.cli import (
    EXIT_BAD_POTENTIAL,
    EXIT_CHECKS_FAILED,
    EXIT_OK,
    EXIT_USAGE,
    main,
)
from anharm.verify import CheckResult


def run(capsys, *argv):
    """Invoke main and return (exit code, stdout lines)."""
    rc = main(list(argv))
    out = capsys.readouterr().out
    return rc, out.splitlines()


def parse_csv(lines):
    assert lines[0].startswith("# ")
    header = lines[1].split(",")
    rows = [line.split(",") for line in lines[2:]]
    return header, rows


class TestSeries:
    def test_quartic_low_orders(self, capsys):
        rc, lines = run(capsys, "series", "--n", "0", "--k-max", "2")
        assert rc == EXIT_OK
        header, rows = parse_csv(lines)
        assert header == ["k", "energy", "leading_coefficient", "leading_degree"]
        assert rows[0] == ["0", '"1/2"', '"1"', "0"]
        assert rows[1] == ["1", '"-3/4"', '"1/4"', "4"]
        assert rows[2] == ["2", '"-21/8"', '"1/32"', "8"]

    def test_header_records_settings(self, capsys):
        rc, lines = run(capsys, "series", "--k-max", "1", "--bits", "96")
        assert rc == EXIT_OK
        assert "potential=builtin-quartic" in lines[0]
        assert "precision_bits=96" in lines[0]

    def test_env_precision_override(self, capsys, monkeypatch):
        monkeypatch.setenv("LOPT_PRECISION_BITS", "80")
        rc, lines = run(capsys, "series", "--k-max", "1")
        assert rc == EXIT_OK
        assert "precision_bits=80" in lines[0]

    def test_explicit_bits_beats_env(self, capsys, monkeypatch):
        monkeypatch.setenv("LOPT_PRECISION_BITS", "80")
        rc, lines = run(capsys, "series", "--k-max", "1", "--bits", "128")
        assert rc == EXIT_OK
        assert "precision_bits=128" in lines[0]

    def test_custom_potential_file(self, capsys, tmp_path):
        cfg = tmp_path / "pot.json"
        cfg.write_text(json.dumps({"coeffs": {"4": "-1/10", "6": "-1/100"}}))
        rc, lines = run(capsys, "series", "--k-max", "1",
                        "--potential", str(cfg))
        assert rc == EXIT_OK
        _, rows = parse_csv(lines)
        # first order sees only the quartic term: E_{0,1} = 3 a4 / 4
        assert rows[1][1] == '"-3/40"'


class TestExitCodes:
    def test_low_precision_rejected(self, capsys):
        rc, _ = run(capsys, "series", "--k-max", "2", "--bits", "32")
        assert rc == EXIT_USAGE

    def test_order_cap(self, capsys):
        rc, _ = run(capsys, "series", "--k-max", "201")
        assert rc == EXIT_USAGE

    def test_bad_grid_spec(self, capsys):
        rc, _ = run(capsys, "trajectories", "--tau=0:1")
        assert rc == EXIT_USAGE
        rc, _ = run(capsys, "trajectories", "--tau=1:0:5")
        assert rc == EXIT_USAGE

    def test_bad_order_list(self, capsys):
        rc, _ = run(capsys, "curve-A", "--k", "4,nope", "--xi", "1:2:2")
        assert rc == EXIT_USAGE

    def test_unknown_subcommand(self, capsys):
        rc, _ = run(capsys, "does-not-exist")
        assert rc == EXIT_USAGE

    def test_missing_potential_file(self, capsys):
        rc, _ = run(capsys, "series", "--k-max", "1",
                    "--potential", "/no/such/file.json")
        assert rc == EXIT_BAD_POTENTIAL

    def test_invalid_potential_config(self, capsys, tmp_path):
        wrong_sign = tmp_path / "wrong.json"
        wrong_sign.write_text(json.dumps({"coeffs": {"4": "1/10"}}))
        rc, _ = run(capsys, "series", "--k-max", "1",
                    "--potential", str(wrong_sign))
        assert rc == EXIT_BAD_POTENTIAL

        not_json = tmp_path / "broken.json"
        not_json.write_text("{coeffs:")
        rc, _ = run(capsys, "series", "--k-max", "1",
                    "--potential", str(not_json))
        assert rc == EXIT_BAD_POTENTIAL

    def test_divergent_growth_integral(self, capsys):
        # <0|1|0> has a non-decaying integrand on both branches
        rc, _ = run(capsys, "matelem", "--m1", "0", "--m2", "0", "--k", "5")
        assert rc == EXIT_USAGE

    def test_bad_env_bits(self, capsys, monkeypatch):
        monkeypatch.setenv("LOPT_PRECISION_BITS", "lots")
        rc, _ = run(capsys, "series", "--k-max", "1")
        assert rc == EXIT_USAGE


class TestDeterminism:
    def test_byte_identical_reruns(self, tmp_path):
        argv = ["curve-A", "--n", "0", "--k", "4,8", "--xi", "0.8:1.6:3"]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(argv + ["--output", str(a)]) == EXIT_OK
        assert main(argv + ["--output", str(b)]) == EXIT_OK
        assert a.read_bytes() == b.read_bytes()

    def test_output_file_matches_stdout(self, capsys, tmp_path):
        target = tmp_path / "t.csv"
        rc = main(["trajectories", "--tau=-0.4:0.4:3", "--output", str(target)])
        assert rc == EXIT_OK
        rc, lines = run(capsys, "trajectories", "--tau=-0.4:0.4:3")
        assert rc == EXIT_OK
        assert target.read_text().splitlines() == lines


class TestCurves:
    def test_curve_a_devs_shrink_with_order(self, capsys):
        rc, lines = run(capsys, "curve-A", "--k", "10,20", "--xi", "1.0:2.0:3")
        assert rc == EXIT_OK
        header, rows = parse_csv(lines)
        i10, i20 = header.index("absdev_10"), header.index("absdev_20")
        for row in rows:
            assert float(row[i20]) < float(row[i10])

    def test_curve_m_devs_shrink_with_order(self, capsys):
        rc, lines = run(capsys, "curve-M", "--k", "10,20", "--xi", "1.5:1.5:1")
        assert rc == EXIT_OK
        header, rows = parse_csv(lines)
        i10, i20 = header.index("absdev_10"), header.index("absdev_20")
        assert float(rows[0][i20]) < float(rows[0][i10])

    def test_fixed_x_devs_shrink_with_order(self, capsys):
        rc, lines = run(capsys, "fixed-x", "--k", "4,8", "--x", "0.5:2.0:4")
        assert rc == EXIT_OK
        header, rows = parse_csv(lines)
        i4, i8 = header.index("absdev_4"), header.index("absdev_8")
        for row in rows:
            assert float(row[i8]) < float(row[i4])

    def test_trajectory_columns(self, capsys):
        rc, lines = run(capsys, "trajectories", "--tau=-1:1:5")
        assert rc == EXIT_OK
        header, rows = parse_csv(lines)
        assert header == ["tau", "branch", "Q", "P", "s", "lambda",
                          "lambda_dot", "xi", "A"]
        assert len(rows) == 5
        assert {row[1] for row in rows} <= {"rising", "falling"}
        for row in rows:
            assert float(row[2]) > 0  # Q stays positive on the bounce


class TestRatios:
    def test_eigen_ratio_columns(self, capsys):
        rc, lines = run(capsys, "eigen-ratio", "--k-max", "4")
        assert rc == EXIT_OK
        header, rows = parse_csv(lines)
        assert header == ["k", "energy", "asymptote_log", "ratio", "absdev"]
        assert rows[0][1] == '"-3/4"'
        for row in rows:
            assert float(row[3]) > 0  # same sign as the asymptote

    def test_matelem_exact_column(self, capsys):
        rc, lines = run(capsys, "matelem", "--m1", "2", "--k", "5,10")
        assert rc == EXIT_OK
        _, rows = parse_csv(lines)
        for row in rows:
            assert row[1].startswith('"') and row[1].endswith('*sqrt(pi)"')
            assert float(row[2]) > 0
            assert float(row[4]) > 0

    def test_density_gap_shrinks(self, capsys):
        rc, lines = run(capsys, "density", "--kappa", "1", "--eta", "1.5",
                        "--k", "10,20")
        assert rc == EXIT_OK
        _, rows = parse_csv(lines)
        gaps = [abs(float(row[6])) for row in rows]
        assert gaps[1] < gaps[0] < 0.05


class TestVerify:
    def test_reports_and_exit_code(self, capsys, monkeypatch):
        # plumbing only; the real battery runs in the acceptance tests
        fake = [CheckResult("first", True, "fine", 0.1),
                CheckResult("second", False, "off by 0.2", 0.2)]
        monkeypatch.setattr("anharm.cli.run_battery", lambda pot, bits: fake)
        rc, lines = run(capsys, "verify")
        assert rc == EXIT_CHECKS_FAILED
        assert lines[0].startswith("PASS first:")
        assert lines[1].startswith("FAIL second:")
        assert lines[2] == "1/2 checks passed"

        monkeypatch.setattr("anharm.cli.run_battery",
                            lambda pot, bits: fake[:1])
        rc, lines = run(capsys, "verify")
        assert rc == EXIT_OK
        assert lines[-1] == "1/1 checks passed"

    def test_custom_potential_goes_through(self, capsys, tmp_path, monkeypatch):
        seen = {}

        def spy(pot, bits):
            seen["pot"] = pot
            return [CheckResult("only", True, "ok", 0.0)]

        monkeypatch.setattr("anharm.cli.run_battery", spy)
        cfg = tmp_path / "pot.json"
        cfg.write_text(json.dumps({"coeffs": {"4": "-1/10"}}))
        rc, _ = run(capsys, "verify", "--potential", str(cfg))
        assert rc == EXIT_OK
        assert seen["pot"] is not None

        rc, _ = run(capsys, "verify")
        assert seen["pot"] is None  # builtin quartic runs the full battery
        assert rc == EXIT_OK
