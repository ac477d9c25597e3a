import os
import shutil
import subprocess
import sys

import pytest

_FAST = ("--n-w", "300", "--n-x", "30", "--seed", "9")


def run_cli(*args, env_extra=None):
    env = os.environ.copy()
    if env_extra:
        env.update(env_extra)
    return subprocess.run([sys.executable, "-m", "qhedge.cli", *args],
                          capture_output=True, text=True, env=env)


def split_csv(text):
    comments = [l for l in text.splitlines() if l.startswith("#")]
    data = [l for l in text.splitlines() if l and not l.startswith("#")]
    header = data[0].split(",")
    rows = [dict(zip(header, line.split(","))) for line in data[1:]]
    return comments, header, rows


class TestFrontierCommand:
    def test_row_count_and_order(self):
        res = run_cli("frontier", *_FAST, "--rho", "0.3,0.6,0.9",
                      "--m-grid", "0.1:10:5,log")
        assert res.returncode == 0
        comments, header, rows = split_csv(res.stdout)
        assert header == ["rho", "m", "capital", "capital_se",
                          "success", "success_se"]
        assert len(rows) == 15
        assert [r["rho"] for r in rows[:5]] == ["0.3"] * 5
        assert any(c.startswith("# n_w = 300") for c in comments)

    def test_capital_nonincreasing_within_rho_block(self):
        res = run_cli("frontier", *_FAST, "--rho", "0.5",
                      "--m-grid", "0.01:100:8,log")
        _, _, rows = split_csv(res.stdout)
        caps = [float(r["capital"]) for r in rows]
        sucs = [float(r["success"]) for r in rows]
        assert all(b <= a for a, b in zip(caps, caps[1:]))
        assert all(b <= a for a, b in zip(sucs, sucs[1:]))

    def test_rerun_is_byte_identical(self):
        args = ("frontier", *_FAST, "--rho", "0.2,0.7",
                "--m-grid", "0.5:5:3,lin")
        a = run_cli(*args)
        b = run_cli(*args)
        assert a.stdout == b.stdout

    def test_echo_round_trip_reproduces_output(self, tmp_path):
        out1 = tmp_path / "run1.csv"
        res = run_cli("frontier", *_FAST, "--rho", "0.3,0.6",
                      "--m-grid", "0.1:10:3,log", "--out", str(out1))
        assert res.returncode == 0
        assert "frontier:" in res.stdout
        text = out1.read_text()
        config = "\n".join(line[2:] for line in text.splitlines()
                           if line.startswith("# ")) + "\n"
        cfg_file = tmp_path / "echo.cfg"
        cfg_file.write_text(config)
        out2 = tmp_path / "run2.csv"
        res2 = run_cli("frontier", "--config", str(cfg_file),
                       "--out", str(out2))
        assert res2.returncode == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_flags_override_config_file(self, tmp_path):
        cfg = tmp_path / "a.cfg"
        cfg.write_text("rho = 0.5\nn_w = 300\nn_x = 30\nseed = 9\n"
                       "m_grid = 1:2:2,lin\n")
        base = run_cli("frontier", "--config", str(cfg))
        overridden = run_cli("frontier", "--config", str(cfg),
                             "--rho", "0.1")
        _, _, rows_a = split_csv(base.stdout)
        _, _, rows_b = split_csv(overridden.stdout)
        assert rows_a[0]["rho"] == "0.5"
        assert rows_b[0]["rho"] == "0.1"


class TestSolveCommand:
    def test_record_fields(self):
        res = run_cli("solve", *_FAST, "--rho", "0.6", "--target", "0.95")
        assert res.returncode == 0
        _, header, rows = split_csv(res.stdout)
        assert header == ["target", "m_star", "capital", "achieved",
                          "unconstrained", "capital_se", "achieved_se"]
        assert len(rows) == 1
        row = rows[0]
        assert row["unconstrained"] == "false"
        assert float(row["achieved"]) >= 0.95
        assert float(row["m_star"]) > 0.0

    def test_unconstrained_record(self):
        res = run_cli("solve", *_FAST, "--target", "0.1")
        _, _, rows = split_csv(res.stdout)
        assert rows[0]["unconstrained"] == "true"
        assert rows[0]["m_star"] == ""
        assert rows[0]["capital"] == "0.0"

    def test_targets_order_capitals(self):
        lo = run_cli("solve", *_FAST, "--rho", "0.6", "--target", "0.9")
        hi = run_cli("solve", *_FAST, "--rho", "0.6", "--target", "0.995")
        _, _, rows_lo = split_csv(lo.stdout)
        _, _, rows_hi = split_csv(hi.stdout)
        assert float(rows_lo[0]["capital"]) <= float(rows_hi[0]["capital"])

    def test_summary_printed_with_out(self, tmp_path):
        out = tmp_path / "sol.csv"
        res = run_cli("solve", *_FAST, "--target", "0.9",
                      "--out", str(out))
        assert res.returncode == 0
        assert "solve: target = 0.9" in res.stdout
        assert out.exists()

    def test_missing_target_is_config_error(self):
        res = run_cli("solve", *_FAST)
        assert res.returncode == 2
        assert "target" in res.stderr


class TestBacktestCommand:
    def test_record_fields_finite(self):
        res = run_cli("backtest", *_FAST, "--rho", "0.5", "--m", "1.0",
                      "--n-paths", "150", "--n-steps", "4")
        assert res.returncode == 0
        _, header, rows = split_csv(res.stdout)
        assert header == ["n_paths", "n_steps", "m", "predicted_success",
                          "empirical_success", "success_gap",
                          "mean_hedge_error", "std_hedge_error",
                          "initial_capital_used"]
        row = rows[0]
        assert row["n_paths"] == "150"
        for key in header[3:]:
            float(row[key])  # parseable, finite enough to parse

    def test_superhedge_is_certain(self):
        res = run_cli("backtest", *_FAST, "--m", "0",
                      "--n-paths", "100", "--n-steps", "3")
        _, _, rows = split_csv(res.stdout)
        assert rows[0]["empirical_success"] == "1.0"

    def test_gap_reported_in_summary(self, tmp_path):
        out = tmp_path / "bt.csv"
        res = run_cli("backtest", *_FAST, "--m", "1.0", "--n-paths", "100",
                      "--n-steps", "3", "--out", str(out))
        assert res.returncode == 0
        assert "predicted success" in res.stdout
        assert "gap" in res.stdout

    def test_m_and_target_conflict(self):
        res = run_cli("backtest", *_FAST, "--m", "1.0", "--target", "0.9")
        assert res.returncode == 2
        assert "exactly one" in res.stderr


class TestConfigHandling:
    def test_comments_and_blanks_ignored(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("# a comment\n\nrho = 0.4\n  n_w = 300  \n"
                       "n_x = 30\nseed = 1\nm_grid = 1:2:2,lin\n")
        res = run_cli("frontier", "--config", str(cfg))
        assert res.returncode == 0

    def test_unknown_key_names_file_and_line(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("rho = 0.4\nbogus = 1\n")
        res = run_cli("frontier", "--config", str(cfg))
        assert res.returncode == 2
        assert "c.cfg:2" in res.stderr and "bogus" in res.stderr

    def test_command_mismatched_key_rejected(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("target = 0.9\n")
        res = run_cli("frontier", "--config", str(cfg))
        assert res.returncode == 2
        assert "not valid for 'frontier'" in res.stderr

    def test_duplicate_key_rejected(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("rho = 0.4\nrho = 0.5\n")
        res = run_cli("frontier", "--config", str(cfg))
        assert res.returncode == 2
        assert "duplicate" in res.stderr

    def test_malformed_line_rejected(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("rho 0.4\n")
        res = run_cli("frontier", "--config", str(cfg))
        assert res.returncode == 2
        assert "c.cfg:1" in res.stderr

    def test_missing_config_file(self):
        res = run_cli("frontier", "--config", "/nonexistent/x.cfg")
        assert res.returncode == 2

    @pytest.mark.parametrize("flag,value", [
        ("--m-grid", "1:2:3"),
        ("--m-grid", "1:2,log"),
        ("--m-grid", "0:2:3,log"),
        ("--seed", "abc"),
        ("--factor", "both"),
        ("--rho", "0.5,oops"),
    ])
    def test_bad_flag_values_exit_2(self, flag, value):
        res = run_cli("frontier", *_FAST, flag, value)
        assert res.returncode == 2
        assert flag.lstrip("-").replace("-", "_") in res.stderr.replace("-", "_")

    def test_rho_list_rejected_outside_frontier(self):
        res = run_cli("solve", *_FAST, "--rho", "0.3,0.6",
                      "--target", "0.9")
        assert res.returncode == 2
        assert "single rho" in res.stderr


class TestExitCodes:
    def test_numerical_failure_exits_3(self):
        res = run_cli("frontier", "--n-w", "10", "--n-x", "10",
                      "--mu-x", "2000", "--sigma-x", "0.1")
        assert res.returncode == 3
        assert "numerical" in res.stderr

    def test_unknown_option_exits_2(self):
        res = run_cli("frontier", "--frobnicate", "1")
        assert res.returncode == 2

    def test_missing_subcommand_exits_2(self):
        res = run_cli()
        assert res.returncode == 2


class TestConsoleScript:
    def test_entry_point_installed(self):
        exe = shutil.which("qhedge")
        assert exe is not None
        res = subprocess.run([exe, "frontier", *_FAST,
                              "--m-grid", "1:2:2,lin"],
                             capture_output=True, text=True)
        assert res.returncode == 0
        assert "rho,m,capital" in res.stdout
