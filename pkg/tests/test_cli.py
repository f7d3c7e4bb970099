import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from varmg.cli import build_parser, config_from_args, main


def run(tmp_path, *args, name="out"):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    return code, out


class TestParser:
    def test_defaults(self):
        cfg = config_from_args(build_parser().parse_args(["solve"]))
        assert (cfg.N, cfg.coarsest_N, cfg.cycle, cfg.mu, cfg.nu, cfg.q) == (32, 2, "v_cycle", 1, 1, 1)
        assert (cfg.epsilon, cfg.seed, cfg.smoother, cfg.alpha) == (1e-8, 42, "richardson", 1.0)
        assert cfg.format == "json"

    def test_flag_mapping(self):
        args = build_parser().parse_args(["fmg", "--cycle", "w", "--smoother", "optimal", "--n", "16",
                                          "--coarsest-n", "4", "--q", "2", "--alpha", "0.25",
                                          "--format", "csv", "--threads", "2", "--deterministic"])
        cfg = config_from_args(args)
        assert cfg.cycle == "w_cycle" and cfg.smoother == "richardson_optimal_step"
        assert (cfg.N, cfg.coarsest_N, cfg.q, cfg.alpha) == (16, 4, 2, 0.25)
        assert cfg.deterministic and cfg.threads == 2

    def test_bad_choice(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["solve", "--cycle", "f"])


class TestSnapshot:
    def test_files(self, tmp_path):
        code, out = run(tmp_path, "snapshot")
        assert code == 0
        grids = {k: np.loadtxt(out / f"snapshot_iter{k:02d}.csv", delimiter=",")
                 for k in (0, 1, 2, 3, 10, 20)}
        assert all(g.shape == (31, 31) for g in grids.values())
        assert grids[0].max() == pytest.approx(1.0, abs=1e-15)
        with open(out / "norms.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 21
        e = np.array([float(r["euclidean"]) for r in rows])
        assert np.all(np.diff(e) < 0)
        # per-step reduction over iterations 10..20 is weaker than over 1..3
        assert (e[20] / e[10]) ** (1 / 10) > (e[3] / e[1]) ** (1 / 2)

    @pytest.mark.xfail(strict=True, reason="compares a ten-step product with a two-step product; "
                                           "measured 0.936 vs 0.964")
    def test_unnormalized_ratio_comparison(self, tmp_path):
        _, out = run(tmp_path, "snapshot")
        with open(out / "norms.csv") as fh:
            e = np.array([float(r["euclidean"]) for r in csv.DictReader(fh)])
        assert e[20] / e[10] > e[3] / e[1]

    def test_seventeen_digits(self, tmp_path):
        _, out = run(tmp_path, "snapshot", "--n", "4")
        rows = (out / "norms.csv").read_text().splitlines()
        assert rows[0] == "iteration,euclidean,energy"
        value = rows[1].split(",")[1]
        assert float(value) == float(f"{float(value):.17g}") and "." in value


@pytest.mark.parametrize("command", ["solve", "fmg", "diagnose", "snapshot"])
@pytest.mark.parametrize("fmt", ["json", "csv"])
def test_byte_identical_reruns(tmp_path, command, fmt):
    code_a, a = run(tmp_path, command, "--n", "16", "--format", fmt, name="a")
    code_b, b = run(tmp_path, command, "--n", "16", "--format", fmt, "--threads", "3", name="b")
    assert code_a == code_b == 0
    files = sorted(p.name for p in a.iterdir())
    assert files == sorted(p.name for p in b.iterdir()) and files
    for name in files:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_solve_report(tmp_path):
    code, out = run(tmp_path, "solve", "--n", "16", "--cycle", "w")
    doc = json.loads((out / "solve.json").read_text())
    assert code == 0 and doc["schema"] == 1
    rep = doc["report"]
    assert rep["converged"]
    assert rep["residual_history"][-1] <= rep["epsilon"]
    assert len(rep["convergence_factors"]) == len(rep["residual_history"]) - 1
    assert doc["config"]["cycle"] == "w_cycle"
    assert rep["work_units"] > 0


def test_solve_non_convergence_exit_code(tmp_path):
    code, _ = run(tmp_path, "solve", "--n", "16", "--eps", "1e-300")
    assert code == 1


def test_fmg_report(tmp_path):
    code, out = run(tmp_path, "fmg", "--n", "32")
    doc = json.loads((out / "fmg.json").read_text())
    assert code == 0
    assert doc["algebraic_to_discretization_ratio"] <= 2.0
    assert 20 < doc["work_nonzeros_per_unknown"] < 40


def test_diagnose_report(tmp_path):
    code, out = run(tmp_path, "diagnose", "--n", "16", "--format", "csv")
    assert code == 0
    with open(out / "diagnose_smoothness.csv") as fh:
        rows = {r["vector"]: r for r in csv.DictReader(fh)}
    assert set(rows) == {"lowest_mode", "highest_mode", "rough_guess"}
    assert float(rows["highest_mode"]["m_weak"]) == pytest.approx(1.0, abs=1e-10)
    summary = (out / "diagnose_summary.csv").read_text()
    assert "identity_audit.failed,0" in summary
    assert "saturation.fit.k," in summary


def test_unwritable_output(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["snapshot", "--out", str(blocker / "sub")]) == 2
    assert "unwritable" in capsys.readouterr().err


def test_invalid_configuration(tmp_path, capsys):
    assert main(["solve", "--n", "24", "--coarsest-n", "5", "--out", str(tmp_path)]) == 2
    assert "non-nested" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "varmg", "snapshot", "--n", "8", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "wall time" in proc.stderr and proc.stdout == ""
