import os

import numpy as np
import pytest

from monobox import cli, svgplot


def run_cli(*argv):
    return cli.main(list(argv))


def read(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def test_run_trace_csv(tmp_path):
    out = tmp_path / "trace.csv"
    rc = run_cli("run", "--function", "square", "--eps", "0.05", "--p", "1",
                 "--true-error", "--trace-out", str(out))
    assert rc == 0
    lines = read(out).strip().splitlines()
    assert lines[0] == "t,evaluations,x_new,xi_t,true_error_p"
    first = lines[1].split(",")
    assert first[0] == "1" and first[1] == "2" and first[2] == ""
    assert float(first[3]) == 1.0
    # one record per state, certificate strictly above eps until the end
    xi = [float(l.split(",")[3]) for l in lines[1:]]
    assert all(x > 0.05 for x in xi[:-1]) and xi[-1] <= 0.05


def test_integrate_csv(tmp_path):
    out = tmp_path / "mc.csv"
    rc = run_cli("integrate", "--function", "identity", "--eps", "0.05",
                 "--seeds", "10", "--out", str(out))
    assert rc == 0
    lines = read(out).strip().splitlines()
    assert lines[0] == "seed,tau,evals,I_hat,abs_err,certificate"
    assert len(lines) == 11
    taus = {int(l.split(",")[1]) for l in lines[1:]}
    assert taus == {6}


def test_complexity_csv(tmp_path):
    out = tmp_path / "cx.csv"
    rc = run_cli("complexity", "--functions", "identity",
                 "--eps-grid", "0.25,0.125", "--out", str(out))
    assert rc == 0
    lines = read(out).strip().splitlines()
    assert lines[0] == "function,eps,p,constructive_n,oracle_total,oracle_per_box"
    row = lines[1].split(",")
    assert row[0] == "identity" and row[3] == "4" and row[4] == "4"


def test_rates_outputs(tmp_path):
    rc = run_cli("rates", "--functions", "square", "--algorithms",
                 "greedybox,trapezoid", "--budget-pows", "3:5",
                 "--out-dir", str(tmp_path))
    assert rc == 0
    csv = read(tmp_path / "rates.csv").strip().splitlines()
    assert csv[0].startswith("function,algorithm,budget_t")
    assert len(csv) == 1 + 2 * 3
    svg = read(tmp_path / "rates_square.svg")
    assert svg.startswith("<svg") and "greedybox" in svg


def test_certificates_contains_both_series(tmp_path):
    rc = run_cli("certificates", "--functions", "step_03", "--algorithms",
                 "greedybox", "--budget-pows", "3:5", "--out-dir", str(tmp_path))
    assert rc == 0
    svg = read(tmp_path / "certificates_step_03.svg")
    assert "greedybox certificate" in svg


def test_rates_with_gt_family_and_stochastic(tmp_path):
    rc = run_cli("rates", "--functions", "gt_family", "--algorithms",
                 "greedybox,stochastic", "--budget-pows", "5:7",
                 "--eps-grid", "0.1,0.05", "--seeds", "8",
                 "--out-dir", str(tmp_path))
    assert rc == 0
    rows = read(tmp_path / "rates.csv").strip().splitlines()[1:]
    algos = {r.split(",")[1] for r in rows}
    assert algos == {"greedybox", "stochastic"}


def test_svg_deterministic(tmp_path):
    series = [("a", [1, 10, 100], [1.0, 0.1, 0.01])]
    one = svgplot.loglog_chart(series, "t", "x", "y")
    two = svgplot.loglog_chart(series, "t", "x", "y")
    assert one == two
    golden = tmp_path / "c.svg"
    golden.write_text(one)
    assert read(golden) == svgplot.loglog_chart(series, "t", "x", "y")


def test_fig2_check_passes(capsys):
    assert run_cli("fig2", "--check") == 0
    out = capsys.readouterr().out
    assert "PASS" in out


def test_adversary_check_passes(capsys):
    assert run_cli("adversary", "--check", "--k-values", "1,2") == 0
    out = capsys.readouterr().out
    assert "k=2" in out and "PASS" in out


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "cfg.toml"
    cfg.write_text('function = "identity"\neps = 0.25\np = 1\n')
    out = tmp_path / "t.csv"
    rc = run_cli("run", "--config", str(cfg), "--trace-out", str(out))
    assert rc == 0
    assert len(read(out).strip().splitlines()) == 1 + 4  # tau = 4
    # flag overrides the config value
    rc = run_cli("run", "--config", str(cfg), "--eps", "0.5",
                 "--trace-out", str(out))
    assert rc == 0
    assert len(read(out).strip().splitlines()) == 1 + 2  # tau = 2


def test_custom_function_from_config(tmp_path):
    cfg = tmp_path / "cfg.toml"
    cfg.write_text(
        'eps = 0.2\n'
        '[function]\n'
        'breakpoints = [0.0, 0.5, 1.0]\n'
        'pieces = [{kind = "affine", c1 = 1.0}, {kind = "constant", c0 = 0.9}]\n'
        'values = [0.0, 0.5, 0.9]\n')
    rc = run_cli("run", "--config", str(cfg), "--function", "custom")
    assert rc == 0


def test_config_errors_exit_2(tmp_path):
    assert run_cli("run", "--function", "does_not_exist") == 2
    assert run_cli("rates", "--functions", "square", "--algorithms",
                   "quantum", "--out-dir", str(tmp_path)) == 2
    bad = tmp_path / "bad.toml"
    bad.write_text("function = [unclosed")
    assert run_cli("run", "--config", str(bad)) == 2


def test_measure_flag(tmp_path):
    out = tmp_path / "t.csv"
    rc = run_cli("run", "--function", "identity", "--eps", "0.25",
                 "--measure", "two_piece", "--trace-out", str(out))
    assert rc == 0
    lines = read(out).strip().splitlines()
    # first split lands at the conditional median 2/3, not at the midpoint
    assert float(lines[2].split(",")[2]) == pytest.approx(2.0 / 3.0, abs=1e-12)


def test_threads_env_respected(tmp_path, monkeypatch):
    monkeypatch.setenv("MONOBOX_THREADS", "1")
    rc = run_cli("rates", "--functions", "identity", "--algorithms",
                 "greedybox", "--budget-pows", "3:4", "--out-dir",
                 str(tmp_path))
    assert rc == 0
    rows = read(tmp_path / "rates.csv").strip().splitlines()[1:]
    assert len(rows) == 2
