"""Command-line front end: config parsing, precedence, CSV and manifest
output, exit codes, and the built-in selftest."""
import json
import math
import shutil
import subprocess

import numpy as np
import pytest

from levyfourier import cli
from levyfourier.cli import (RunConfig, _parse_irange, _parse_times, build_parser, main,
                             parse_config_file, resolve_config)


def test_parse_irange_forms():
    assert _parse_irange("7..12") == (7, 8, 9, 10, 11, 12)
    assert _parse_irange("11") == (11,)
    assert _parse_irange("7,9,11") == (7, 9, 11)
    assert _parse_irange(" 8..9 ") == (8, 9)


def test_parse_times():
    assert _parse_times("1") == (1.0,)
    assert _parse_times("1,2,3") == (1.0, 2.0, 3.0)
    assert _parse_times("0.5,") == (0.5,)


def test_runconfig_validation():
    with pytest.raises(ValueError, match="unknown model"):
        RunConfig(model="gauss")
    with pytest.raises(ValueError, match="needs --gamma"):
        RunConfig(model="custom", mu_expr="np.exp(-y)")
    with pytest.raises(ValueError, match="needs --mu"):
        RunConfig(model="custom", gamma=1)
    with pytest.raises(ValueError, match="at least one time"):
        RunConfig(t_values=())
    with pytest.raises(ValueError, match="positive and finite"):
        RunConfig(t_values=(1.0, 0.0))
    with pytest.raises(ValueError, match="positive and finite"):
        RunConfig(t_values=(math.inf,))
    with pytest.raises(ValueError, match="at least one grid exponent"):
        RunConfig(exponent_i=())
    with pytest.raises(ValueError, match="7..14"):
        RunConfig(exponent_i=(6,))
    with pytest.raises(ValueError, match="7..14"):
        RunConfig(exponent_i=(11, 15))
    with pytest.raises(ValueError, match="0 < xl < xu"):
        RunConfig(x_l=5.0, x_u=2.0)
    with pytest.raises(ValueError, match="reps"):
        RunConfig(reps=0)


def test_parse_config_file_reads_flat_keys(tmp_path):
    cfg = tmp_path / "study.cfg"
    cfg.write_text("# density study\n"
                   "schema_version = 1\n"
                   "\n"
                   "model=nig\n"
                   "i_range = 7..9   # grid sizes\n",
                   encoding="utf-8")
    assert parse_config_file(cfg) == {"schema_version": "1", "model": "nig",
                                      "i_range": "7..9"}


def test_parse_config_file_rejects_bad_input(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("schema_version=1\njust a line\n", encoding="utf-8")
    with pytest.raises(ValueError, match="bad.cfg:2: expected key=value"):
        parse_config_file(bad)
    bad.write_text("schema_version=1\ncolor=red\n", encoding="utf-8")
    with pytest.raises(ValueError, match="unknown config key 'color'"):
        parse_config_file(bad)
    bad.write_text("model=vg\n", encoding="utf-8")
    with pytest.raises(ValueError, match="schema_version"):
        parse_config_file(bad)


def test_resolve_config_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("schema_version=1\nxl=1.5\nt=2,3\nreps=9\n", encoding="utf-8")
    args = build_parser().parse_args(["solve", "--config", str(cfg), "--xu", "7"])
    config = resolve_config(args)
    assert config.x_l == 1.5          # file beats default
    assert config.x_u == 7.0          # flag beats file
    assert config.t_values == (2.0, 3.0)
    assert config.reps == 9
    assert config.d == 1.0            # untouched default
    assert config.model == "vg"


def test_solve_writes_csv_and_manifest(tmp_path, capsys):
    rc = main(["solve", "--i-range", "7", "--t", "1", "--out", str(tmp_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "wrote" in out and "max_abs_err=" in out

    lines = (tmp_path / "solve_vg_i7_t1.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "x,p_num,p_exact,abs_err"
    assert len(lines) == 1 + 64       # 2N rows, N = 2^(7-2)
    for line in lines[1:]:
        toks = line.split(",")
        assert len(toks) == 4
        for tok in toks:
            # %.17g survives a float round trip unchanged
            assert "%.17g" % float(tok) == tok
        x, p, pe, err = map(float, toks)
        assert err == abs(p - pe)
    xs = np.array([float(ln.split(",")[0]) for ln in lines[1:]])
    assert np.array_equal(xs, np.arange(-31, 33) * (5.0 / 32.0))

    man = json.loads((tmp_path / "solve_vg_manifest.json").read_text(encoding="utf-8"))
    assert man["schema_version"] == 1
    assert isinstance(man["package_version"], str)
    assert man["command"] == "solve"
    assert man["config"]["model"] == "vg"
    assert man["config"]["t_values"] == [1.0]
    assert man["config"]["exponent_i"] == [7]
    (entry,) = man["runs"]
    need = {"model", "gamma", "n", "n_gamma", "m", "x_l", "x_u", "d", "h_tilde",
            "h_hat", "zeta0_rule", "zeta0_low", "zeta0_high", "h_de_rule", "h_de",
            "de_beta", "r_rule", "m_table_rule", "t", "epsilon", "b",
            "use_exact_exponent", "i", "file"}
    assert need <= set(entry)
    assert entry["i"] == 7 and entry["file"] == "solve_vg_i7_t1.csv"
    assert entry["n"] == 32 and entry["m"] == 128
    assert entry["t"] == 1.0 and entry["b"] == 20.0 and entry["epsilon"] == 1e-10


def test_solve_custom_model_has_no_exact_columns(tmp_path):
    rc = main(["solve", "--model", "custom", "--gamma", "1", "--mu", "np.exp(-y)",
               "--i-range", "7", "--t", "1", "--out", str(tmp_path)])
    assert rc == 0
    lines = (tmp_path / "solve_custom_i7_t1.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "x,p_num"
    assert all(len(ln.split(",")) == 2 for ln in lines[1:])
    man = json.loads((tmp_path / "solve_custom_manifest.json").read_text(encoding="utf-8"))
    assert man["runs"][0]["model"] == "custom"


def test_solve_output_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["solve", "--i-range", "8", "--t", "1.5",
                     "--out", str(out)]) == 0
    fname = "solve_vg_i8_t1.5.csv"
    assert (a / fname).read_bytes() == (b / fname).read_bytes()


def test_converge_argument_gates(tmp_path, capsys):
    rc = main(["converge", "--i-range", "7", "--out", str(tmp_path)])
    assert rc == 2
    assert "error: converge needs at least 3 grid exponents" in capsys.readouterr().err
    rc = main(["converge", "--i-range", "7..9", "--model", "custom", "--gamma", "1",
               "--mu", "np.exp(-y)", "--out", str(tmp_path)])
    assert rc == 2
    assert "exact density" in capsys.readouterr().err


def test_converge_writes_table_and_slopes(tmp_path, capsys):
    rc = main(["converge", "--i-range", "7..9", "--t", "1", "--out", str(tmp_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "window-error slope vs sqrt(M)" in out

    lines = (tmp_path / "converge_vg.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "M,max_err_full_t1,max_err_window_t1"
    rows = [list(map(float, ln.split(","))) for ln in lines[1:]]
    assert [r[0] for r in rows] == [128.0, 256.0, 512.0]
    window = [r[2] for r in rows]
    assert window[2] < window[0]

    man = json.loads((tmp_path / "converge_vg_manifest.json").read_text(encoding="utf-8"))
    fit = man["slopes"]["t=1"]
    assert fit["slope_vs_sqrt_m"] < 0
    assert 0.0 < fit["r_squared"] <= 1.0
    assert len(man["runs"]) == 3
    assert [e["i"] for e in man["runs"]] == [7, 8, 9]


def test_bench_writes_table_and_warns_on_few_reps(tmp_path):
    with pytest.warns(UserWarning, match="reps = 2 < 5"):
        rc = main(["bench", "--i-range", "7,8", "--reps", "2", "--t", "1",
                   "--out", str(tmp_path)])
    assert rc == 0
    lines = (tmp_path / "bench_vg.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "M,step1_s,step2_s,step3_s,total_s,total_per_mlog2m"
    rows = [list(map(float, ln.split(","))) for ln in lines[1:]]
    assert [r[0] for r in rows] == [128.0, 256.0]
    for r in rows:
        assert all(v >= 0.0 for v in r[1:])
        assert r[5] == pytest.approx(r[4] / (r[0] * math.log2(r[0])), rel=1e-12)
    man = json.loads((tmp_path / "bench_vg_manifest.json").read_text(encoding="utf-8"))
    assert man["reps"] == 2 and man["t"] == 1.0
    assert man["normalized_spread"] >= 1.0


def test_selftest_passes(capsys):
    assert main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert "selftest passed" in out
    for name in ("frft-vs-direct-sum", "nufft-vs-direct-sum",
                 "kernel-table-vs-quadrature", "de-ft-vs-closed-form",
                 "exponent-vg-closed-form", "exponent-nig-closed-form"):
        assert name in out


def test_selftest_reports_broken_component(monkeypatch, capsys):
    def boom(*args, **kwargs):
        raise RuntimeError("table corrupted")

    monkeypatch.setattr(cli, "kernel_table", boom)
    assert main(["selftest"]) == 1
    out = capsys.readouterr().out
    assert "FAIL" in out and "selftest FAILED" in out
    assert "raised: table corrupted" in out


def test_main_reports_config_errors_on_stderr(tmp_path, capsys):
    rc = main(["solve", "--t", "0", "--out", str(tmp_path)])
    assert rc == 2
    assert capsys.readouterr().err.startswith("error:")
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("schema_version=1\ncolor=red\n", encoding="utf-8")
    rc = main(["solve", "--config", str(cfg), "--out", str(tmp_path)])
    assert rc == 2
    assert "unknown config key" in capsys.readouterr().err


def test_console_script_runs(tmp_path):
    exe = shutil.which("levyfourier")
    if exe is None:
        pytest.skip("console script not on PATH")
    proc = subprocess.run([exe, "solve", "--i-range", "7", "--t", "1",
                           "--out", str(tmp_path)],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "solve_vg_i7_t1.csv").exists()
