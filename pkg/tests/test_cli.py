from kronbeam.cli import main
from kronbeam.harness import read_results_csv


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


FAST_ARGS = ("--set", "schemes=mmse,dynamic,egc",)


def test_run_prints_all_schemes(capsys):
    code, out, _ = run_cli(capsys, "run", "--seed", "5")
    assert code == 0
    for scheme in ("mmse", "exhaustive", "dynamic", "los", "successive", "egc"):
        assert scheme in out
    assert "sum rate" in out


def test_run_deterministic_stdout(capsys):
    code1, out1, _ = run_cli(capsys, "run", "--seed", "42", *FAST_ARGS)
    code2, out2, _ = run_cli(capsys, "run", "--seed", "42", *FAST_ARGS)
    assert code1 == code2 == 0
    assert out1 == out2


def test_run_set_overrides_round_trip(capsys):
    code, out, _ = run_cli(capsys, "run", "--set", "K=4", "--set", "N=16", *FAST_ARGS)
    assert code == 0
    assert "N=16" in out and "K=4" in out


def test_run_with_config_file(tmp_path, capsys):
    cfg = tmp_path / "sim.cfg"
    cfg.write_text("K = 2\nsnr_dB = 15  # mid range\nschemes = egc\n")
    code, out, _ = run_cli(capsys, "run", "--config", str(cfg))
    assert code == 0
    assert "K=2" in out and "snr_dB=15" in out and "egc" in out
    # flag overrides beat the file
    code, out, _ = run_cli(capsys, "run", "--config", str(cfg), "--set", "K=3")
    assert code == 0
    assert "K=3" in out


def test_unknown_key_is_config_error(capsys):
    code, _, err = run_cli(capsys, "run", "--set", "not_a_key=7")
    assert code == 2
    assert "not_a_key" in err


def test_sweep_from_overrides(tmp_path, capsys):
    out = tmp_path / "s.csv"
    args = ("sweep", "--set", "axis=snr_dB", "--set", "values=0,10",
            "--set", "trials=2", *FAST_ARGS, "--out", str(out))
    code, _, _ = run_cli(capsys, *args)
    assert code == 0
    rows = read_results_csv(out)
    assert {r.axis_value for r in rows} == {0.0, 10.0}
    # re-run equality
    out2 = tmp_path / "s2.csv"
    code, _, _ = run_cli(capsys, *args[:-1], str(out2))
    assert code == 0
    assert out.read_text().splitlines()[1:] == out2.read_text().splitlines()[1:]


def test_sweep_requires_axis(capsys):
    code, _, err = run_cli(capsys, "sweep", "--set", "values=0,10")
    assert code == 2
    assert "axis" in err


def test_figures_fig3_axis(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "figures", "--which", "fig3", "--trials", "1",
                           *FAST_ARGS, "--out", str(tmp_path))
    assert code == 0
    rows = read_results_csv(tmp_path / "fig3.csv")
    values = sorted({r.axis_value for r in rows})
    assert values == [float(v) for v in range(0, 45, 5)]
    assert all(r.axis_name == "snr_dB" for r in rows)


def test_figures_missing_out_dir(capsys):
    code, _, err = run_cli(capsys, "figures", "--which", "fig3",
                           "--out", "/no/such/dir")
    assert code == 2
    assert "/no/such/dir" in err


def test_figures_json_format(tmp_path, capsys):
    code, _, _ = run_cli(capsys, "figures", "--which", "fig6", "--trials", "1",
                         "--format", "json", *FAST_ARGS, "--out", str(tmp_path))
    assert code == 0
    assert (tmp_path / "fig6.json").exists()


def test_verify_passes_clean(capsys):
    code, out, _ = run_cli(capsys, "verify", "--trials", "40")
    assert code == 0
    for suite in ("reconstruction", "permutation", "nulling", "dominance", "rank_condition"):
        assert f"PASS  {suite}" in out


def test_verify_corrupt_nulling_fails(capsys):
    code, out, _ = run_cli(capsys, "verify", "--trials", "40", "--corrupt", "nulling")
    assert code == 1
    assert "FAIL  nulling" in out


def test_verify_rank_sweep_only(capsys):
    code, out, _ = run_cli(capsys, "verify", "--rank-sweep", "--trials", "50")
    assert code == 0
    assert "rank_condition" in out and "reconstruction" not in out


def test_console_script_entry_point():
    import subprocess
    import sys
    proc = subprocess.run(
        [sys.executable, "-m", "kronbeam.cli", "run", "--seed", "3",
         "--set", "schemes=egc"],
        capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0
    assert "egc" in proc.stdout
