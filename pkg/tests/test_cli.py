import pytest

from cfrelay import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_describe_defaults(capsys):
    code, out, _ = run(capsys, "describe")
    assert code == 0
    assert "num_aps = 200" in out and "antennas_per_ap = 3" in out
    assert "noise_power_w = 6.36" in out


def test_describe_override_noise_figure(capsys):
    code, out, _ = run(capsys, "describe", "--set", "noise_figure_db=0")
    line = [l for l in out.splitlines() if l.startswith("noise_power_w")][0]
    assert float(line.split("=")[1]) == pytest.approx(20e6 * 1.381e-23 * 290, rel=1e-6)


def test_malformed_config(capsys, tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text("num_aps = 3\nnum_pairs = = 2\n")
    code, _, err = run(capsys, "describe", "--config", str(p))
    assert code == 1 and "line 2" in err


def test_config_file_applied(capsys, tmp_path):
    p = tmp_path / "c.toml"
    p.write_text("num_aps = 12\n")
    code, out, _ = run(capsys, "describe", "--config", str(p), "--set", "num_pairs=3",
                       "--set", "pilot_symbols=6")
    assert code == 0 and "num_aps = 12" in out and "num_pairs = 3" in out


@pytest.mark.parametrize("argv", [
    [], ["bogus"], ["describe", "--set", "nokey=1"], ["figures", "fig9"],
    ["scaling", "--scenario", "A", "--alpha", "-1"], ["figures", "custom", "--sweep", "num_aps"],
    ["se-exact", "--jobs", "0"],
])
def test_usage_errors(capsys, argv):
    assert run(capsys, *argv)[0] == 1


def test_se_exact(capsys):
    code, out, _ = run(capsys, "se-exact", "--set", "num_aps=20")
    lines = out.splitlines()
    assert code == 0 and lines[0].startswith("pair,") and lines[-1].startswith("sum,")
    assert len(lines) == 1 + 5 + 1


def test_se_mc(capsys):
    code, out, _ = run(capsys, "se-mc", "--set", "num_aps=10", "--realizations", "100")
    assert code == 0
    header, row = out.splitlines()
    assert header == "realizations,closed_form_sum_se,mc_sum_se,mc_std_error,z_score"
    assert row.startswith("100,")


def test_scaling(capsys):
    code, out, _ = run(capsys, "scaling", "--scenario", "B", "--beta", "1", "--gamma", "1",
                       "--aps", "10,20")
    lines = out.splitlines()
    assert code == 0 and len(lines) == 3 and lines[1].startswith("10,")
    assert lines[1].endswith(",finite")


def test_optimize(capsys):
    code, out, err = run(capsys, "optimize", "--set", "num_aps=10", "--set", "num_pairs=1",
                         "--set", "pilot_symbols=2", "--max-iter", "3")
    assert code == 0 and "eta_tilde_A" in out and "sum_se" in out
    assert err.strip()


def test_figures_to_file(capsys, tmp_path):
    out = tmp_path / "t.csv"
    argv = ["figures", "custom", "--sweep", "num_aps=4,6", "--no-mc", "--set", "num_pairs=1",
            "--set", "pilot_symbols=2", "--out", str(out)]
    assert run(capsys, *argv)[0] == 0
    first = out.read_text()
    assert run(capsys, *argv)[0] == 0
    assert out.read_text() == first and first.count("\n") == 3


def test_numerical_failure_exit_code(capsys, monkeypatch):
    from cfrelay.gp import GpNotConverged

    def boom(*a, **k):
        raise GpNotConverged("no progress", None)

    monkeypatch.setattr(cli, "run_algorithm1", boom)
    code, _, err = run(capsys, "optimize", "--set", "num_aps=5")
    assert code == 2 and "numerical" in err


def test_module_entry_point():
    import subprocess
    import sys
    r = subprocess.run([sys.executable, "-m", "cfrelay", "describe"], capture_output=True, text=True)
    assert r.returncode == 0 and "prelog" in r.stdout
