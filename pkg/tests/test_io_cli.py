import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from bvlab import cli, io, presets
from bvlab.core import ConfigError, PhaseGrid
from bvlab.coupling import run

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def test_snapshot_round_trip_is_bit_exact(tmp_path):
    rng = np.random.default_rng(1)
    g = PhaseGrid(-1.0 / 3, 2.0, 7, -np.pi, np.pi, 5)
    u = rng.normal(size=7) * 1e-300
    f = rng.random((7, 5)) / 3.0
    f[0, 0] = 5e-324
    p = tmp_path / "s.txt"
    io.write_snapshot(p, u, f, g, 0.1 / 3, 0.7)
    s = io.read_snapshot(p)
    assert s.grid == g and s.epsilon == 0.1 / 3 and s.t == 0.7
    assert np.array_equal(s.u, u) and np.array_equal(s.f, f)
    head = p.read_text().splitlines()[0].split()
    assert head[:3] == ["BVLAB1", "7", "5"]
    assert len(p.read_text().splitlines()) == 1 + 1 + 7


def test_snapshot_rejects_garbage(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("BVLAB1 4 4 0 1 0 1 0.1 0\n1 2 3\n")
    with pytest.raises(ValueError):
        io.read_snapshot(p)
    p.write_text("hello\n")
    with pytest.raises(ValueError):
        io.read_snapshot(p)


def test_snapshot_name():
    assert io.snapshot_name(3, 0.5) == "snapshot_003_t0.500000.txt"


def test_csv_round_trip(tmp_path):
    p = tmp_path / "a.csv"
    io.write_csv(p, ["a", "b", "c"], [[1, 0.1, "x"], [2, 1e-300, True]])
    h, rows = io.read_csv(p)
    assert h == ["a", "b", "c"]
    assert rows[0] == [1.0, 0.1, "x"] and rows[1][1] == 1e-300 and rows[1][2] == "true"


def test_parse_and_precedence(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("# comment\nepsilon = 0.1\ncfl = 0.3  # trailing\n\nnx = 64\n")
    st = io.load_settings(p, ["cfl=0.2", "u_width=4eps"])
    assert st.sim.epsilon == 0.1 and st.sim.cfl == 0.2 and st.sim.grid.nx == 64
    assert st.sim.initial.u_width_eps == 4.0
    assert st.origin["epsilon"] == 2 and st.origin["cfl"] == "override 1"


@pytest.mark.parametrize("text,line,key", [
    ("epsilon = 0.1\nbogus = 1\n", 2, "bogus"),
    ("epsilon = 0.1\nEpsilon = 1\n", 2, "Epsilon"),
    ("cfl = 0.3\ncfl = 0.4\n", 2, "cfl"),
    ("nx = 12.5\n", 1, "nx"),
    ("\n\ncfl = 1.5\n", 3, "cfl"),
    ("epsilon\n", 1, "epsilon"),
    ("eps_list = 0.05, 0.1\n", 1, "eps_list"),
    ("l0 = 20\n", 1, "l0"),
])
def test_config_errors_are_line_precise(tmp_path, text, line, key):
    p = tmp_path / "c.txt"
    p.write_text(text)
    with pytest.raises(ConfigError) as err:
        io.load_settings(p)
    assert err.value.line == line and err.value.key == key
    assert str(err.value).startswith(f"line {line}: {key}")


def test_unknown_override():
    with pytest.raises(ConfigError) as err:
        io.load_settings(None, ["foo=1"])
    assert str(err.value).startswith("override 1: foo")


def test_dump_round_trips(tmp_path):
    st = io.load_settings(None, ["epsilon=0.025", "u_width=3eps", "eps_list=0.1,0.05",
                                 "output_times=0.25,0.5", "run_name=abc"])
    p = tmp_path / "d.txt"
    p.write_text(io.dump_settings(st))
    back = io.load_settings(p)
    assert back.sim == st.sim and back.eps_list == st.eps_list and back.run_name == "abc"
    assert io.dump_settings(back) == io.dump_settings(st)


@pytest.mark.parametrize("name", ["shock", "coupled", "energy_identity", "smooth"])
def test_shipped_configs_match_presets(name):
    st = io.load_settings(CONFIGS / f"{name}.txt")
    assert st.sim == presets.PRESETS[name]()


def test_output_root(monkeypatch, tmp_path):
    monkeypatch.setenv("BVLAB_OUT", str(tmp_path))
    assert io.output_root() == tmp_path
    monkeypatch.delenv("BVLAB_OUT")
    assert io.output_root() == Path("bvlab_out")


def test_write_run_layout(tmp_path):
    st = io.load_settings(None, ["t_final=0.2", "output_times=0.1", "nx=64", "epsilon=0.1"])
    traj = run(st.sim)
    d = io.write_run(tmp_path / "r", st, traj)
    names = sorted(p.name for p in d.iterdir())
    assert names[:2] == ["config.txt", "diagnostics.csv"]
    snaps = [n for n in names if n.startswith("snapshot_")]
    assert len(snaps) == 3 and snaps[-1].endswith("t0.200000.txt")
    h, rows = io.read_csv(d / "diagnostics.csv")
    assert tuple(h) == traj.records[0].FIELDS and len(rows) == len(traj.records)


# CLI ---------------------------------------------------------------------

@pytest.fixture
def out(monkeypatch, tmp_path):
    monkeypatch.setenv("BVLAB_OUT", str(tmp_path))
    return tmp_path


def test_cli_run_and_report(out, capsys):
    assert cli.main(["run", "t_final=0.1", "nx=64", "run_name=a"]) == 0
    assert (out / "a" / "summary.txt").exists()
    assert cli.main(["report", "run_name=a"]) == 0
    for name in ("energy.dat", "dissipation.dat", "conserved.dat", "report_summary.txt"):
        assert (out / "a" / name).exists()
    assert "E(t)=" in capsys.readouterr().out


def test_cli_bad_config(out, tmp_path, capsys):
    p = tmp_path / "bad.txt"
    p.write_text("epsilon = 0.1\ncfl = 2\n")
    assert cli.main(["run", "--config", str(p)]) == 2
    err = capsys.readouterr().err
    assert "line 2: cfl" in err and str(p) in err
    assert cli.main(["run", "cfl=1.5"]) == 2
    assert "override 1: cfl" in capsys.readouterr().err
    assert cli.main(["run", "--config", str(tmp_path / "missing.txt")]) == 2
    assert cli.main(["report", "--dir", str(tmp_path / "nothing")]) == 2
    assert cli.main(["verify", "bogus=1"]) == 2


def test_cli_report_malformed(out, tmp_path):
    d = tmp_path / "m"
    d.mkdir()
    (d / "diagnostics.csv").write_text("a,b\n1,2\n")
    assert cli.main(["report", "--dir", str(d)]) == 2


def test_cli_blowup_exit_3(out, monkeypatch):
    import bvlab.coupling as cp

    real = cp.burgers_step

    def bad(u, s, eps, dt, grid, step=None):
        return real(u, s * np.nan if step == 2 else s, eps, dt, grid, step=step)

    monkeypatch.setattr(cp, "burgers_step", bad)
    assert cli.main(["run", "t_final=0.2", "nx=64", "run_name=b"]) == 3
    # the last good state is on disk
    assert (out / "b" / "diagnostics.csv").exists()


def test_cli_partial_sweep_exit_4(out):
    args = ["sweep", "--config", str(CONFIGS / "coupled.txt"), "t_final=0.2", "nv=16",
            "eps_list=0.1,0.08", "f_x0=-2.5", "f_cut=3", "run_name=s"]
    assert cli.main(args) == 4
    tables = sorted(p.name for p in (out / "s").glob("*.csv"))
    assert any(n.startswith("distances_") for n in tables)


def test_cli_sweep_ok_and_report(out):
    assert cli.main(["sweep", "--config", str(CONFIGS / "shock.txt"), "t_final=0.2",
                     "eps_list=0.1,0.05", "run_name=s"]) == 0
    assert cli.main(["report", "--dir", str(out / "s")]) == 0
    assert list((out / "s").glob("distances_*.dat"))


def test_console_script_entry(out):
    r = subprocess.run([sys.executable, "-m", "bvlab.cli", "run", "t_final=0.0", "nx=32"],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    r = subprocess.run([sys.executable, "-m", "bvlab.cli", "run", "wat=1"], capture_output=True, text=True)
    assert r.returncode == 2
