import csv
import io
import json

import numpy as np
import pytest

from bvpcont.catalog import CATALOG, preset_config
from bvpcont.cli import main
from bvpcont.config import ConfigError, family_from_dict, load_config


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_solve_to_stdout(capsys):
    code, out, _ = run(capsys, "solve", "--preset", "line", "--grid", "64")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["t", "z_d0", "z_d1"]
    last = [float(v) for v in rows[-1]]
    assert last[0] == 1.0
    assert last[1] == pytest.approx(1.0, abs=1e-12)
    assert last[2] == pytest.approx(1.0, abs=1e-12)


def test_solve_multicomponent_header(capsys):
    code, out, _ = run(capsys, "solve", "--preset", "rotation", "--grid", "32")
    assert code == 0
    assert out.splitlines()[0] == "t,z1_d0,z1_d1,z1_d2,z2_d0,z2_d1,z2_d2"


def test_solve_writes_file(tmp_path, capsys):
    code, _, err = run(capsys, "solve", "--preset", "sin", "--out", str(tmp_path), "--grid", "32")
    assert code == 0
    path = tmp_path / "sin_solve.csv"
    rows = list(csv.reader(path.open()))
    assert float(rows[-1][1]) == pytest.approx(np.sin(1.0), abs=1e-10)
    assert "ode_residual" in err


def test_degenerate_exit_code(capsys):
    code, _, err = run(capsys, "solve", "--preset", "dirichlet-eigen")
    assert code == 2
    assert "degenerate" in err
    code, _, _ = run(capsys, "sweep", "--preset", "eigen-limit", "--grid", "256")
    assert code == 2


def test_config_errors(tmp_path, capsys):
    assert run(capsys, "solve", "--preset", "no-such-problem")[0] == 1
    assert run(capsys, "solve")[0] == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "solve", "--config", str(bad))[0] == 1
    bad.write_text(json.dumps({"name": "x", "interval": [0, 1]}))
    assert run(capsys, "solve", "--config", str(bad))[0] == 1
    with pytest.raises(SystemExit) as info:
        main(["solve", "--eps", "abc"])
    assert info.value.code == 1


def test_config_file_round_trip(tmp_path, capsys):
    cfg = preset_config("k0-eps")
    path = tmp_path / "k0.json"
    path.write_text(json.dumps(cfg))
    assert load_config(path) == cfg
    a = run(capsys, "solve", "--config", str(path), "--eps", "0.125", "--grid", "64")[1]
    b = run(capsys, "solve", "--preset", "k0-eps", "--eps", "0.125", "--grid", "64")[1]
    assert a == b


def test_sweep_is_deterministic(tmp_path, capsys):
    args = ["sweep", "--preset", "f-shift", "--grid", "256"]
    run(capsys, *args, "--out", str(tmp_path / "a"))
    run(capsys, *args, "--out", str(tmp_path / "b"), "--jobs", "2")
    a = (tmp_path / "a" / "f-shift_sweep.csv").read_bytes()
    b = (tmp_path / "b" / "f-shift_sweep.csv").read_bytes()
    assert a == b
    rows = list(csv.reader(io.StringIO(a.decode())))
    assert rows[0] == ["eps", "err", "d_n", "ratio", "within_bounds"]
    footer = {r[0]: r[1] for r in rows if r and r[0] in ("verdict", "consistent", "condition_I")}
    assert footer == {"verdict": "continuous", "consistent": "true", "condition_I": "true"}


def test_check_writes_table(tmp_path, capsys):
    code, _, _ = run(capsys, "check", "--preset", "divided-difference", "--out", str(tmp_path), "--grid", "256")
    assert code == 0
    rows = {r[0]: r[1] for r in csv.reader((tmp_path / "divided-difference_check.csv").open())}
    assert rows["II"] == "false" and rows["d4"] == "false" and rows["I"] == "true"


def test_catalog_list(capsys):
    code, out, _ = run(capsys, "catalog", "list")
    assert code == 0
    names = [line.split()[0] for line in out.splitlines()]
    assert names == list(CATALOG)


def test_demo_appendix(capsys):
    code, out, _ = run(capsys, "demo-appendix", "--grid", "8")
    assert code == 0
    assert len(out.strip().splitlines()) == 9


def test_every_preset_builds():
    for name in CATALOG:
        fam = family_from_dict(preset_config(name))
        fam.system(0.0)
        fam.boundary_at(0.0)


def test_unknown_boundary_block():
    cfg = preset_config("line")
    cfg["boundary"] = {"q": ["0"]}
    with pytest.raises(ConfigError):
        family_from_dict(cfg)


@pytest.mark.parametrize("name", list(CATALOG))
def test_exit_code_per_catalog_entry(name, capsys):
    expected = 2 if name in ("dirichlet-eigen", "eigen-limit") else 0
    code, _, _ = run(capsys, "solve", "--preset", name, "--grid", "128")
    assert code == expected
