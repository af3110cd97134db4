import csv
import io
from pathlib import Path

import pytest

from darcysplit.cli import main
from darcysplit.mesh import read_mesh

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _write(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


SMALL_ANNULUS = """
[domain]
type = annulus
target_h = {h}
levels = 2
[physics]
gamma = 2
alpha0 = 1
[data]
{data}
[run]
tol = 1e-10
"""


def test_solve_zero_preset(tmp_path, capsys):
    out = tmp_path / "zero.vtk"
    assert main(["solve", "--config", str(CONFIGS / "zero.ini"), "-o", str(out)]) == 0
    stdout = capsys.readouterr().out
    assert "min_q             1.00000000e+00" in stdout
    assert "velocity_l2       0.00000000e+00" in stdout
    text = out.read_text()
    assert text.startswith("# vtk DataFile Version 2.0\n")
    assert "DATASET UNSTRUCTURED_GRID" in text
    assert "SCALARS q double 1" in text and "SCALARS p double 1" in text
    assert "VECTORS u double" in text
    cells = text.split("CELL_TYPES ")[1].splitlines()
    assert set(cells[1 : 1 + int(cells[0])]) == {"5"}


def test_check_data_exit_codes(tmp_path, capsys):
    assert main(["check-data", "--config", str(CONFIGS / "annulus_g0.ini")]) == 0
    assert main(["check-data", "--config", str(CONFIGS / "explicit_outflow.ini")]) == 2
    err = capsys.readouterr().err
    assert "-div f >= 0" in err and " at (" in err
    cfg = _write(tmp_path, SMALL_ANNULUS.format(h=0.4, data="f_x = 0\nf_y = 0\ng = -1"))
    assert main(["check-data", "--config", cfg]) == 2


def test_solve_positivity_failure_exit_3(tmp_path):
    cfg = _write(tmp_path, SMALL_ANNULUS.format(h=0.5, data="preset = annulus_radial\ncase = g0"))
    assert main(["solve", "--config", cfg, "-o", str(tmp_path / "x.vtk")]) == 3


def test_sign_violation_and_override(tmp_path):
    data = "f_x = x\nf_y = y\ndivf = 2\ng = 0"
    cfg = _write(tmp_path, SMALL_ANNULUS.format(h=0.5, data=data))
    assert main(["solve", "--config", cfg, "-o", str(tmp_path / "x.vtk")]) == 2
    code = main(["solve", "--config", cfg, "--override-sign-checks", "-o", str(tmp_path / "x.vtk")])
    assert code in (0, 3)


def test_nonconvergence_exit_4(tmp_path):
    data = "preset = annulus_radial\ncase = gpos"
    cfg = _write(tmp_path, SMALL_ANNULUS.format(h=0.5, data=data).replace("tol = 1e-10", "tol = 1e-30\nsolver = gmres"))
    assert main(["solve", "--config", cfg, "-o", str(tmp_path / "x.vtk")]) == 4


@pytest.mark.parametrize(
    "text",
    [
        "[domain]\ntype = disc\ntarget_h = 1\n[data]\npreset = zero\n",
        "[domain]\ntype = annulus\ntarget_h = 1\n[data]\npreset = nope\n",
        "[domain]\ntype = annulus\ntarget_h = 1\n[data]\npreset = zero\ng = 1\n",
        "[domain]\ntype = annulus\ntarget_h = 1\n[data]\nf_x = k*x\nf_y = 0\ng = 0\n[physics]\ngamma=1\nalpha0=1\n",
        "[domain]\ntype = annulus\ntarget_h = 1\n[data]\nf_x = (x\nf_y = 0\ng = 0\n",
        "[domain]\ntype = annulus\n[data]\npreset = zero\n",
        "[extras]\n",
        "not an ini file",
    ],
)
def test_config_errors_exit_1(tmp_path, text, capsys):
    assert main(["check-data", "--config", _write(tmp_path, text)]) == 1
    assert "error" in capsys.readouterr().err


def test_usage_errors_exit_1(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["bogus", "--config", "x"])
    assert exc.value.code == 1
    assert main(["solve", "--config", str(tmp_path / "missing.ini")]) == 1
    assert main(["solve", "--config", str(CONFIGS / "zero.ini"), "--workers", "0"]) == 1


def test_mesh_gen(tmp_path):
    out = tmp_path / "mesh.txt"
    assert main(["mesh-gen", "--config", str(CONFIGS / "zero.ini"), "-o", str(out)]) == 0
    assert read_mesh(out).n_vertices > 0


def test_positivity_study_csv_is_deterministic(tmp_path):
    cfg = _write(tmp_path, SMALL_ANNULUS.format(h=0.5, data="preset = annulus_radial\ncase = g0"))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["study-positivity", "--config", cfg, "-o", str(a)]) == 0
    assert main(["study-positivity", "--config", cfg, "-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    rows = list(csv.reader(io.StringIO(a.read_text())))
    assert rows[0] == ["level", "ndofs", "h", "min_q", "status"]
    assert len(rows) == 3
    mantissa = rows[1][3].split("e")[0].lstrip("-")
    assert len(mantissa.replace(".", "")) == 9


def test_convergence_study_csv(tmp_path):
    text = (CONFIGS / "square_manufactured.ini").read_text()
    text = text.replace("target_h = 0.04", "target_h = 0.1").replace("levels = 4", "levels = 2")
    cfg = _write(tmp_path, text)
    out = tmp_path / "conv.csv"
    assert main(["study-convergence", "--config", cfg, "-o", str(out)]) == 0
    rows = list(csv.reader(io.StringIO(out.read_text())))
    assert rows[0][:5] == ["level", "ndofs", "h", "h1semi_q", "l2_u"]
    assert rows[-1][0] == "rate"
    assert len(rows) == 4


def test_convergence_study_needs_exact(tmp_path):
    cfg = _write(tmp_path, SMALL_ANNULUS.format(h=0.5, data="preset = annulus_radial"))
    assert main(["study-convergence", "--config", cfg]) == 1
