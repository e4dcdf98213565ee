import csv
import json
import os
import subprocess
import sys

import pytest

from mfs_cauchy.cli import EXIT_CONFIG, EXIT_IO, EXIT_NUMERICAL, EXIT_OK, main
from mfs_cauchy.config import RunConfig, bundled_configs, load_config, parse_config
from mfs_cauchy.errors import ConfigError
from mfs_cauchy.reports import csv_text, format_float, json_text, write_outputs

SMALL = "\n".join([
    "geometry = disk",
    "M = 100",
    "N = 20",
    "R = 3.2",
    "delta = 0.05",
    "eval_points = 300",
])


def _write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# ------------------------------------------------------------------ config parsing

def test_bundled_configs_present():
    names = bundled_configs()
    for n in ("disk_5pct.cfg", "disk_table1.cfg", "disk_noise_sweep.cfg", "disk_NR_scan.cfg", "disk_M_sweep.cfg",
              "cassini_10pct.cfg", "annulus_dipole_exact.cfg", "annulus_dipole_5pct.cfg",
              "annulus_inverse_radial_5pct.cfg"):
        assert n in names
        load_config(n)


def test_parse_types_and_comments():
    cfg = parse_config("# comment\ngeometry = annulus  # inline\nR_in = 0.2\nsolution = \"dipole\"\n"
                       "deltas = [1e-3, 0.1]\nseeds = [1, 2]\nalpha = null\nR_values = [[3.2, 0.2], [4, 0.3]]\n")
    assert cfg.geometry == "annulus" and cfg.solution == "dipole"
    assert cfg.deltas == [1e-3, 0.1] and cfg.seeds == [1, 2] and cfg.alpha is None
    assert cfg.R_values == [[3.2, 0.2], [4.0, 0.3]]
    assert cfg.radii() == (3.2, 0.2)


@pytest.mark.parametrize("text,msg", [
    ("M = 10", "geometry"),
    ("geometry = sphere", "geometry"),
    ("geometry = disk\nM = ten", "integer"),
    ("geometry = disk\nM = 10.5", "integer"),
    ("geometry = disk\nfoo = 1", "unknown"),
    ("geometry = disk\nalpha_min = 0", "alpha_min"),
    ("geometry = annulus", "R_in"),
    ("geometry = cassini\ncassini_b = 0.5", "b > a"),
    ("geometry = disk\ndelta = -1", "delta"),
    ("geometry = disk\nmode = XY", "mode"),
    ("geometry = disk\nM = 1\nM = 2", "parse"),
])
def test_parse_errors(text, msg):
    with pytest.raises(ConfigError, match=msg):
        parse_config(text)


def test_json_summary_is_a_config():
    cfg = parse_config(SMALL)
    again = parse_config(json.dumps({"config": cfg.to_dict(), "other": 1}))
    assert again == cfg


def test_override_validates():
    cfg = parse_config(SMALL)
    assert cfg.override(seed=5, alpha=None).seed == 5
    with pytest.raises(ConfigError):
        cfg.override(M=-3)


def test_missing_config_file():
    with pytest.raises(ConfigError):
        load_config("no_such_config")


# ------------------------------------------------------------------ reports

def test_float_format_round_trips():
    for x in (0.1, 1 / 3, 2.1195e-3, 1e-300, -7.0):
        assert float(format_float(x)) == x
    assert format_float(1 / 3) == "0.33333333333333331"


def test_csv_text():
    text = csv_text(["a", "b", "c"], [(1, 0.5, "x"), (2, float("nan"), "")])
    assert text == "a,b,c\n1,0.5,x\n2,nan,\n"


def test_json_text_maps_nan_to_null():
    assert json.loads(json_text({"a": float("nan"), "b": [1.5]})) == {"a": None, "b": [1.5]}


def test_write_outputs_is_all_or_nothing(tmp_path):
    out = tmp_path / "o"
    with pytest.raises(TypeError):
        write_outputs(out, {"a.csv": "fine", "b.csv": 3})
    assert os.listdir(out) == []
    write_outputs(out, {"a.csv": "x\n"})
    assert (out / "a.csv").read_text() == "x\n"


# ------------------------------------------------------------------ solve

@pytest.fixture(scope="module")
def headline_out(tmp_path_factory):
    out = tmp_path_factory.mktemp("headline")
    assert main(["solve", "--config", "disk_5pct", "--out", str(out)]) == EXIT_OK
    return out


def test_solve_headline_outputs(headline_out):
    assert sorted(os.listdir(headline_out)) == ["lcurve.csv", "summary.json", "trace.csv"]
    s = json.loads((headline_out / "summary.json").read_text())
    assert s["config"]["M"] == 600 and s["config"]["N"] == 28 and s["config"]["R"] == 3.2
    assert s["config"]["delta"] == 0.05 and s["seed"] == 0
    assert 2.1195e-3 / 3 <= s["suitable_alpha"] <= 2.1195e-3 * 3
    trace = _read_csv(headline_out / "trace.csv")
    assert trace[0] == ["theta", "component", "u_N", "u_exact"] and len(trace) == 2001
    lc = _read_csv(headline_out / "lcurve.csv")
    assert lc[0][:4] == ["alpha", "residual_norm", "solution_norm", "curvature"] and len(lc) == 201
    assert float(lc[1][0]) > 0


def test_round_trip_from_summary(headline_out, tmp_path):
    out = tmp_path / "again"
    assert main(["solve", "--config", str(headline_out / "summary.json"), "--out", str(out)]) == EXIT_OK
    for name in ("trace.csv", "lcurve.csv", "summary.json"):
        assert (out / name).read_bytes() == (headline_out / name).read_bytes()


def test_alpha_zero_override(tmp_path):
    out = tmp_path / "a0"
    assert main(["solve", "--config", "disk_5pct", "--alpha", "0", "--out", str(out)]) == EXIT_OK
    s = json.loads((out / "summary.json").read_text())
    assert s["alpha"] == 0.0 and s["config"]["alpha"] == 0.0
    assert s["error_ratio_to_corner"] >= 10


def test_missing_geometry_exit_code_and_no_output(tmp_path, capsys):
    cfg = _write(tmp_path, "M = 100\nN = 20\n")
    out = tmp_path / "none"
    assert main(["solve", "--config", cfg, "--out", str(out)]) == EXIT_CONFIG
    assert not out.exists()
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["exit_code"] == EXIT_CONFIG and "geometry" in err["message"]


def test_numerical_failure_exit_code(tmp_path, capsys):
    cfg = _write(tmp_path, "geometry = disk\nM = 5\nN = 20\n")
    out = tmp_path / "none"
    assert main(["solve", "--config", cfg, "--out", str(out)]) == EXIT_NUMERICAL
    assert not out.exists()
    assert json.loads(capsys.readouterr().err.strip().splitlines()[-1])["error"] == "MfsError"


def test_io_failure_exit_code(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["solve", "--config", _write(tmp_path, SMALL), "--out", str(blocker)]) == EXIT_IO


def test_set_and_seed_overrides(tmp_path):
    out = tmp_path / "o"
    args = ["solve", "--config", _write(tmp_path, SMALL), "--out", str(out), "--seed", "9", "--set", "N=18",
            "--set", "solution=exp_trig"]
    assert main(args) == EXIT_OK
    s = json.loads((out / "summary.json").read_text())
    assert s["config"]["seed"] == 9 and s["config"]["N"] == 18
    assert main(args[:5] + ["--set", "bogus=1"]) == EXIT_CONFIG


def test_dump_matrix(tmp_path):
    out = tmp_path / "o"
    assert main(["solve", "--config", _write(tmp_path, SMALL), "--out", str(out), "--dump-matrix"]) == EXIT_OK
    rows = _read_csv(out / "matrix.csv")
    assert len(rows) == 200 and all(len(r) == 20 for r in rows)
    assert len(_read_csv(out / "rhs.csv")) == 200
    from mfs_cauchy import prepare

    A = prepare(load_config(_write(tmp_path, SMALL)).problem()).system.matrix
    assert all(float(v) == A[0, j] for j, v in enumerate(rows[0]))


# ------------------------------------------------------------------ sweep-noise

def test_sweep_noise_emits_fits(tmp_path):
    cfg = _write(tmp_path, SMALL + "\ndeltas = [1e-4, 1e-3, 1e-2, 1e-1]\nseeds = [0, 1]\n")
    out = tmp_path / "o"
    assert main(["sweep-noise", "--config", cfg, "--out", str(out)]) == EXIT_OK
    s = json.loads((out / "summary.json").read_text())
    assert {"slope", "intercept"} <= set(s["error_fit"]) and {"slope", "intercept"} <= set(s["alpha_fit"])
    assert len(_read_csv(out / "sweep.csv")) == 1 + 8


def test_sweep_noise_single_delta_warns(tmp_path, caplog):
    cfg = _write(tmp_path, SMALL + "\ndeltas = [0.01]\n")
    out = tmp_path / "o"
    assert main(["sweep-noise", "--config", cfg, "--out", str(out)]) == EXIT_OK
    s = json.loads((out / "summary.json").read_text())
    assert "error_fit" not in s and "alpha_fit" not in s
    assert "one noise level" in caplog.text


def test_sweep_noise_empty_deltas(tmp_path):
    out = tmp_path / "o"
    assert main(["sweep-noise", "--config", _write(tmp_path, SMALL), "--out", str(out)]) == EXIT_CONFIG
    assert not out.exists()


# ------------------------------------------------------------------ scan-params

def test_nr_scan_bundled_config_range():
    cfg = load_config("disk_NR_scan")
    assert min(cfg.N_values) == 10 and max(cfg.N_values) == 60
    assert min(cfg.R_values) == 2 and max(cfg.R_values) == 12


def test_scan_single_cell(tmp_path):
    cfg = _write(tmp_path, SMALL + "\nN_values = [20]\nR_values = [3.2]\n")
    out = tmp_path / "o"
    assert main(["scan-params", "--config", cfg, "--out", str(out)]) == EXIT_OK
    rows = _read_csv(out / "scan.csv")
    assert rows[0] == ["N", "R", "R_in", "max_relative_error", "suitable_alpha", "error"] and len(rows) == 2


def test_scan_invalid_radius_is_a_missing_cell(tmp_path):
    cfg = _write(tmp_path, SMALL + "\nN_values = [20]\nR_values = [0.5, 3.2]\n")
    out = tmp_path / "o"
    assert main(["scan-params", "--config", cfg, "--out", str(out)]) == EXIT_OK
    rows = _read_csv(out / "scan.csv")[1:]
    assert rows[0][3] == "nan" and "GeometryError" in rows[0][5]
    assert float(rows[1][3]) > 0
    assert json.loads((out / "summary.json").read_text())["failed_cells"] == 1


def test_scan_m_mode(tmp_path):
    cfg = _write(tmp_path, SMALL + "\nM_values = [50, 100]\n")
    out = tmp_path / "o"
    assert main(["scan-params", "--config", cfg, "--mode", "M", "--out", str(out)]) == EXIT_OK
    rows = _read_csv(out / "scan.csv")
    assert rows[0] == ["M", "max_relative_error", "suitable_alpha"] and [r[0] for r in rows[1:]] == ["50", "100"]


def test_console_script(tmp_path):
    out = tmp_path / "o"
    cfg = _write(tmp_path, SMALL)
    res = subprocess.run([sys.executable, "-m", "mfs_cauchy.cli", "solve", "--config", cfg, "--out", str(out)],
                         capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert (out / "summary.json").exists()
    res = subprocess.run([sys.executable, "-m", "mfs_cauchy.cli", "--list-configs"], capture_output=True, text=True)
    assert "disk_5pct.cfg" in res.stdout
