import csv
import io
import json
import subprocess
import sys

import pytest

from airy_process import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_painleve_table(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv(cli.CACHE_ENV, str(tmp_path))
    code, out, _ = run(capsys, "painleve-table", "--range", "-4", "8", "--step", "0.5")
    assert code == 0
    rows = rows_csv(out)
    assert rows[-1]["alpha"] == "8.0"
    assert abs(float(rows[-1]["q"]) + 4.692e-8) < 1e-10
    assert abs(float(rows[-1]["F2"]) - 1.0) < 1e-12
    F = [float(r["F2"]) for r in rows]
    assert all(a < b for a, b in zip(F, F[1:]) if b < 1.0)
    assert all(r["spec_version"] == cli.SCHEMA_VERSION for r in rows)
    assert list(tmp_path.glob("painleve-*.npz"))
    # second run reads the cache and is bitwise identical
    code2, out2, _ = run(capsys, "painleve-table", "--range", "-4", "8", "--step", "0.5")
    assert code2 == 0 and out2 == out


def test_cached_solution_equals_fresh(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.CACHE_ENV, str(tmp_path))
    first = cli.load_solution()
    second = cli.load_solution()
    assert (first.q == second.q).all() and first.alpha_min == second.alpha_min


def test_joint_exact_initial_condition(capsys, sol):
    code, out, _ = run(capsys, "joint", "--t", "0.01", "--u", "0", "--v", "1", "--format", "json")
    rec = json.loads(out)
    assert code == 0 and rec["spec_version"] == cli.SCHEMA_VERSION
    assert abs(rec["value"] - sol.f2_cdf(0.0)) <= 1e-3


def test_joint_series_against_exact(capsys):
    _, out4, _ = run(capsys, "joint", "--t", "8", "--u", "0", "--v", "0", "--method", "series4", "--format", "json")
    _, outx, _ = run(capsys, "joint", "--t", "8", "--u", "0", "--v", "0", "--method", "exact", "--format", "json")
    assert abs(json.loads(out4)["value"] - json.loads(outx)["value"]) <= 5e-5


def test_joint_mc_reproducible(capsys):
    args = ("joint", "--t", "1", "--u", "0", "--v", "0", "--method", "mc", "--n", "12", "--samples", "300", "--seed", "5")
    _, a, _ = run(capsys, *args)
    _, b, _ = run(capsys, *args)
    assert a == b


def test_pde_residual_rows(capsys):
    code, out, _ = run(capsys, "pde-residual", "--t", "6", "--u-range", "0", "0.1", "--v-range", "-0.5", "-0.5",
                       "--mesh", "0.05", "--source", "series", "--form", "xy")
    rows = rows_csv(out)
    assert code == 0 and len(rows) == 3
    assert all(float(r["relative_residual"]) < 0.05 for r in rows)


def test_c_constant_record(capsys):
    code, out, _ = run(capsys, "c-constant", "--format", "json")
    rec = json.loads(out)
    assert code == 0 and rec["relative_change"] < 1e-4 and rec["c"] < 0


def test_covariance_record(capsys):
    code, out, _ = run(capsys, "covariance", "--t", "6", "--window", "8", "--mesh", "0.25")
    rec = rows_csv(out)[0]
    assert code == 0 and float(rec["covariance"]) > 0


def test_mc_validate(capsys):
    code, out, _ = run(capsys, "mc-validate", "--n", "30", "--samples", "400", "--grid", "0", "--seed", "3")
    rows = rows_csv(out)
    assert code == 0 and len(rows) == 1
    assert {"empirical", "stderr", "exact", "series4", "marginal_sup_distance"} <= set(rows[0])


def test_output_file(capsys, tmp_path):
    path = tmp_path / "t.csv"
    code, out, _ = run(capsys, "joint", "--t", "2", "--u", "0", "--v", "0", "--method", "series2", "-o", str(path))
    assert code == 0 and out == ""
    assert rows_csv(path.read_text())[0]["method"] == "series2"


def test_errors_give_nonzero_exit(capsys):
    code, _, err = run(capsys, "painleve-table", "--range", "3", "1")
    assert code == 1 and "error" in err
    code, _, _ = run(capsys, "joint", "--t", "1", "--u", "-11", "--v", "0")
    assert code == 1
    with pytest.raises(SystemExit) as exc:
        cli.main(["joint", "--t", "1", "--u", "0", "--v", "0", "--method", "bogus"])
    assert exc.value.code == 2


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "airy_process.cli", "joint", "--t", "4", "--u", "0", "--v", "0",
                           "--method", "series2", "--format", "json"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["method"] == "series2"
