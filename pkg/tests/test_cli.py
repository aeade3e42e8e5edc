import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from subconvex import cli, lfunc, suites
from subconvex.chars import enumerate_characters
from subconvex.qexp import PrecisionError, expand_eta_quotient, normalized_coeffs


def _rows(text):
    return list(csv.reader(io.StringIO(text)))


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_coeffs_table(capsys):
    code, out, _ = run(capsys, "coeffs", "eta(8z)^3", "30")
    rows = _rows(out)
    assert code == 0 and rows[0] == ["n", "a_n"]
    table = {int(n): int(a) for n, a in rows[1:]}
    assert table[1] == 1 and table[9] == -3 and table[25] == 5
    assert sum(1 for v in table.values() if v) == 3


def test_usage_errors(capsys):
    assert run(capsys, "coeffs", "eta(8z", "30")[0] == cli.EXIT_USAGE
    assert run(capsys, "coeffs", "eta(8z)^3", "-1")[0] == cli.EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        cli.main(["no-such-command"])
    assert exc.value.code == cli.EXIT_USAGE
    assert run(capsys, "lvalue", "eta(8z)^3", "--Q", "1", "--s", "3x")[0] == cli.EXIT_USAGE


def test_lvalue_matches_direct_series(capsys):
    code, out, _ = run(capsys, "lvalue", "eta(8z)^3", "--Q", "5", "--s", "3")
    assert code == 0
    rows = _rows(out)
    assert rows[0] == ["Q", "chi_index", "s_re", "s_im", "L_re", "L_im", "Lstar_re", "Lstar_im",
                       "truncation_error", "split_point"]
    f = expand_eta_quotient("eta(8z)^3", 20_000)
    A = normalized_coeffs(f)
    n = np.arange(1, A.size)
    for r in rows[1:]:
        chi = enumerate_characters(5)[int(r[1])]
        ref = np.sum(A[1:] * chi.values[n % 5] / n**3.0)
        assert abs(complex(float(r[4]), float(r[5])) - ref) < 1e-10


def test_lvalue_precision_failure(capsys):
    code, _, err = run(capsys, "lvalue", "eta(8z)^3", "--Q", "101", "--budget", "50")
    assert code == cli.EXIT_PRECISION and "precision" in err


def _scan_args(tmp_path, name, *extra):
    return ["scan", "--q-min", "11", "--q-max", "31", "--budget", "20000", "--out", str(tmp_path / name), *extra]


def test_scan_deterministic_across_workers(tmp_path, capsys):
    assert run(capsys, *_scan_args(tmp_path, "a.csv"))[0] == 0
    assert run(capsys, *_scan_args(tmp_path, "b.csv", "--workers", "2"))[0] == 0
    a = (tmp_path / "a.csv").read_text()
    assert a == (tmp_path / "b.csv").read_text()
    rows = _rows(a)
    assert rows[0] == cli.SCAN_HEADER
    assert sorted({int(r[0]) for r in rows[1:]}) == [11, 13, 17, 19, 23, 29, 31]
    assert all(r[2] == "ok" for r in rows[1:])
    png = tmp_path / "a.png"
    assert png.exists() and png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_scan_rows_match_library(tmp_path, capsys):
    run(capsys, *_scan_args(tmp_path, "c.csv", "--no-plot"))
    rows = _rows((tmp_path / "c.csv").read_text())
    assert not (tmp_path / "c.png").exists()
    f = expand_eta_quotient("eta(8z)^3", 20_000)
    chi = enumerate_characters(13)[3]
    ref = lfunc.central_value(f, chi)
    row = next(r for r in rows[1:] if r[0] == "13" and r[1] == "3")
    assert float(row[3]) == pytest.approx(abs(ref), rel=1e-12)


def test_scan_config_and_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"q_min": 11, "q_max": 13, "budget": 20000, "characters": "sample:2", "seed": 4}))
    code, _, err = run(capsys, "scan", "--config", str(cfg), "--out", str(tmp_path / "s.csv"), "--no-plot")
    rows = _rows((tmp_path / "s.csv").read_text())
    assert code == 0 and len(rows) == 1 + 4
    summary = json.loads(err.strip().splitlines()[-1])
    assert summary["seed"] == 4 and summary["n_moduli"] == 2
    run(capsys, "scan", "--config", str(cfg), "--seed", "5", "--q-max", "11", "--out", str(tmp_path / "t.csv"),
        "--no-plot")
    assert len(_rows((tmp_path / "t.csv").read_text())) == 1 + 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"q_minimum": 3}))
    assert run(capsys, "scan", "--config", str(bad))[0] == cli.EXIT_USAGE


def test_scan_empty_and_single(tmp_path, capsys):
    code, out, err = run(capsys, "scan", "--q-min", "24", "--q-max", "28")
    assert code == 0 and _rows(out) == [cli.SCAN_HEADER]
    assert json.loads(err.strip().splitlines()[-1])["exponent"] is None
    code, out, err = run(capsys, "scan", "--q-min", "11", "--q-max", "11", "--budget", "20000")
    assert code == 0 and len(_rows(out)) == 1 + 9
    assert json.loads(err.strip().splitlines()[-1])["exponent"] is None


def test_scan_budget_invariant(capsys):
    assert run(capsys, "scan", "--q-min", "101", "--q-max", "101", "--budget", "1000")[0] == cli.EXIT_USAGE


def test_scan_precision_rows(tmp_path, capsys, monkeypatch):
    real = lfunc.central_values_all

    def flaky(f, Q, chars):
        if Q == 13:
            raise PrecisionError("forced")
        return real(f, Q, chars)

    monkeypatch.setattr(lfunc, "central_values_all", flaky)
    code, out, err = run(capsys, "scan", "--q-min", "11", "--q-max", "17", "--budget", "20000")
    assert code == cli.EXIT_PRECISION
    rows = _rows(out)
    bad = [r for r in rows[1:] if r[0] == "13"]
    assert bad and all(r[2] == "precision_error" and r[3] == "nan" for r in bad)
    assert {r[0] for r in rows[1:]} == {"11", "13", "17"}
    assert json.loads(err.strip().splitlines()[-1])["n_failed"] == len(bad)


def test_verify_exit_codes(capsys, monkeypatch):
    code, out, _ = run(capsys, "verify", "shifted")
    assert code == 0 and json.loads(out)["passed"] is True
    monkeypatch.setitem(suites.SUITES, "shifted",
                        lambda: [suites.CheckResult("shifted", "forced", 1.0, 0.0)])
    code, out, _ = run(capsys, "verify", "shifted")
    assert code == cli.EXIT_SUITE and json.loads(out)["passed"] is False


def test_amplify_row(capsys):
    code, out, _ = run(capsys, "amplify", "eta(8z)^3", "--Q", "11", "--chi", "1", "--X", "200", "--L", "3")
    assert code == 0
    rows = _rows(out)
    assert rows[0] == ["Q", "chi_index", "X", "L", "S", "bound", "a_zero_term", "exact_residual", "slack", "scale"]
    r = dict(zip(rows[0], rows[1]))
    assert float(r["S"]) == pytest.approx(541.2966115331978, rel=1e-9)
    assert float(r["slack"]) >= 0


def test_shifted_rows(capsys):
    code, out, _ = run(capsys, "shifted", "eta(8z)^3", "--Q", "11", "--l1", "3", "--l2", "5", "--m-max", "1500")
    rows = _rows(out)
    assert code == 0 and rows[0] == ["method", "re", "im", "tail", "terms"]
    vals = {r[0]: complex(float(r[1]), float(r[2])) for r in rows[1:]}
    assert len(vals) >= 2
    a, b = list(vals.values())[:2]
    assert abs(a - b) <= 1e-10 * abs(a)


def test_selberg_tables(tmp_path, capsys):
    code, _, _ = run(capsys, "selberg", "--T", "3", "--side", "h", "--t-max", "8", "--points", "9",
                     "--out", str(tmp_path / "h.csv"))
    rows = _rows((tmp_path / "h.csv").read_text())
    assert code == 0 and rows[0] == ["t", "h", "h_three_step", "h_single_step"]
    for r in rows[1:]:
        h, a, b = map(float, r[1:])
        assert abs(a - h) < 1e-6 and abs(b - h) < 1e-6
    assert (tmp_path / "h.png").exists()
    code, out, _ = run(capsys, "selberg", "--T", "3", "--side", "k", "--points", "5")
    assert code == 0 and _rows(out)[0] == ["r", "g", "k"]


def test_geom_check_rows(capsys):
    code, out, _ = run(capsys, "geom-check", "eta(8z)^3", "--rho", "0.2", "0.4")
    rows = _rows(out)
    assert code == 0 and rows[0] == ["rho", "B_series", "B_direct", "B_bound"]
    for r in rows[1:]:
        s, d, b = map(float, r[1:])
        assert abs(s - d) < 1e-10 and abs(s) <= b
    assert run(capsys, "geom-check", "eta(8z)^3", "--rho", "0.97")[0] == cli.EXIT_USAGE


def test_mfun_rows(capsys):
    code, out, _ = run(capsys, "mfun", "--s", "2", "--t", "1", "--delta", "0.1")
    rows = _rows(out)
    assert code == 0 and rows[0] == ["method", "re", "im"]
    vals = [complex(float(r[1]), float(r[2])) for r in rows[1:]]
    assert len(vals) == 3 and max(abs(v - vals[0]) for v in vals) < 1e-6 * abs(vals[0])
    # s = 1 is a removable singularity of the hypergeometric forms
    code, out, _ = run(capsys, "mfun", "--s", "1", "--t", "1", "--delta", "0.1")
    vals = [float(r[1]) for r in _rows(out)[1:]]
    assert code == 0 and max(vals) - min(vals) < 1e-12 * abs(vals[0])


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "subconvex.cli", "coeffs", "eta(8z)^3", "10"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.splitlines()[0] == "n,a_n"
    proc = subprocess.run([sys.executable, "-m", "subconvex.cli", "coeffs"], capture_output=True, text=True)
    assert proc.returncode == 1
