import csv
import io
import json
import subprocess
import sys
from fractions import Fraction

import pytest

from hyperkernel import cli
from hyperkernel.kernels import KernelParams, k_eval
from hyperkernel.matelem import ChannelIndices, i2_table, i3_table
from hyperkernel.mpnum import PrecisionContext


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_parse_grid():
    assert cli.parse_grid("0:4:2", integer=True) == [0, 2, 4]
    assert cli.parse_grid("0.1,0.5") == [Fraction(1, 10), Fraction(1, 2)]
    assert cli.parse_grid("3") == [3]
    for bad in ("", "1,,2", "a", "1:2:0", "1:2:3:4", "3:1"):
        with pytest.raises(cli.UsageError):
            cli.parse_grid(bad)
    with pytest.raises(cli.UsageError):
        cli.parse_grid("0.5", integer=True)


def test_kernel_rows(capsys):
    code, out, _ = run(capsys, "kernel", "--m", "0", "--p", "5", "--beta", "1",
                       "--kappa", "0.1,0.5,0.9", "--precision", "128", "--tol", "1e-20")
    rows = rows_of(out)
    assert code == 0 and len(rows) == 3
    assert all(r["method"] in ("series", "closed_form", "quadrature_fallback") for r in rows)
    assert [r["kappa"] for r in rows] == ["0.1", "0.5", "0.9"]
    ctx = PrecisionContext(128, "1e-20")
    ref = k_eval(KernelParams(0, 5, 1, Fraction(1, 2)), ctx).value
    assert rows[1]["value"] == cli._fmt(ref, ctx)


def test_kernel_domain_error(capsys):
    code, out, _ = run(capsys, "kernel", "--m", "2", "--p", "4", "--beta", "1", "--kappa", "1.5",
                       "--precision", "128", "--tol", "1e-20")
    assert code == 2
    assert rows_of(out)[0]["status"] == "domain_error"


def test_usage_errors(capsys):
    code, _, err = run(capsys, "kernel", "--m", "0.5", "--p", "5", "--beta", "1", "--kappa", "0.1")
    assert code == 2 and "integers" in err
    code, _, err = run(capsys, "kernel", "--m", "0", "--p", "5", "--beta", "1", "--kappa", "0.1",
                       "--precision", "32")
    assert code == 2


def test_compare_skips_and_determinism(capsys):
    argv = ["compare", "--m", "0", "--p", "5", "--beta", "1", "--kappa", "1e-8,0.5",
            "--precision", "128", "--tol", "1e-20", "--no-timing"]
    code, out, _ = run(capsys, *argv)
    rows = rows_of(out)
    assert code == 0
    assert rows[0]["closed_form"] == "skipped-by-dispatcher"
    assert float(rows[1]["max_rel_dev"]) <= 1e-20
    assert "t_series" not in rows[0]
    _, again, _ = run(capsys, *argv)
    assert again == out
    code, out, _ = run(capsys, "compare", "--m", "0", "--p", "5", "--beta", "1", "--kappa", "1",
                       "--precision", "128", "--tol", "1e-20")
    row = rows_of(out)[0]
    assert row["series"] == row["closed_form"] == "skipped-by-dispatcher"
    assert "t_quadrature" in row


def test_cancel_scan(capsys):
    code, out, _ = run(capsys, "cancel-scan", "--m", "0:3", "--p", "5", "--beta", "1", "--kappa", "0.5",
                       "--precision", "128", "--tol", "1e-20")
    rows = rows_of(out)
    assert code == 0 and len(rows) == 4
    ratios = [float(r["cancellation_ratio"]) for r in rows]
    assert ratios == sorted(ratios)
    assert all(int(r["min_sufficient_bits"]) >= 64 for r in rows)


def test_laguerre_json(capsys):
    code, out, _ = run(capsys, "laguerre", "--k", "5", "--n1", "0:1", "--n2", "1", "--gamma", "0.1,1",
                       "--precision", "128", "--tol", "1e-20", "--format", "json")
    rows = json.loads(out)
    assert code == 0 and len(rows) == 4
    assert all(isinstance(v, str) for r in rows for v in r.values())
    assert all(float(r["rel_diff"]) < 1e-20 for r in rows)


def test_env_precision(capsys, monkeypatch):
    monkeypatch.setenv(cli.ENV_PRECISION, "100")
    assert cli.build_parser().parse_args(["kernel", "--m", "0", "--p", "1", "--beta", "1",
                                          "--kappa", "0.1"]).precision == 100


POT_BAD = [
    ("alpha = 1\n", "no channel"),
    ("channel = {A = 1, zeta = 1}\n", "missing 'alpha'"),
    ("alpha = 1\nchannel = {A = 1}\n", "missing zeta"),
    ("alpha = 1\nchannel = {A = x, zeta = 1}\n", "field 'A'"),
    ("alpha = 1\nchannel = A = 1\n", ":2:"),
    ("alpha = 1\nbeta = 2\n", "unknown key"),
    ("alpha = 1\nchannel = {A = 1, zeta = -1}\n", "positive"),
    ("alpha = 0\nchannel = {A = 1, zeta = 1}\n", "positive"),
]


@pytest.mark.parametrize("text,needle", POT_BAD)
def test_potential_parse_errors(text, needle):
    with pytest.raises(cli.UsageError, match=needle):
        cli.parse_potential(text, "m.txt")


def test_matel_single_and_linear(capsys, tmp_path):
    one = tmp_path / "one.txt"
    one.write_text("# unit amplitude\nalpha = 1\nchannel = {A = 1, zeta = 0.3}\n")
    two = tmp_path / "two.txt"
    two.write_text("alpha = 1\nchannel = {A = 1, zeta = 0.3}\nchannel = {A = -0.5, zeta = 0.3}\n")
    base = ["--n1", "0:1", "--precision", "80", "--tol", "1e-10"]
    code, out, _ = run(capsys, "matel", "--potential", str(one), *base)
    rows = rows_of(out)
    assert code == 0 and len(rows) == 2
    ctx = PrecisionContext(80, "1e-10")
    chans = [ChannelIndices(0, 0, 0, 0, n1, 0) for n1 in (0, 1)]
    t2 = i2_table(chans, Fraction(3, 10), ctx, tol="1e-10")
    t3 = i3_table(chans, Fraction(3, 10), ctx, tol="1e-10")
    for r, ch in zip(rows, chans):
        assert r["pair12"] == cli._fmt(t2[ch][0], ctx)
        assert r["pair13_23"] == cli._fmt(t3[ch][0], ctx)
    code, out, _ = run(capsys, "matel", "--potential", str(two), "--breakdown", *base)
    for r, r1 in zip(rows_of(out), rows):
        assert abs(float(r["pair12"]) - 0.5 * float(r1["pair12"])) < 1e-9 * abs(float(r1["pair12"]))
        assert r["I2_0"] == r1["pair12"]


def test_matel_errors(capsys, tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("alpha = 1\nchannel = {A = 1, zeta = nope}\n")
    code, _, err = run(capsys, "matel", "--potential", str(bad))
    assert code == 2 and "bad.txt:2" in err
    code, _, err = run(capsys, "matel", "--potential", str(tmp_path / "missing.txt"))
    assert code == 2
    code, _, err = run(capsys, "matel")
    assert code == 2


def test_out_file_and_module_entry(tmp_path):
    dest = tmp_path / "k.csv"
    res = subprocess.run([sys.executable, "-m", "hyperkernel", "kernel", "--m", "0", "--p", "5",
                          "--beta", "1", "--kappa", "0.5", "--precision", "96", "--tol", "1e-15",
                          "--out", str(dest)], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout == ""
    assert len(rows_of(dest.read_text())) == 1
