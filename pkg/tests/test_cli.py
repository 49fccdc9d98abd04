import csv
import json
import math

import mpmath
import pytest

from hml import cli
from hml.records import VerificationRecord, fmt_num, plain, rows_csv


def run(tmp_path, *args):
    out = tmp_path / "out.csv"
    code = cli.main([*args, "--cache-dir", str(tmp_path / "cache"), "--out", str(out)])
    return code, out


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_missing_weights_is_config_error(tmp_path, capsys):
    assert cli.main(["eigen", "--k", ""]) == 1
    assert "--k" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [["eigen", "--k", "13"], ["eigen", "--k", "10"], ["nope"],
                                  ["moments", "--k", "24", "--jobs", "0"],
                                  ["moments", "--k", "24", "--delta-rule", "explicit"],
                                  ["eigen", "--k", "24", "--prec-bits", "32"]])
def test_bad_arguments(argv):
    assert cli.main(argv) == 1


def test_eigen_writes_normalized_rows(tmp_path):
    code, out = run(tmp_path, "eigen", "--k", "12,24", "--nmax", "50")
    assert code == 0
    rows = read_csv(out)
    assert [r["k"] for r in rows] == ["12", "24", "24"]
    assert all(float(r["lambda1"]) == 1.0 and r["status"] == "PASS" for r in rows)
    lam2 = -24 / 2 ** 5.5
    assert float(rows[0]["lambda2"]) == pytest.approx(lam2, rel=1e-15)


def test_weights_json(tmp_path):
    out = tmp_path / "w.json"
    assert cli.main(["weights", "--k", "24", "--format", "json", "--out", str(out),
                     "--cache-dir", str(tmp_path)]) == 0
    body = json.loads(out.read_text())
    assert len(body["rows"]) == 2
    assert all(r["pass"] for r in body["records"])
    # the weights sum to the (1, 1) trace, which differs from 1 by the Kloosterman terms
    norm = body["records"][0]
    assert sum(r["weight"] for r in body["rows"]) == pytest.approx(norm["rhs"], rel=1e-12)
    assert abs(norm["rhs"] - 1) < 1e-3


def test_jobs_do_not_change_output(tmp_path):
    outs, codes = [], []
    for jobs in ("1", "2"):
        out = tmp_path / f"m{jobs}.csv"
        codes.append(cli.main(["moments", "--k", "12,16", "--x-count", "2", "--jobs", jobs, "--out", str(out),
                               "--cache-dir", str(tmp_path / "c")]))
        outs.append(out.read_bytes())
    assert codes[0] == codes[1] and codes[0] in (0, 2)
    assert outs[0] == outs[1]
    assert len(outs[0].splitlines()) == 5


def test_offdiag_inadmissible_rows(tmp_path):
    code, out = run(tmp_path, "offdiag-check", "--k", "40", "--x-count", "1", "--delta-rule", "explicit",
                    "--delta", "3")
    assert code == 0
    rows = read_csv(out)
    assert any(r["quantity"] == "inadmissible" for r in rows)


def test_x_grid_and_delta_rules():
    xs = cli.x_grid(40, 3)
    base = 1600 / (8 * math.pi ** 2)
    assert xs[0] == pytest.approx(base) and xs[2] == pytest.approx(base * (1 + math.sqrt(2)))
    cfg = cli.RunConfig("moments", (40,))
    assert cli.delta_for(cfg, 40, 100.0) == pytest.approx(10 * 40 ** 0.6)
    cfg = cli.RunConfig("moments", (40,), delta_rule="x23k13", epsilon=0.01)
    assert cli.delta_for(cfg, 40, 1000.0) == pytest.approx(100 * 40 ** (1 / 3 - 0.01))
    cfg = cli.RunConfig("moments", (40,), delta_rule="explicit", delta=7.0)
    assert cli.delta_for(cfg, 40, 1000.0) == 7.0


def test_config_validation():
    cli.RunConfig("accept").validate()
    for bad in (cli.RunConfig("moments", (40,), epsilon=1.5), cli.RunConfig("moments", (40,), format="xml"),
                cli.RunConfig("moments", (40,), x_count=0)):
        with pytest.raises(cli.ConfigError):
            bad.validate()


def test_number_formatting():
    assert fmt_num(0.1) == "0.1"
    assert fmt_num(float("inf")) == "inf" and fmt_num(float("nan")) == "nan"
    with mpmath.workprec(200):
        third = mpmath.mpf(1) / 3
    assert fmt_num(third) == repr(1 / 3)
    assert plain({"a": (1, 2.5, 1 + 2j)}) == {"a": [1, 2.5, [1.0, 2.0]]}
    text = rows_csv(("k", "v"), [(12, 0.5), (14, "x")], hex_columns=())
    assert text == "k,v\n12,0.5\n14,x\n"
    assert rows_csv(("v",), [(0.5,)], ("v",)) == "v,v_hex\n0.5,0x1.0000000000000p-1\n"


def test_record_round_trip():
    r = VerificationRecord.bound("c", {"k": 12}, 0.5, 1.0)
    assert r.passed
    assert VerificationRecord.from_dict(r.to_dict()) == r
    assert not VerificationRecord.bound("c", {}, 2, 1).passed
