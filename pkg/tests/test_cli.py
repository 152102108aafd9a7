import csv
import io
import json

import numpy as np
import pytest

from waylab import cli


def run(args, capsys):
    code = cli.main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_lists():
    assert cli.parse_int_list("1..4") == [1, 2, 3, 4]
    assert cli.parse_int_list("1,3,5..6") == [1, 3, 5, 6]
    assert cli.parse_float_list("1, 2.5") == [1.0, 2.5]
    with pytest.raises(cli.UsageError):
        cli.parse_int_list("4..1")
    with pytest.raises(cli.UsageError):
        cli.parse_float_list("a,b")


def test_model_ohira_pearle(capsys):
    code, out, _ = run(["model", "ohira-pearle"], capsys)
    doc = json.loads(out)
    assert code == 0
    assert doc["verdict"]["accuracy_error"] <= 1e-10
    assert abs(doc["verdict"]["repeatability_defect"] - 0.5) <= 1e-10
    assert doc["mismatches"] == []
    assert doc["scheme"]["model"] == "ohira-pearle"


def test_model_swap_noise_is_zero(capsys):
    code, out, _ = run(["model", "swap", "--dim", "2"], capsys)
    noise = json.loads(out)["noise"]
    assert code == 0
    assert all(v == 0 for v in noise.values())


def test_model_wigner_optimize(capsys):
    code, out, _ = run(["model", "wigner-approx", "--n", "3", "--optimize"], capsys)
    assert code == 0
    assert abs(json.loads(out)["wigner"]["eta_sq"] - 0.2) <= 1e-6


def test_model_position(capsys, tmp_path):
    path = tmp_path / "p.json"
    code, _, _ = run(["model", "position", "--lambda", "2", "--out", str(path)], capsys)
    doc = json.loads(path.read_text())
    assert code == 0
    assert abs(doc["alpha"] - np.exp(-2)) <= doc["cell"]


def test_sweep_wigner(capsys):
    code, out, _ = run(["sweep", "wigner-approx", "--n", "1..6"], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert [int(r["n"]) for r in rows] == list(range(1, 7))
    for r in rows:
        assert abs(float(r["eta_sq"]) - 1 / (2 * int(r["n"]) - 1)) <= 1e-6


def test_sweep_position_header_and_values(capsys):
    code, out, _ = run(["sweep", "position", "--lambda", "1,2,4,8"], capsys)
    lines = out.splitlines()
    assert code == 0
    assert lines[0] == "lambda,alpha,beta,epsilon_sq,bound"
    rows = [list(map(float, l.split(","))) for l in lines[1:]]
    for lam, a, b, _, _ in rows:
        assert abs(a - np.exp(-lam)) < 1e-3 and abs(b - 1 / np.expm1(lam)) < 1e-3


def test_sweep_json_format(capsys):
    code, out, _ = run(["sweep", "swap", "--dim", "2,3", "--format", "json"], capsys)
    doc = json.loads(out)
    assert code == 0 and [r["dim"] for r in doc["rows"]] == [2, 3]


def test_sweep_is_byte_identical(tmp_path, capsys):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        assert run(["sweep", "wigner-approx", "--n", "1..3", "--seed", "4", "--out", str(p)], capsys)[0] == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_check_suite(capsys):
    code, out, err = run(["check", "--suite", "appendix"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["all_passed"]
    assert "PASS [ 8]" in err
    assert set(doc["criteria"][0]) == {"criterion", "name", "passed", "measured", "expected",
                                       "tolerance", "detail"}


def test_check_theorem_small(capsys):
    code, out, _ = run(["check", "--suite", "theorem", "--seeds", "10", "--format", "csv"], capsys)
    assert code == 0
    assert out.splitlines()[0] == "criterion,name,passed,measured,expected,tolerance"


def test_config_file_and_override(tmp_path, capsys):
    ini = tmp_path / "run.ini"
    ini.write_text("[run]\nmodel_name = position\nseed = 3\n[position]\nlambda = 1,2\n"
                   "ell = 2\ngrid.n = 2048\n")
    code, out, _ = run(["sweep", "--config", str(ini)], capsys)
    lines = out.splitlines()
    assert code == 0 and len(lines) == 3
    assert float(lines[1].split(",")[1]) == pytest.approx(2 * np.exp(-1), abs=1e-3)
    code, out, _ = run(["sweep", "--config", str(ini), "--ell", "1", "--lambda", "3"], capsys)
    lines = out.splitlines()
    assert len(lines) == 2
    assert float(lines[1].split(",")[1]) == pytest.approx(np.exp(-3), abs=1e-3)


@pytest.mark.parametrize("args", [
    [], ["model"], ["model", "nope"], ["model", "swap", "--bogus"],
    ["check", "--suite", "nope"], ["model", "swap", "--format", "csv"],
    ["model", "wigner-approx", "--n", "1,2"], ["model", "position", "--lambda", "-1"],
    ["sweep", "position", "--lambda", "x"],
])
def test_usage_errors_exit_1(args, capsys):
    with pytest.raises(SystemExit) as exc:
        code = cli.main(args)
        raise SystemExit(code)
    assert exc.value.code == 1


def test_bad_config_key(tmp_path, capsys):
    ini = tmp_path / "bad.ini"
    ini.write_text("[run]\ncolour = red\n")
    assert cli.main(["model", "swap", "--config", str(ini)]) == 1


def test_io_errors_exit_3(tmp_path, capsys):
    assert cli.main(["model", "swap", "--out", str(tmp_path / "no" / "x.json")]) == 3
    assert cli.main(["model", "swap", "--config", str(tmp_path / "missing.ini")]) == 3


def test_mismatch_exits_2(monkeypatch, capsys):
    from waylab import zoo
    real = zoo.ohira_pearle

    def wrong():
        b = real()
        exp = dict(b.expected, accuracy_error="positive")
        return zoo.ModelBundle(b.name, b.scheme, b.conserved, b.observable, b.target, exp, b.info)

    monkeypatch.setitem(zoo.REGISTRY, "ohira-pearle", lambda **kw: wrong())
    code, _, err = run(["model", "ohira-pearle"], capsys)
    assert code == 2 and "accuracy_error" in err
