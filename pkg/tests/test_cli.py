import json
import subprocess
import sys

import pytest

from calabigeo.cli import UsageError, main, parse_box, parse_point


def call(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, (json.loads(out.out) if out.out else None), out.err


def test_analyze_q_family(capsys):
    code, doc, _ = call(capsys, "analyze", "--catalog", "q-family", "--params", "c=1;n=2", "--point", "1,0")
    assert code == 0
    prof = doc["points"][0]["profile"]
    assert prof["mu1"] == pytest.approx(1.0, abs=1e-12)
    assert prof["case"] == "C_1" and prof["branch"] == "iii"


def test_analyze_paraboloid(capsys):
    code, doc, _ = call(capsys, "analyze", "--func", "x1^2/2+x2^2/2", "--point", "0,0")
    assert code == 0
    assert doc["points"][0]["profile"]["case"] == "C_0"
    assert doc["points"][0]["profile"]["branch"] == "i"


def test_analyze_not_convex(capsys):
    code, doc, err = call(capsys, "analyze", "--func", "ln(x1)", "--point", "1")
    assert code == 2
    assert doc["points"][0]["error"] == "not_convex"
    assert "not strictly convex" in err


def test_analyze_domain_error(capsys):
    code, doc, _ = call(capsys, "analyze", "--func", "-ln(x1)", "--point", "-1")
    assert code == 2 and doc["points"][0]["error"] == "domain"


def test_analyze_several_points(capsys):
    code, doc, _ = call(capsys, "analyze", "--catalog", "log-quadric", "--point", "0,0,2", "--point", "0.1,0.2,1.9")
    assert code == 0
    assert [p["profile"]["case"] for p in doc["points"]] == ["C_2", "C_2"]
    assert doc["points"][0]["scalar_R"] == pytest.approx(-2.0, abs=1e-12)


def test_verify_q_family(capsys):
    code, doc, _ = call(capsys, "verify", "--catalog", "q-family", "--params", "c=2,3;n=4",
                        "--box", "[1,2]^4", "--samples", "32", "--seed", "7")
    assert code == 0
    assert all(doc["verdicts"].values())


def test_verify_log_quadric_uses_catalog_box(capsys):
    code, doc, _ = call(capsys, "verify", "--catalog", "log-quadric", "--params", "lambda=1")
    assert code == 0
    assert doc["verdicts"]["parallel"] is True and doc["verdicts"]["flat"] is False
    code, _, err = call(capsys, "verify", "--catalog", "log-quadric", "--require", "all")
    assert code == 2 and "flat" in err


def test_verify_convexity_failure(capsys):
    code, doc, _ = call(capsys, "verify", "--func", "x1^4", "--box", "[-1,1]")
    assert code == 2
    assert doc["verdicts"]["convex"] is False
    assert doc["rejected"][0]["point"] == [0.0]


def test_catalog_list_and_get(capsys):
    code, doc, _ = call(capsys, "catalog", "list")
    names = [e["name"] for e in doc["entries"]]
    assert code == 0 and {"log-quadric", "mixed-R6", "thm47"} <= set(names)
    code, doc, _ = call(capsys, "catalog", "get", "log-quadric")
    assert code == 0 and doc["box"] == [[-0.5, 0.5], [-0.5, 0.5], [1.5, 2.5]]


def test_catalog_errors(capsys):
    assert call(capsys, "catalog", "get", "thm47", "--params", "n=3;R=0")[0] == 1
    assert call(capsys, "catalog", "get", "nope")[0] == 1


def test_product_join(capsys):
    code, doc, _ = call(capsys, "product", "join", "--factor", "x2^2/2", "--lambda", "1")
    assert code == 0 and doc["expr"] == "-ln(x1)+x2^2/2"
    code, doc, _ = call(capsys, "product", "join", "--factor", "-ln(x1)+x2^2/2", "--shift")
    assert doc["arity"] == 3
    assert call(capsys, "product", "join", "--factor", "x2^2/2", "--lambda", "0")[0] == 1


@pytest.mark.parametrize(
    "argv",
    [
        ["analyze", "--point", "1"],
        ["analyze", "--func", "x1^2", "--catalog", "q-family", "--point", "1"],
        ["analyze", "--func", "x1 +", "--point", "1"],
        ["analyze", "--func", "x1^2"],
        ["analyze", "--func", "x1^2", "--point", "1,2", "--arity", "1"],
        ["verify", "--func", "x1^2"],
        ["verify", "--func", "x1^2", "--box", "[0,1]", "--samples", "0"],
        ["verify", "--func", "x1^2", "--box", "[0,1]", "--tol", "-1"],
        ["verify", "--func", "x1^2", "--box", "[1,0]"],
        ["verify", "--func", "x1^2", "--box", "[0,1]", "--require", "bogus"],
    ],
)
def test_usage_errors(capsys, argv):
    assert main(argv) == 1
    assert capsys.readouterr().out == ""


def test_unknown_subcommand_exit_code():
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 1


def test_parse_helpers():
    assert parse_point("1, -2.5,3e-1") == [1.0, -2.5, 0.3]
    assert parse_box("[1,2]^3") == [(1.0, 2.0)] * 3
    assert parse_box("[0,1]x[-1,1]") == [(0.0, 1.0), (-1.0, 1.0)]
    for bad in ("[1,2", "[a,b]^2", "[1,2]^0"):
        with pytest.raises(UsageError):
            parse_box(bad)
    with pytest.raises(UsageError):
        parse_point("1,,2")


def test_json_file_output(tmp_path, capsys):
    path = tmp_path / "out.json"
    code = main(["analyze", "--func", "x1^2/2", "--point", "0.5", "--json", str(path)])
    assert code == 0
    assert capsys.readouterr().out == ""
    assert json.loads(path.read_text())["points"][0]["profile"]["case"] == "C_0"


def test_output_is_byte_identical_across_processes():
    argv = [sys.executable, "-m", "calabigeo", "verify", "--catalog", "log-det-sym", "--samples", "8", "--seed", "3"]
    runs = [subprocess.run(argv, capture_output=True, check=False) for _ in range(2)]
    assert runs[0].returncode == 0
    assert runs[0].stdout == runs[1].stdout and runs[0].stdout
