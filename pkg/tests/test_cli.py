import json
from fractions import Fraction
from pathlib import Path

import pytest
from jsonschema import Draft202012Validator

from app import run
from cli.formats import digest, format_instance, fraction_text, parse_instance, parse_matching, parse_point, parse_weights
from config import EXIT_NO_STABLE_MATCHING, EXIT_OK, EXIT_PRECONDITION, EXIT_USAGE, SCHEMA_FILE
from core.exceptions import ParseError
from core.model import Edge, Matching
from tests.instances import C6, EX1, LAT3, TRI_C4, TWO_C6
from utils.session import sessions

DATA = Path(__file__).resolve().parent.parent / "data"


def data(name: str) -> str:
    return str(DATA / name)


@pytest.fixture(scope="module")
def validator():
    return Draft202012Validator(json.loads(SCHEMA_FILE.read_text(encoding="utf-8")))


def run_text(capsys, *argv):
    code = run(list(argv))
    captured = capsys.readouterr()
    return code, captured.out.splitlines(), captured.err


def run_json(capsys, validator, *argv):
    code = run(["--json", *argv])
    report = json.loads(capsys.readouterr().out)
    validator.validate(report)
    return code, report


def test_solve_ex1(capsys):
    code, out, _ = run_text(capsys, "solve", data("ex1.sm"))
    assert code == EXIT_OK
    assert out == ["1 4", "2 5", "3 6"]


def test_solve_without_stable_matching(capsys):
    code, out, _ = run_text(capsys, "solve", data("nosm.sm"))
    assert code == EXIT_NO_STABLE_MATCHING
    assert out == ["no stable matching"]


def test_optimize_exact_c6(capsys):
    code, out, _ = run_text(capsys, "optimize", data("c6.sm"), "--weights", data("c6.w"), "--method", "exact")
    assert code == EXIT_OK
    assert out == ["1 6", "2 3", "4 5", "weight 3"]


def test_optimize_max_and_brute(capsys):
    code, out, _ = run_text(capsys, "optimize", data("c6.sm"), "--weights", data("c6.w"), "--max")
    assert code == EXIT_OK and out[-1] == "weight 7"
    code, out, _ = run_text(capsys, "optimize", data("c6.sm"), "--weights", data("c6.w"), "--method", "brute")
    assert code == EXIT_OK and out[-1] == "weight 3"


def test_optimize_approx_reports_bound(capsys, validator):
    code, out, _ = run_text(capsys, "optimize", data("2c6.sm"), "--weights", data("2c6.w"), "--method", "approx")
    assert code == EXIT_OK
    assert out[-2:] == ["weight 7", "bound 14"]
    code, report = run_json(capsys, validator, "optimize", data("2c6.sm"), "--weights", data("2c6.w"), "--method", "approx")
    result = report["result"]
    assert result["weight"] == "7/1"
    assert result["bound"] == "14/1"
    assert result["sharp_bound"] == "8/1"
    assert result["relaxation"] == "1/1"
    assert result["path"] == "rounded"
    assert result["used_fallback"] is False
    assert report["stats"] == {}


@pytest.mark.parametrize(
    "argv",
    [
        ["optimize", "lat3.sm", "--egalitarian", "--method", "approx"],
        ["optimize", "c6.sm", "--weights", "c6.w", "--method", "approx", "--max"],
    ],
)
def test_optimize_precondition_failures(capsys, argv):
    argv = [data(a) if a.endswith((".sm", ".w")) else a for a in argv]
    code, out, err = run_text(capsys, *argv)
    assert code == EXIT_PRECONDITION
    assert out == []
    assert "precondition failed" in err


def test_optimize_needs_weights(capsys):
    code, _, err = run_text(capsys, "optimize", data("c6.sm"))
    assert code == EXIT_USAGE
    assert "error" in err


def test_missing_weights_default_with_warning(capsys, validator, tmp_path):
    partial = tmp_path / "partial.w"
    partial.write_text("1 2 5\n", encoding="utf-8")
    code, report = run_json(capsys, validator, "optimize", data("c6.sm"), "--weights", str(partial))
    assert code == EXIT_OK
    assert report["warnings"] == ["5 edge(s) without weight default to 0"]
    assert report["result"]["weight"] == "0/1"


def test_check(capsys, tmp_path):
    code, out, _ = run_text(capsys, "check", data("ex1.sm"), data("ex1.m"))
    assert code == EXIT_OK and out == ["stable"]
    blocked = tmp_path / "blocked.m"
    blocked.write_text("1 2\n3 4\n", encoding="utf-8")
    code, out, _ = run_text(capsys, "check", data("nosm.sm"), str(blocked))
    assert code == EXIT_OK and out == ["blocked by 2-3"]


def test_check_rejects_foreign_edge(capsys, tmp_path):
    foreign = tmp_path / "foreign.m"
    foreign.write_text("1 6\n", encoding="utf-8")
    code, _, _ = run_text(capsys, "check", data("ex1.sm"), str(foreign))
    assert code == EXIT_USAGE


def test_reduce_emits(capsys, validator):
    code, out, _ = run_text(capsys, "reduce", data("ex1.sm"), "--emit", "em")
    assert code == EXIT_OK and out == ["1 4", "2 5", "3 6"]
    _, out, _ = run_text(capsys, "reduce", data("ex1.sm"), "--emit", "log")
    assert len(out) == 9
    _, out, _ = run_text(capsys, "reduce", data("ex1.sm"))
    assert out == ["1: 4", "2: 5", "3: 6", "4: 1", "5: 2", "6: 3"]
    _, out, _ = run_text(capsys, "reduce", data("ex1.sm"), "--emit", "gi")
    assert parse_instance("\n".join(out)).edge_set == EX1.edge_set - {Edge(1, 2), Edge(2, 3), Edge(4, 5)}
    code, report = run_json(capsys, validator, "reduce", data("ex1.sm"))
    assert report["result"]["h"] == [[1, 4], [2, 5], [3, 6]]
    assert sorted(map(tuple, report["result"]["phase_one_removed"])) == [(1, 2), (2, 3), (4, 5)]
    assert report["instance"]["agents"] == 6 and report["instance"]["edges"] == 12


def test_reducible(capsys, validator):
    code, out, _ = run_text(capsys, "reducible", data("ex1.sm"))
    assert code == EXIT_OK
    assert out == ["reducible: yes", "G_I bipartite: no"]
    _, report = run_json(capsys, validator, "reducible", data("c6.sm"))
    assert report["result"] == {"reducible": True, "gi_bipartite": True, "parts": [[1, 3, 5], [2, 4, 6]]}


def test_reducible_without_stable_matching(capsys):
    code, _, _ = run_text(capsys, "reducible", data("nosm.sm"))
    assert code == EXIT_NO_STABLE_MATCHING


def test_enumerate(capsys, validator):
    code, out, _ = run_text(capsys, "enumerate", data("lat3.sm"))
    assert code == EXIT_OK and len(out) == 3
    code, out, err = run_text(capsys, "enumerate", data("lat3.sm"), "--limit", "1")
    assert len(out) == 1
    assert "showing 1 of 3" in err
    code, report = run_json(capsys, validator, "enumerate", data("nosm.sm"))
    assert code == EXIT_NO_STABLE_MATCHING
    assert report["result"]["count"] == 0


def test_polytope(capsys, validator):
    code, out, _ = run_text(capsys, "polytope", data("ex1.sm"), "--point", data("ex1_y.pt"))
    assert code == EXIT_OK and out == ["member"]
    _, report = run_json(capsys, validator, "polytope", data("ex1.sm"), "--point", data("ex1_y.pt"))
    assert report["result"]["partition"] == {"singles": [], "cycles": [[1, 3, 5], [2, 4, 6]]}
    code, out, _ = run_text(
        capsys, "polytope", data("ex1.sm"), "--point", data("ex1_y.pt"), "--variant", "fsm-prime"
    )
    assert code == EXIT_OK
    assert out[0] == "not a member" and "zero[1-3]" in out
    code, _, _ = run_text(capsys, "polytope", data("ex1.sm"), "--point", data("ex1_x.pt"), "--variant", "fsm-bar")
    assert code == EXIT_OK
    code, _, err = run_text(capsys, "polytope", data("ex1.sm"), "--point", data("ex1_y.pt"), "--variant", "fsm-bar")
    assert code == EXIT_PRECONDITION


@pytest.mark.parametrize("extra,expected", [("1 2 0", EXIT_OK), ("1 2 1/2", EXIT_PRECONDITION)])
def test_fsm_bar_point_outside_em(capsys, tmp_path, extra, expected):
    point = tmp_path / "x.pt"
    point.write_text(Path(data("ex1_x.pt")).read_text(encoding="utf-8") + extra + "\n", encoding="utf-8")
    code, out, _ = run_text(capsys, "polytope", data("ex1.sm"), "--point", str(point), "--variant", "fsm-bar")
    assert code == expected
    if expected == EXIT_OK:
        assert out == ["member"]


def test_json_reports_are_deterministic(capsys):
    first = run(["--json", "reduce", data("ex1.sm")]), capsys.readouterr().out
    second = run(["--json", "reduce", data("ex1.sm")]), capsys.readouterr().out
    assert first == second


def test_usage_errors(capsys, tmp_path):
    assert run([]) == EXIT_USAGE
    assert run(["frobnicate"]) == EXIT_USAGE
    assert run(["solve", str(tmp_path / "missing.sm")]) == EXIT_USAGE
    bad = tmp_path / "bad.sm"
    bad.write_text("1: 2\n2:\n", encoding="utf-8")
    assert run(["solve", str(bad)]) == EXIT_USAGE
    capsys.readouterr()


def test_version(capsys):
    assert run(["--version"]) == EXIT_OK
    assert "roommates-reduce" in capsys.readouterr().out


def test_sessions_are_closed(capsys):
    run(["solve", data("ex1.sm")])
    capsys.readouterr()
    assert sessions == {}


@pytest.mark.parametrize("P", [EX1, C6, LAT3, TWO_C6, TRI_C4])
def test_instance_text_round_trip(P):
    assert parse_instance(format_instance(P)) == P
    assert digest(parse_instance(format_instance(P))) == digest(P)


def test_sample_file_matches_fixture():
    assert parse_instance(Path(data("ex1.sm")).read_text(encoding="utf-8")) == EX1


def test_parse_errors_carry_the_line():
    with pytest.raises(ParseError) as info:
        parse_instance("# header\n1: 2\n2 1\n", "x.sm")
    assert info.value.line == 3
    with pytest.raises(ParseError):
        parse_instance("1: 2\n1: 2\n2: 1\n")
    with pytest.raises(ParseError):
        parse_instance("1: 2\n2: x\n")


@pytest.mark.parametrize("text", ["1 3 1\n", "1 2 1\n1 2 2\n", "1 2 -1\n", "1 2 abc\n", "1 2\n"])
def test_bad_weight_files(text):
    with pytest.raises(ParseError):
        parse_weights(text, C6)


def test_weight_and_point_values():
    w = parse_weights("1 2 3/4\n2 3 1.5\n", C6)
    assert w[(1, 2)] == Fraction(3, 4) and w[(2, 3)] == Fraction(3, 2) and w[(3, 4)] == 0
    assert parse_point("1 3 1/2\n") == {Edge(1, 3): Fraction(1, 2)}
    assert parse_matching("1 4\n2 5\n") == Matching.of([(1, 4), (2, 5)])
    with pytest.raises(ParseError):
        parse_matching("1 4\n1 5\n")


def test_fraction_text():
    assert fraction_text(Fraction(3)) == "3/1"
    assert fraction_text(Fraction(-1, 2)) == "-1/2"
